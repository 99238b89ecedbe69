#ifndef EEGSAL_TENSOR_HPP
#define EEGSAL_TENSOR_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace eegsal {

// Dense row-major tensor of doubles. Shape is a plain vector of dims.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(numel_of(shape), 0.0) {}
    Tensor(std::vector<int> s, std::vector<double> data) : shape(std::move(s)), v(std::move(data)) {
        if ((int64_t)v.size() != numel_of(shape))
            throw std::invalid_argument("tensor: data size does not match shape");
    }

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            if (d <= 0) throw std::invalid_argument("tensor: non-positive dim");
            n *= d;
        }
        return n;
    }

    int64_t numel() const { return (int64_t)v.size(); }
    int dim(int i) const { return shape[(size_t)i]; }

    double& at2(int i, int j) { return v[(size_t)(i * shape[1] + j)]; }
    double at2(int i, int j) const { return v[(size_t)(i * shape[1] + j)]; }
    double& at3(int c, int y, int x) { return v[(size_t)((c * shape[1] + y) * shape[2] + x)]; }
    double at3(int c, int y, int x) const { return v[(size_t)((c * shape[1] + y) * shape[2] + x)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string r = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) r += "x";
        r += std::to_string(s[i]);
    }
    return r + "]";
}

inline void require_shape(const Tensor& t, const std::vector<int>& s, const char* what) {
    if (t.shape != s)
        throw std::invalid_argument(std::string(what) + ": expected " + shape_str(s) + " got " +
                                    shape_str(t.shape));
}

}  // namespace eegsal

#endif
