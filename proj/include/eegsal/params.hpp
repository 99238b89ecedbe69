#ifndef EEGSAL_PARAMS_HPP
#define EEGSAL_PARAMS_HPP

#include <map>
#include <string>

#include "eegsal/rng.hpp"
#include "eegsal/tensor.hpp"

namespace eegsal {

// Named parameter table. Ordered map so iteration (serialization, hashing,
// optimizer sweeps) is deterministic.
class ParamStore {
  public:
    Tensor& add(const std::string& name, Tensor init, bool trainable = true) {
        if (params_.count(name)) throw std::invalid_argument("param already exists: " + name);
        grads_[name] = Tensor(init.shape);
        trainable_[name] = trainable;
        return params_[name] = std::move(init);
    }

    bool has(const std::string& name) const { return params_.count(name) != 0; }

    Tensor& param(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw std::invalid_argument("no such param: " + name);
        return it->second;
    }
    const Tensor& param(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end()) throw std::invalid_argument("no such param: " + name);
        return it->second;
    }
    Tensor& grad(const std::string& name) { return grads_.at(name); }

    bool is_trainable(const std::string& name) const { return trainable_.at(name); }
    void set_trainable(const std::string& name, bool t) { trainable_.at(name) = t; }
    void freeze_all() {
        for (auto& [k, v] : trainable_) v = false;
    }

    void zero_grad() {
        for (auto& [k, g] : grads_) g.fill(0.0);
    }

    std::map<std::string, Tensor>& params() { return params_; }
    const std::map<std::string, Tensor>& params() const { return params_; }

    int64_t count_scalars(bool trainable_only) const {
        int64_t n = 0;
        for (auto& [k, t] : params_)
            if (!trainable_only || trainable_.at(k)) n += t.numel();
        return n;
    }

  private:
    std::map<std::string, Tensor> params_;
    std::map<std::string, Tensor> grads_;
    std::map<std::string, bool> trainable_;
};

// Scaled-uniform fan-in initializer: U(-s, s) with s = 1/sqrt(fan_in).
inline Tensor init_uniform(std::vector<int> shape, int fan_in, Rng& rng, double gain = 1.0) {
    Tensor t(std::move(shape));
    double s = gain / std::sqrt((double)std::max(1, fan_in));
    for (auto& x : t.v) x = rng.uniform(-s, s);
    return t;
}

inline Tensor init_normal(std::vector<int> shape, double std_dev, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& x : t.v) x = std_dev * rng.normal();
    return t;
}

}  // namespace eegsal

#endif
