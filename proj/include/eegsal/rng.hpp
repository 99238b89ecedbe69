#ifndef EEGSAL_RNG_HPP
#define EEGSAL_RNG_HPP

#include <cmath>
#include <cstdint>

namespace eegsal {

// Counter-based generator: every draw is a pure function of (seed, stream, counter),
// so data order and noise are reproducible independent of batching or threading.
// Mixing is splitmix64.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
  public:
    explicit Rng(uint64_t seed, uint64_t stream = 0) : state_(mix64(mix64(seed) ^ mix64(stream ^ 0x5bf0363546290e3fULL))) {}

    uint64_t next_u64() {
        state_ = mix64(state_);
        return state_;
    }

    // uniform in [0, 1)
    double uniform() { return (double)(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    uint64_t uniform_int(uint64_t n) { return next_u64() % n; }

    // Box-Muller; does not depend on implementation-defined std distributions.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        // avoid log(0)
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Fresh stream keyed by (seed, step, index); used for per-step timestep and noise draws.
inline Rng step_rng(uint64_t seed, uint64_t step, uint64_t index) {
    return Rng(seed, mix64(step) ^ mix64(index ^ 0x9d8a7f6e5c4b3a21ULL));
}

}  // namespace eegsal

#endif
