#pragma once

#include <cstdint>
#include <random>

#include "cqte/errors.hpp"

namespace cqte {

//! Quantile function of the standard normal distribution (Wichura's AS 241,
//! PPND16 constants; absolute error below 1e-15 over (0,1)).
double normal_quantile(double p);

//! splitmix64 finalizer; used to derive independent per-replicate seeds from
//! (master seed, replicate index) so streams are reproducible everywhere.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(master + 0x9e3779b97f4a7c15ULL * (index + 1));
}

//! Deterministic random stream. std::mt19937_64 output is fully specified by
//! the standard, and all variates are produced by inversion, so a given seed
//! yields the same draws on every platform and thread count.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    //! Uniform on the open interval (0,1).
    double uniform01() {
        const std::uint64_t x = gen_();
        return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    //! Standard normal by inverse-CDF transform.
    double normal() { return normal_quantile(uniform01()); }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return uniform01() < p; }

    //! Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)) % n;
    }

private:
    std::mt19937_64 gen_;
};

} // namespace cqte
