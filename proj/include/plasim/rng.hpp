#pragma once

#include <cmath>
#include <cstdint>

namespace plasim {

// splitmix64: used to expand one master seed into independent stream seeds
// (e.g. per-trial seeds). Stateless step on a counter.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// xoshiro256** seeded via splitmix64. All sampling is hand-rolled so that
// streams are bit-identical across platforms and standard libraries; the
// std:: distributions make no such guarantee.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

    // Box-Muller; the spare cosine branch is cached.
    double normal(double mean = 0.0, double sigma = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + sigma * spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return mean + sigma * r * std::cos(a);
    }

    double exponential(double rate) {
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return -std::log(u) / rate;
    }

    // Poisson by CDF inversion for small means, transformed rejection
    // (Hormann's PTRS) above. Both are O(1) per draw and consume a bounded
    // number of uniforms, so streams stay reproducible; byte-identical
    // replay is guaranteed per platform (libm enters via log/lgamma here
    // exactly as it does via Box-Muller above).
    std::uint64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda <= 30.0) return poisson_inversion(lambda);
        return poisson_ptrs(lambda);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t poisson_inversion(double lambda) {
        const double u = uniform();
        double p = std::exp(-lambda);
        double cdf = p;
        std::uint64_t k = 0;
        // exp(-30) ~ 9.4e-14 is comfortably representable; the loop
        // terminates well before the hard cap for any u < 1.
        while (u > cdf && k < 2000) {
            ++k;
            p *= lambda / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

    std::uint64_t poisson_ptrs(double lambda) {
        const double loglam = std::log(lambda);
        const double b = 0.931 + 2.53 * std::sqrt(lambda);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = uniform() - 0.5;
            double v = uniform();
            const double us = 0.5 - std::abs(u);
            const double kf =
                std::floor((2.0 * a / us + b) * u + lambda + 0.43);
            if (us >= 0.07 && v <= v_r)
                return static_cast<std::uint64_t>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v) + std::log(inv_alpha) -
                    std::log(a / (us * us) + b) <=
                kf * loglam - lambda - std::lgamma(kf + 1.0))
                return static_cast<std::uint64_t>(kf);
        }
    }

    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace plasim
