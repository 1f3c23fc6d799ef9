#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace hermeq {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Seeded random stream: mt19937_64 plus an explicit uniform-to-normal
/// transform, so the draw sequence is identical on every platform.
/// derive() spawns statistically independent child streams from the
/// parent's seed and a tag; derivation ignores how much the parent has
/// already consumed.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed)
        : seed_(seed), engine_(splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    RandomStream derive(std::uint64_t tag) const {
        return RandomStream(splitmix64(seed_ ^ splitmix64(tag ^ 0xD1B54A32D192ED03ull)));
    }

    std::uint64_t next_u64() { return engine_(); }

    // uniform on (0, 1]; never returns 0 so log() below is safe
    double uniform_pos() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    // uniform on [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Box-Muller; the second value of each pair is cached
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    // categorical draw from cumulative weights; returns index in [0, size)
    int categorical(const Eigen::VectorXd& cumulative) {
        const double u = uniform();
        for (int i = 0; i < cumulative.size(); ++i) {
            if (u < cumulative[i]) return i;
        }
        return static_cast<int>(cumulative.size()) - 1;
    }

    Eigen::VectorXd normal_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    // row-major fill order: matrices are reproducible independently of
    // Eigen's default storage
    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
        return m;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace hermeq
