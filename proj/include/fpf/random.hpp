#pragma once

// Reproducible randomness. SplitMix64 is counter-based: the k-th output of a
// stream is mix(seed + k * 0x9e3779b97f4a7c15), so independent streams are
// derived by hashing (seed, stream index) into a fresh seed. Normal variates
// use Box-Muller so results are bit-identical across standard libraries.

#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "fpf/dynamics.hpp"
#include "fpf/linalg.hpp"

namespace fpf {

class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    /// Seed of the independent stream `index` derived from `seed`.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
        return mix(mix(seed ^ 0x6a09e667f3bcc909ULL) + (index + 1) * 0xd1b54a32d192ed03ULL);
    }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline Complex random_complex_normal(SplitMix64& rng) {
    const double re = rng.normal();
    const double im = rng.normal();
    return {re, im};
}

inline StateVector random_state(SplitMix64& rng, Eigen::Index dim) {
    StateVector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = random_complex_normal(rng);
    return v / v.norm();
}

/// GUE-like Hermitian matrix scaled by `scale`.
inline Matrix random_hermitian(SplitMix64& rng, Eigen::Index dim, double scale = 1.0) {
    Matrix a(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        for (Eigen::Index i = 0; i < dim; ++i) a(i, j) = random_complex_normal(rng);
    }
    return 0.5 * scale * (a + a.adjoint());
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the R-diagonal phases removed.
inline Matrix random_unitary(SplitMix64& rng, Eigen::Index dim) {
    Matrix a(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        for (Eigen::Index i = 0; i < dim; ++i) a(i, j) = random_complex_normal(rng);
    }
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < dim; ++k) {
        const Complex d = r(k, k);
        if (std::abs(d) > 0) q.col(k) *= d / std::abs(d);
    }
    return q;
}

inline std::vector<StateVector> random_basis(SplitMix64& rng, Eigen::Index dim) {
    const Matrix u = random_unitary(rng, dim);
    std::vector<StateVector> basis;
    for (Eigen::Index k = 0; k < dim; ++k) basis.push_back(u.col(k));
    return basis;
}

/// Piecewise-constant schedule over the given breakpoints with a fresh
/// random Hermitian generator on each piece.
inline HamiltonianSchedule random_schedule(SplitMix64& rng, Eigen::Index dim, const std::vector<double>& breakpoints,
                                           double scale = 1.0) {
    std::vector<Segment> segs;
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
        segs.push_back({breakpoints[k], breakpoints[k + 1], random_hermitian(rng, dim, scale)});
    }
    return HamiltonianSchedule(std::move(segs));
}

}  // namespace fpf
