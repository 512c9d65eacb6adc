#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpf/errors.hpp"
#include "fpf/linalg.hpp"

namespace fpf {

struct Segment {
    double t_start = 0.0;
    double t_end = 0.0;
    Matrix H;
};

/// Piecewise-constant Hermitian generator on [t_min, t_max]. The same
/// generator drives both contour branches. Immutable once built; each
/// segment's eigensystem is cached at construction.
class HamiltonianSchedule {
public:
    explicit HamiltonianSchedule(std::vector<Segment> segments, double hermitian_tol = tolerance::equality)
        : segments_(std::move(segments)) {
        if (segments_.empty()) throw ValidationError("HamiltonianSchedule: no segments");
        dim_ = segments_.front().H.rows();
        if (dim_ < 1) throw DimensionError("HamiltonianSchedule: empty generator");
        for (std::size_t k = 0; k < segments_.size(); ++k) {
            const auto& s = segments_[k];
            const std::string where = "HamiltonianSchedule: segment " + std::to_string(k);
            if (!std::isfinite(s.t_start) || !std::isfinite(s.t_end) || !(s.t_end > s.t_start)) {
                throw DomainError(where + " has an empty or invalid time range");
            }
            if (s.H.rows() != dim_ || s.H.cols() != dim_) throw DimensionError(where + " has mismatched dimension");
            if (!all_finite(s.H)) throw ValidationError(where + " contains non-finite entries");
            if (!is_hermitian(s.H, hermitian_tol)) throw ValidationError(where + " is not Hermitian");
            if (k > 0) {
                const double gap = s.t_start - segments_[k - 1].t_end;
                if (std::abs(gap) > join_tolerance(s.t_start)) {
                    throw DomainError(where + " is not contiguous with its predecessor");
                }
            }
        }
        evals_.reserve(segments_.size());
        evecs_.reserve(segments_.size());
        for (auto& s : segments_) {
            s.H = 0.5 * (s.H + s.H.adjoint());
            Eigen::SelfAdjointEigenSolver<Matrix> solver(s.H);
            if (solver.info() != Eigen::Success) throw ValidationError("HamiltonianSchedule: eigensolver failed");
            evals_.push_back(solver.eigenvalues());
            evecs_.push_back(solver.eigenvectors());
        }
    }

    static HamiltonianSchedule constant(Matrix h, double t_start, double t_end) {
        return HamiltonianSchedule({Segment{t_start, t_end, std::move(h)}});
    }

    static HamiltonianSchedule zero(Eigen::Index dim, double t_start, double t_end) {
        return constant(Matrix::Zero(dim, dim), t_start, t_end);
    }

    Eigen::Index dim() const { return dim_; }
    double t_min() const { return segments_.front().t_start; }
    double t_max() const { return segments_.back().t_end; }
    std::span<const Segment> segments() const { return segments_; }

    bool covers(double t) const {
        const double eps = join_tolerance(t);
        return t >= t_min() - eps && t <= t_max() + eps;
    }

    /// exp(-i H_k dt) for segment k.
    Matrix segment_propagator(std::size_t k, double dt) const {
        return exp_from_spectrum(evals_.at(k), evecs_.at(k), dt);
    }

private:
    static double join_tolerance(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

    std::vector<Segment> segments_;
    Eigen::Index dim_ = 0;
    std::vector<Eigen::VectorXd> evals_;
    std::vector<Matrix> evecs_;
};

/// U(t_b, t_a). Chronological product (latest segment leftmost) when
/// t_b >= t_a; the adjoint of U(t_a, t_b) otherwise, which is the
/// anti-chronological propagator used on the backward branch.
inline Matrix propagate(const HamiltonianSchedule& sched, double t_a, double t_b) {
    if (!sched.covers(t_a) || !sched.covers(t_b)) {
        throw DomainError("propagate: time outside schedule span [" + std::to_string(sched.t_min()) + ", " +
                          std::to_string(sched.t_max()) + "]");
    }
    if (t_b < t_a) return propagate(sched, t_b, t_a).adjoint();
    Matrix u = Matrix::Identity(sched.dim(), sched.dim());
    const auto segs = sched.segments();
    for (std::size_t k = 0; k < segs.size(); ++k) {
        const double lo = std::max(t_a, segs[k].t_start);
        const double hi = std::min(t_b, segs[k].t_end);
        if (hi > lo) u = sched.segment_propagator(k, hi - lo) * u;
    }
    return u;
}

inline StateVector evolve_state(const StateVector& psi, const HamiltonianSchedule& sched, double t_a, double t_b) {
    detail::require_same_dim(psi.size(), sched.dim(), "evolve_state");
    return propagate(sched, t_a, t_b) * psi;
}

/// U^dagger(t_k, t_0) |alpha><alpha| U(t_k, t_0).
inline Matrix heisenberg_projector(const StateVector& alpha, const HamiltonianSchedule& sched, double t_k,
                                   double t_0) {
    detail::require_same_dim(alpha.size(), sched.dim(), "heisenberg_projector");
    const Matrix u = propagate(sched, t_0, t_k);
    const StateVector pulled_back = u.adjoint() * alpha;
    return projector(pulled_back);
}

}  // namespace fpf
