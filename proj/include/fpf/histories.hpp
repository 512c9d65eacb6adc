#pragma once

// Fixed points, quantum histories and history families, plus the
// decoherent-histories machinery built on Heisenberg projectors.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpf/contour.hpp"
#include "fpf/dynamics.hpp"
#include "fpf/errors.hpp"
#include "fpf/linalg.hpp"

namespace fpf {

/// A rank-1 state pinned at one time. The forward and backward parts are
/// equal, so the state is stored once.
struct FixedPoint {
    double time = 0.0;
    StateVector state;
    std::string label;

    FixedPoint() = default;
    FixedPoint(double t, StateVector s, std::string l = {}) : time(t), state(std::move(s)), label(std::move(l)) {
        if (!all_finite(state) || !is_normalized(state)) {
            throw ValidationError("FixedPoint at t=" + std::to_string(time) + " is not a normalized state");
        }
    }
};

class QuantumHistory {
public:
    explicit QuantumHistory(std::vector<FixedPoint> points) : points_(std::move(points)) {
        if (points_.size() < 2) throw DomainError("QuantumHistory: need at least two fixed points");
        const auto dim = points_.front().state.size();
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (points_[i].state.size() != dim) throw DimensionError("QuantumHistory: state dimensions differ");
            if (i > 0 && !(points_[i].time > points_[i - 1].time)) {
                throw DomainError("QuantumHistory: fixed-point times must be strictly increasing");
            }
        }
    }

    std::size_t size() const { return points_.size(); }
    Eigen::Index dim() const { return points_.front().state.size(); }
    std::span<const FixedPoint> points() const { return points_; }
    const FixedPoint& operator[](std::size_t i) const { return points_.at(i); }

    TimeGrid grid() const {
        std::vector<double> ts;
        ts.reserve(points_.size());
        for (const auto& p : points_) ts.push_back(p.time);
        return TimeGrid(std::move(ts));
    }

    std::string id() const {
        std::string out;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (i > 0) out += ' ';
            out += points_[i].label.empty() ? "?" : points_[i].label;
        }
        return out;
    }

private:
    std::vector<FixedPoint> points_;
};

namespace detail {

inline bool same_times(const QuantumHistory& a, const QuantumHistory& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].time != b[i].time) return false;
    }
    return true;
}

}  // namespace detail

/// <h_l|h_k>: per fixed point, the forward overlap times the conjugated
/// backward overlap, so each factor is |<psi_l|psi_k>|^2.
inline Complex history_inner(const QuantumHistory& h_k, const QuantumHistory& h_l) {
    if (!detail::same_times(h_k, h_l)) throw DomainError("history_inner: histories live on different grids");
    detail::require_same_dim(h_k.dim(), h_l.dim(), "history_inner");
    Complex acc{1.0};
    for (std::size_t i = 0; i < h_k.size(); ++i) {
        const Complex forward = inner(h_l[i].state, h_k[i].state);
        const Complex backward = inner(h_l[i].state, h_k[i].state);
        acc *= forward * std::conj(backward);
    }
    return acc;
}

/// Histories on one grid; `constraint_times` are the S_t grid times whose
/// fixed points are known.
class HistoryFamily {
public:
    HistoryFamily(std::vector<QuantumHistory> histories, std::vector<double> constraint_times)
        : histories_(std::move(histories)), constraint_times_(std::move(constraint_times)) {
        if (histories_.empty()) throw DomainError("HistoryFamily: empty family");
        for (const auto& h : histories_) {
            if (!detail::same_times(h, histories_.front())) {
                throw DomainError("HistoryFamily: member histories use different times");
            }
            detail::require_same_dim(h.dim(), histories_.front().dim(), "HistoryFamily");
        }
        const auto g = grid();
        if (constraint_times_.size() > g.size()) throw DomainError("HistoryFamily: more constraints than grid times");
        for (double t : constraint_times_) {
            if (g.index_of(t) == g.size()) throw DomainError("HistoryFamily: constraint time not on the grid");
        }
    }

    std::size_t size() const { return histories_.size(); }
    std::span<const QuantumHistory> histories() const { return histories_; }
    const QuantumHistory& operator[](std::size_t i) const { return histories_.at(i); }
    std::span<const double> constraint_times() const { return constraint_times_; }
    TimeGrid grid() const { return histories_.front().grid(); }

private:
    std::vector<QuantumHistory> histories_;
    std::vector<double> constraint_times_;
};

struct PairViolation {
    std::size_t first = 0;
    std::size_t second = 0;
    Complex overlap;
};

struct FamilyReport {
    bool valid = true;
    std::vector<PairViolation> violations;
};

inline FamilyReport validate_family(const HistoryFamily& fam, double tol = tolerance::equality) {
    FamilyReport report;
    for (std::size_t i = 0; i < fam.size(); ++i) {
        for (std::size_t j = i + 1; j < fam.size(); ++j) {
            const Complex ov = history_inner(fam[i], fam[j]);
            if (std::abs(ov) > tol) {
                report.valid = false;
                report.violations.push_back({i, j, ov});
            }
        }
    }
    return report;
}

/// Grid, one basis per grid time, and the known fixed points. Unconstrained
/// times range over their full basis when the family is enumerated.
struct FamilyLayout {
    TimeGrid grid;
    std::vector<std::vector<StateVector>> bases;
    std::map<std::size_t, StateVector> constraints;  // grid index -> state

    Eigen::Index dim() const {
        if (!constraints.empty()) return constraints.begin()->second.size();
        return bases.empty() || bases.front().empty() ? 0 : bases.front().front().size();
    }

    std::vector<std::size_t> free_slots() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!constraints.contains(i)) out.push_back(i);
        }
        return out;
    }

    /// Number of histories; saturates at UINT64_MAX.
    std::uint64_t history_count() const {
        std::uint64_t n = 1;
        for (auto i : free_slots()) {
            const std::uint64_t b = bases.at(i).size();
            if (b != 0 && n > UINT64_MAX / b) return UINT64_MAX;
            n *= b;
        }
        return n;
    }
};

inline void validate_layout(const FamilyLayout& layout, double tol = tolerance::equality) {
    if (layout.grid.size() < 2) throw DomainError("FamilyLayout: need at least two grid times");
    if (layout.bases.size() != layout.grid.size()) throw ValidationError("FamilyLayout: one basis per grid time required");
    const auto dim = layout.dim();
    if (dim < 1) throw DimensionError("FamilyLayout: empty state space");
    for (const auto& [idx, state] : layout.constraints) {
        if (idx >= layout.grid.size()) throw DomainError("FamilyLayout: constraint index outside the grid");
        detail::require_same_dim(state.size(), dim, "FamilyLayout constraint");
        if (!is_normalized(state, tol)) throw ValidationError("FamilyLayout: constraint state not normalized");
    }
    for (auto i : layout.free_slots()) {
        const auto& basis = layout.bases[i];
        if (!basis.empty()) detail::require_same_dim(basis.front().size(), dim, "FamilyLayout basis");
        if (!is_orthonormal_set(basis, /*complete=*/true, tol)) {
            throw ValidationError("FamilyLayout: basis at t=" + std::to_string(layout.grid[i]) +
                                  " is not a complete orthonormal basis");
        }
    }
}

inline constexpr std::uint64_t default_history_limit = 1'000'000;

/// Family plus, for each member, the basis index chosen at every grid time
/// (-1 at constrained times).
struct EnumeratedFamily {
    HistoryFamily family;
    std::vector<std::vector<int>> indices;
};

inline std::string slot_label(std::size_t time_index, int basis_index) {
    return "t" + std::to_string(time_index) + ":" + (basis_index < 0 ? std::string("c") : std::to_string(basis_index));
}

inline EnumeratedFamily enumerate_family(const FamilyLayout& layout,
                                         std::uint64_t limit = default_history_limit) {
    validate_layout(layout);
    const auto count = layout.history_count();
    if (count > limit) {
        throw CombinatorialLimitError("history family has " +
                                      (count == UINT64_MAX ? std::string("more than 2^64") : std::to_string(count)) +
                                      " members, limit is " + std::to_string(limit));
    }
    const auto free = layout.free_slots();
    const std::size_t n = layout.grid.size();
    std::vector<QuantumHistory> histories;
    std::vector<std::vector<int>> all_indices;
    histories.reserve(count);
    all_indices.reserve(count);

    std::vector<int> idx(n, -1);
    for (auto i : free) idx[i] = 0;
    for (std::uint64_t c = 0; c < count; ++c) {
        std::vector<FixedPoint> pts;
        pts.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const StateVector& s = idx[i] < 0 ? layout.constraints.at(i) : layout.bases[i][idx[i]];
            pts.emplace_back(layout.grid[i], s, slot_label(i, idx[i]));
        }
        histories.emplace_back(std::move(pts));
        all_indices.push_back(idx);
        // odometer over free slots, last slot fastest
        for (auto it = free.rbegin(); it != free.rend(); ++it) {
            if (++idx[*it] < static_cast<int>(layout.bases[*it].size())) break;
            idx[*it] = 0;
        }
    }
    std::vector<double> ctimes;
    for (const auto& [i, s] : layout.constraints) ctimes.push_back(layout.grid[i]);
    return {HistoryFamily(std::move(histories), std::move(ctimes)), std::move(all_indices)};
}

/// Heisenberg projectors [P_N(t_N), ..., P_2(t_2)], latest first.
struct HistoryOperator {
    std::vector<Matrix> projectors;
    std::vector<double> times;

    Eigen::Index dim() const { return projectors.empty() ? 0 : projectors.front().rows(); }

    /// C = P_N ... P_2.
    Matrix product(Eigen::Index dim_if_empty) const {
        Matrix c = Matrix::Identity(projectors.empty() ? dim_if_empty : dim(), projectors.empty() ? dim_if_empty : dim());
        for (const auto& p : projectors) c = c * p;
        return c;
    }
};

/// Projectors for every fixed point after the first, in the Heisenberg
/// picture referenced to t_0.
inline HistoryOperator history_operator(std::span<const FixedPoint> fps, const HamiltonianSchedule& sched,
                                        double t_0) {
    if (fps.empty()) throw DomainError("history_operator: no fixed points");
    for (std::size_t i = 1; i < fps.size(); ++i) {
        if (!(fps[i].time > fps[i - 1].time)) throw DomainError("history_operator: fixed points are not time-ordered");
    }
    if (t_0 > fps.front().time) throw DomainError("history_operator: reference time after first fixed point");
    HistoryOperator op;
    for (std::size_t i = fps.size(); i-- > 1;) {
        op.projectors.push_back(heisenberg_projector(fps[i].state, sched, fps[i].time, t_0));
        op.times.push_back(fps[i].time);
    }
    return op;
}

/// C_alpha |psi_1>, left unnormalized.
inline StateVector record_state(const HistoryOperator& c, const StateVector& psi1) {
    StateVector v = psi1;
    for (auto it = c.projectors.rbegin(); it != c.projectors.rend(); ++it) {
        detail::require_same_dim(it->cols(), v.size(), "record_state");
        v = (*it) * v;
    }
    return v;
}

/// <psi_1| C_b^dagger C_a |psi_1>.
inline Complex decoherence_functional(const HistoryOperator& ca, const HistoryOperator& cb, const StateVector& psi1) {
    return inner(record_state(cb, psi1), record_state(ca, psi1));
}

inline void validate_density_matrix(const Matrix& rho, double tol = tolerance::equality) {
    if (rho.rows() != rho.cols() || rho.rows() < 1) throw ValidationError("density matrix must be square");
    if (!is_hermitian(rho, tol)) throw ValidationError("density matrix is not Hermitian");
    if (std::abs(rho.trace() - Complex{1.0}) > tol) throw ValidationError("density matrix does not have unit trace");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -tol) throw ValidationError("density matrix is not positive semidefinite");
}

/// Tr[P_N ... P_2 rho_1 P_2 ... P_N], with fps[0] marking the preparation time.
inline double chain_probability(std::span<const FixedPoint> fps, const HamiltonianSchedule& sched, const Matrix& rho1) {
    if (fps.size() < 2) throw DomainError("chain_probability: need a preparation and at least one projector");
    validate_density_matrix(rho1);
    detail::require_same_dim(rho1.rows(), sched.dim(), "chain_probability");
    const auto op = history_operator(fps, sched, fps.front().time);
    const Matrix c = op.product(rho1.rows());
    return (c * rho1 * c.adjoint()).trace().real();
}

struct DecoherenceReport {
    bool decoherent = true;
    double max_off_diagonal = 0.0;
    std::optional<std::pair<std::size_t, std::size_t>> worst_pair;
};

/// Checks |D(alpha, beta)| <= tol for every distinct pair; each member's
/// first fixed point fixes the Heisenberg reference time.
inline DecoherenceReport is_decoherent_space(const HistoryFamily& fam, const HamiltonianSchedule& sched,
                                             const StateVector& psi1, double tol = tolerance::equality) {
    std::vector<StateVector> records;
    records.reserve(fam.size());
    for (const auto& h : fam.histories()) {
        records.push_back(record_state(history_operator(h.points(), sched, h[0].time), psi1));
    }
    DecoherenceReport report;
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (std::size_t j = i + 1; j < records.size(); ++j) {
            const double d = std::abs(inner(records[j], records[i]));
            if (d > report.max_off_diagonal) {
                report.max_off_diagonal = d;
                report.worst_pair = std::make_pair(i, j);
            }
        }
    }
    report.decoherent = report.max_off_diagonal <= tol;
    return report;
}

}  // namespace fpf
