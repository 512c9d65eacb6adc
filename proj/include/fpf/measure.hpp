#pragma once

// Measure of existence of quantum histories. Delta-Psi is computed two ways:
// a closed-form product of segment amplitudes, and a line integral that walks
// the contour path and lets the sub-step changes telescope.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpf/contour.hpp"
#include "fpf/dynamics.hpp"
#include "fpf/errors.hpp"
#include "fpf/histories.hpp"
#include "fpf/linalg.hpp"

namespace fpf {

inline constexpr int default_steps_per_segment = 8;

// Normalizations at or below this are treated as zero.
inline constexpr double zero_normalization_threshold = 1e-24;

/// <a| U(t_a, t_b) |b> for t_a < t_b, evaluated as the conjugate of the
/// forward element <b| U(t_b, t_a) |a>.
inline Complex segment_amplitude(const FixedPoint& fp_a, const FixedPoint& fp_b, const HamiltonianSchedule& sched) {
    if (!(fp_a.time < fp_b.time)) throw DomainError("segment_amplitude: fixed points out of time order");
    detail::require_same_dim(fp_a.state.size(), fp_b.state.size(), "segment_amplitude");
    const StateVector forward = evolve_state(fp_a.state, sched, fp_a.time, fp_b.time);
    return std::conj(inner(fp_b.state, forward));
}

inline Complex history_amplitude(const QuantumHistory& h, const HamiltonianSchedule& sched) {
    Complex a{1.0};
    for (std::size_t i = 0; i + 1 < h.size(); ++i) a *= segment_amplitude(h[i], h[i + 1], sched);
    return a;
}

/// |prod of segment amplitudes|^2.
inline double delta_psi(const QuantumHistory& h, const HamiltonianSchedule& sched) {
    return std::norm(history_amplitude(h, sched));
}

/// Walks the 2(N-1) contour steps. Each step carries one slot of the
/// multi-time state from its source fixed point toward its sink; every
/// sub-step contributes <sink|Psi_after> - <sink|Psi_before> to the
/// constrained amplitude. A slot only overlaps its sink once it sits at the
/// sink's time (time-local spaces at different times are orthogonal), so the
/// sum telescopes to the forward-branch amplitude times the backward-branch
/// amplitude.
inline Complex contour_line_integral(const QuantumHistory& h, const HamiltonianSchedule& sched,
                                     int steps_per_segment = default_steps_per_segment) {
    if (steps_per_segment < 1) throw DomainError("contour_line_integral: steps_per_segment must be >= 1");
    const TimeGrid grid = h.grid();
    const auto path = contour_path(grid);

    struct Slot {
        StateVector value;
        double at;
        const StateVector* sink;
        double sink_time;
    };
    std::vector<Slot> slots;
    slots.reserve(path.size());
    for (const auto& step : path) {
        const auto src = grid.index_of(step.from.t);
        const auto dst = grid.index_of(step.to.t);
        if (src == grid.size() || dst == grid.size()) throw DomainError("contour_line_integral: invalid path");
        slots.push_back({h[src].state, step.from.t, &h[dst].state, step.to.t});
    }

    auto contraction = [&slots]() {
        Complex c{1.0};
        for (const auto& s : slots) {
            if (s.at != s.sink_time) return Complex{0.0};
            c *= inner(*s.sink, s.value);
        }
        return c;
    };

    Complex total{0.0};
    const double n = steps_per_segment;
    for (std::size_t k = 0; k < path.size(); ++k) {
        auto& slot = slots[k];
        const double from = path[k].from.t;
        const double to = path[k].to.t;
        for (int s = 0; s < steps_per_segment; ++s) {
            const double t0 = slot.at;
            const double t1 = s + 1 == steps_per_segment ? to : from + (to - from) * ((s + 1) / n);
            const Complex before = contraction();
            const StateVector change = propagate(sched, t0, t1) * slot.value - slot.value;
            slot.value += change;
            slot.at = t1;
            total += contraction() - before;
        }
    }
    return total;
}

/// Line-integral route to Delta-Psi. The contraction over both branches is
/// already the squared magnitude; its real part is returned.
inline double delta_psi_line_integral(const QuantumHistory& h, const HamiltonianSchedule& sched,
                                      int steps_per_segment = default_steps_per_segment) {
    return contour_line_integral(h, sched, steps_per_segment).real();
}

namespace detail {

inline bool same_ray(const StateVector& a, const StateVector& b, double tol = tolerance::equality) {
    return a.size() == b.size() && std::abs(std::abs(inner(a, b)) - 1.0) <= tol;
}

inline bool matches_at(const QuantumHistory& a, const QuantumHistory& b, std::size_t i) {
    return same_ray(a[i].state, b[i].state);
}

// Members of `fam` agreeing with `h` at every constraint time.
inline std::vector<std::size_t> consistent_members(const QuantumHistory& h, const HistoryFamily& fam) {
    const auto g = fam.grid();
    std::vector<std::size_t> slots;
    for (double t : fam.constraint_times()) slots.push_back(g.index_of(t));
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < fam.size(); ++m) {
        bool ok = true;
        for (auto i : slots) ok = ok && matches_at(fam[m], h, i);
        if (ok) out.push_back(m);
    }
    return out;
}

}  // namespace detail

/// Delta-Psi of `h` over the sum of Delta-Psi for every family member that
/// agrees with `h` at the constraint times.
inline double measure_of_existence(const QuantumHistory& h, const HistoryFamily& fam, const HamiltonianSchedule& sched) {
    if (!detail::same_times(h, fam[0])) throw DomainError("measure_of_existence: history not on the family grid");
    bool member = false;
    for (const auto& other : fam.histories()) {
        bool eq = true;
        for (std::size_t i = 0; i < h.size() && eq; ++i) eq = detail::matches_at(other, h, i);
        if (eq) {
            member = true;
            break;
        }
    }
    if (!member) throw DomainError("measure_of_existence: history is not a member of the family");
    double normalization = 0.0;
    for (auto m : detail::consistent_members(h, fam)) normalization += delta_psi(fam[m], sched);
    if (normalization <= zero_normalization_threshold) {
        throw ZeroNormalizationError("measure_of_existence: every consistent history has zero weight");
    }
    return delta_psi(h, sched) / normalization;
}

struct MeasureEntry {
    std::string id;
    std::vector<int> indices;
    double delta_psi = 0.0;
    std::optional<double> delta_psi_line;
    double measure = 0.0;
};

struct MeasureReport {
    std::vector<MeasureEntry> entries;
    double normalization = 0.0;
    std::vector<double> constraint_times;
    std::optional<double> max_route_discrepancy;

    double total() const {
        double s = 0.0;
        for (const auto& e : entries) s += e.measure;
        return s;
    }
};

/// Measures for every member of a constrained family. With
/// `line_integral_steps` set, the line-integral route is evaluated as well
/// and the largest discrepancy between the routes is recorded.
inline MeasureReport measure_report(const HistoryFamily& fam, const HamiltonianSchedule& sched,
                                    std::span<const std::vector<int>> indices = {},
                                    std::optional<int> line_integral_steps = std::nullopt) {
    MeasureReport report;
    report.constraint_times.assign(fam.constraint_times().begin(), fam.constraint_times().end());
    const auto members = detail::consistent_members(fam[0], fam);
    if (members.size() != fam.size()) {
        throw ValidationError("measure_report: family members disagree at constraint times");
    }
    double worst = 0.0;
    for (std::size_t m = 0; m < fam.size(); ++m) {
        MeasureEntry e;
        e.id = fam[m].id();
        if (m < indices.size()) e.indices = indices[m];
        e.delta_psi = delta_psi(fam[m], sched);
        if (line_integral_steps) {
            e.delta_psi_line = delta_psi_line_integral(fam[m], sched, *line_integral_steps);
            worst = std::max(worst, std::abs(*e.delta_psi_line - e.delta_psi));
        }
        report.normalization += e.delta_psi;
        report.entries.push_back(std::move(e));
    }
    if (report.normalization <= zero_normalization_threshold) {
        throw ZeroNormalizationError("measure_report: every consistent history has zero weight");
    }
    for (auto& e : report.entries) e.measure = e.delta_psi / report.normalization;
    if (line_integral_steps) report.max_route_discrepancy = worst;
    return report;
}

inline MeasureReport measure_report(const EnumeratedFamily& ef, const HamiltonianSchedule& sched,
                                    std::optional<int> line_integral_steps = std::nullopt) {
    return measure_report(ef.family, sched, ef.indices, line_integral_steps);
}

/// Orthonormal basis whose first element is `v` (Gram-Schmidt against the
/// computational basis).
inline std::vector<StateVector> complete_basis(const StateVector& v) {
    if (!is_normalized(v)) throw ValidationError("complete_basis: seed vector not normalized");
    std::vector<StateVector> basis{v};
    for (Eigen::Index i = 0; i < v.size() && static_cast<Eigen::Index>(basis.size()) < v.size(); ++i) {
        StateVector w = basis_state(v.size(), i);
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : basis) w -= inner(b, w) * b;
        }
        const double n = w.norm();
        if (n > 1e-6) basis.push_back(w / n);
    }
    return basis;
}

/// Measure of existence of the two-point history (psi1 at t1, phi at t2),
/// constrained at t1, with phi completed to a basis at t2.
inline double born_probability(const StateVector& psi1, double t1, const StateVector& phi, double t2,
                               const HamiltonianSchedule& sched) {
    if (!(t1 < t2)) throw DomainError("born_probability: need t1 < t2");
    FamilyLayout layout{TimeGrid({t1, t2}), {{psi1}, complete_basis(phi)}, {{0, psi1}}};
    const auto ef = enumerate_family(layout);
    const QuantumHistory target({FixedPoint(t1, psi1, slot_label(0, -1)), FixedPoint(t2, phi, slot_label(1, 0))});
    return measure_of_existence(target, ef.family, sched);
}

enum class DecompositionMode { MORW, MMWF, MMWP, MDRW };

inline constexpr std::array<DecompositionMode, 4> all_decomposition_modes{
    DecompositionMode::MORW, DecompositionMode::MMWF, DecompositionMode::MMWP, DecompositionMode::MDRW};

inline std::string to_string(DecompositionMode m) {
    switch (m) {
        case DecompositionMode::MORW:
            return "MORW";
        case DecompositionMode::MMWF:
            return "MMWF";
        case DecompositionMode::MMWP:
            return "MMWP";
        case DecompositionMode::MDRW:
            return "MDRW";
    }
    return "?";
}

/// Past branches at t_past, a pivot fixed point at t_pivot, future
/// branches at t_future.
struct ToyBundle {
    double t_past = 0.0;
    std::vector<StateVector> past;
    double t_pivot = 0.0;
    StateVector pivot;
    double t_future = 0.0;
    std::vector<StateVector> future;
};

struct Decomposition {
    DecompositionMode mode = DecompositionMode::MORW;
    double total = 0.0;
    std::vector<double> terms;
};

namespace detail {

inline void validate_bundle(const ToyBundle& b) {
    if (!(b.t_past < b.t_pivot && b.t_pivot < b.t_future)) {
        throw DomainError("toy bundle: times must satisfy t_past < t_pivot < t_future");
    }
    if (!is_normalized(b.pivot)) throw ValidationError("toy bundle: pivot state not normalized");
    if (!is_orthonormal_set(b.past, false)) throw ValidationError("toy bundle: past branches are not orthonormal");
    if (!is_orthonormal_set(b.future, false)) throw ValidationError("toy bundle: future branches are not orthonormal");
    detail::require_same_dim(b.past.front().size(), b.pivot.size(), "toy bundle");
    detail::require_same_dim(b.future.front().size(), b.pivot.size(), "toy bundle");
}

}  // namespace detail

/// Total measure of the bundle, grouped according to `mode`. Consecutive
/// segments multiply, simultaneous alternatives add.
inline Decomposition decompose_total_measure(const ToyBundle& bundle, const HamiltonianSchedule& sched,
                                             DecompositionMode mode) {
    detail::validate_bundle(bundle);
    const FixedPoint pivot(bundle.t_pivot, bundle.pivot, "pivot");
    std::vector<double> past_w, future_w;
    for (std::size_t i = 0; i < bundle.past.size(); ++i) {
        past_w.push_back(delta_psi(
            QuantumHistory({FixedPoint(bundle.t_past, bundle.past[i], "past" + std::to_string(i)), pivot}), sched));
    }
    for (std::size_t j = 0; j < bundle.future.size(); ++j) {
        future_w.push_back(delta_psi(
            QuantumHistory({pivot, FixedPoint(bundle.t_future, bundle.future[j], "future" + std::to_string(j))}),
            sched));
    }
    double past_sum = 0.0, future_sum = 0.0;
    for (double w : past_w) past_sum += w;
    for (double w : future_w) future_sum += w;

    Decomposition d{mode, 0.0, {}};
    switch (mode) {
        case DecompositionMode::MORW:
            d.terms.push_back(past_sum * future_sum);
            break;
        case DecompositionMode::MMWF:
            for (double w : past_w) d.terms.push_back(w * future_sum);
            break;
        case DecompositionMode::MMWP:
            for (double w : future_w) d.terms.push_back(past_sum * w);
            break;
        case DecompositionMode::MDRW:
            for (std::size_t i = 0; i < bundle.past.size(); ++i) {
                for (std::size_t j = 0; j < bundle.future.size(); ++j) {
                    const QuantumHistory whole({FixedPoint(bundle.t_past, bundle.past[i], "past" + std::to_string(i)),
                                                pivot,
                                                FixedPoint(bundle.t_future, bundle.future[j],
                                                           "future" + std::to_string(j))});
                    d.terms.push_back(delta_psi(whole, sched));
                }
            }
            break;
    }
    for (double t : d.terms) d.total += t;
    return d;
}

}  // namespace fpf
