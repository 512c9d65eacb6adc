#pragma once

// The Keldysh contour over a discrete time grid. The forward branch runs
// chronologically and comes first; the backward branch returns
// anti-chronologically to the earliest time.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpf/errors.hpp"

namespace fpf {

enum class Branch { forward, backward };

enum class ContourOrder { before, equal, after };

struct ContourTime {
    double t = 0.0;
    Branch branch = Branch::forward;

    friend bool operator==(const ContourTime&, const ContourTime&) = default;
};

struct ContourStep {
    ContourTime from;
    ContourTime to;
};

inline Branch opposite(Branch b) { return b == Branch::forward ? Branch::backward : Branch::forward; }

inline ContourOrder reversed(ContourOrder o) {
    switch (o) {
        case ContourOrder::before:
            return ContourOrder::after;
        case ContourOrder::after:
            return ContourOrder::before;
        case ContourOrder::equal:
            break;
    }
    return ContourOrder::equal;
}

/// Same physical time, other branch.
inline ContourTime mirrored(const ContourTime& z) { return {z.t, opposite(z.branch)}; }

/// Position of z1 relative to z2 along the contour.
inline ContourOrder contour_compare(const ContourTime& z1, const ContourTime& z2) {
    if (z1.branch != z2.branch) {
        return z1.branch == Branch::forward ? ContourOrder::before : ContourOrder::after;
    }
    if (z1.t == z2.t) return ContourOrder::equal;
    const bool earlier = z1.t < z2.t;
    if (z1.branch == Branch::forward) return earlier ? ContourOrder::before : ContourOrder::after;
    return earlier ? ContourOrder::after : ContourOrder::before;
}

class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {
        if (times_.empty()) throw DomainError("TimeGrid: no times");
        for (double t : times_) {
            if (!std::isfinite(t)) throw DomainError("TimeGrid: non-finite time");
        }
        for (std::size_t i = 1; i < times_.size(); ++i) {
            if (!(times_[i] > times_[i - 1])) {
                throw DomainError("TimeGrid: times must be strictly increasing");
            }
        }
    }

    std::size_t size() const { return times_.size(); }
    double operator[](std::size_t i) const { return times_.at(i); }
    std::span<const double> times() const { return times_; }
    double t_min() const { return times_.front(); }
    double t_max() const { return times_.back(); }

    bool contains(const ContourTime& z) const { return z.t >= t_min() && z.t <= t_max(); }

    /// Index of a grid time, or size() when `t` is not on the grid.
    std::size_t index_of(double t, double tol = 0.0) const {
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (std::abs(times_[i] - t) <= tol) return i;
        }
        return times_.size();
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    std::vector<double> times_;
};

/// Forward steps t_1 -> ... -> t_N on the upper branch, then backward steps
/// t_N -> ... -> t_1 on the lower branch; 2(N - 1) steps in total.
inline std::vector<ContourStep> contour_path(const TimeGrid& grid) {
    if (grid.size() < 2) throw DomainError("contour_path: need at least two grid times");
    const std::size_t n = grid.size();
    std::vector<ContourStep> steps;
    steps.reserve(2 * (n - 1));
    for (std::size_t i = 0; i + 1 < n; ++i) {
        steps.push_back({{grid[i], Branch::forward}, {grid[i + 1], Branch::forward}});
    }
    for (std::size_t i = n - 1; i > 0; --i) {
        steps.push_back({{grid[i], Branch::backward}, {grid[i - 1], Branch::backward}});
    }
    return steps;
}

/// Every contour point of the grid, in contour order.
inline std::vector<ContourTime> contour_points(const TimeGrid& grid) {
    std::vector<ContourTime> pts;
    pts.reserve(2 * grid.size());
    for (double t : grid.times()) pts.push_back({t, Branch::forward});
    for (auto it = grid.times().rbegin(); it != grid.times().rend(); ++it) {
        pts.push_back({*it, Branch::backward});
    }
    return pts;
}

inline std::string to_string(Branch b) { return b == Branch::forward ? "f" : "b"; }

inline std::string to_string(ContourOrder o) {
    switch (o) {
        case ContourOrder::before:
            return "before";
        case ContourOrder::equal:
            return "equal";
        case ContourOrder::after:
            return "after";
    }
    return "?";
}

}  // namespace fpf
