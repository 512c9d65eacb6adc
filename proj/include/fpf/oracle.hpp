#pragma once

// Brute-force cross-checks: sequential projective measurement with collapse,
// exhaustive enumeration of constrained families, and seeded Monte Carlo
// sampling of outcome distributions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "fpf/dynamics.hpp"
#include "fpf/errors.hpp"
#include "fpf/histories.hpp"
#include "fpf/linalg.hpp"
#include "fpf/measure.hpp"
#include "fpf/random.hpp"

namespace fpf {

struct Outcome {
    std::vector<int> indices;
    double probability = 0.0;
};

struct OutcomeDistribution {
    std::vector<Outcome> outcomes;
    double total = 0.0;
};

/// Prepare psi1 at t_prep, then at each time evolve, project onto every
/// basis element and renormalize. Each outcome sequence gets the product of
/// its conditional Born probabilities.
inline OutcomeDistribution sequential_chain(const StateVector& psi1, double t_prep,
                                            std::span<const std::vector<StateVector>> bases,
                                            std::span<const double> times, const HamiltonianSchedule& sched,
                                            std::uint64_t limit = default_history_limit) {
    if (bases.size() != times.size() || times.empty()) {
        throw ValidationError("sequential_chain: need one basis per measurement time");
    }
    if (!is_normalized(psi1)) throw ValidationError("sequential_chain: preparation not normalized");
    detail::require_same_dim(psi1.size(), sched.dim(), "sequential_chain");
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const bool ordered = i == 0 ? times[0] >= t_prep : times[i] > times[i - 1];
        if (!ordered) {
            throw DomainError("sequential_chain: measurement times must increase from the preparation time");
        }
        if (!is_orthonormal_set(bases[i], /*complete=*/true)) {
            throw ValidationError("sequential_chain: basis " + std::to_string(i) + " is incomplete or not orthonormal");
        }
        detail::require_same_dim(bases[i].front().size(), psi1.size(), "sequential_chain basis");
        count *= bases[i].size();
        if (count > limit) throw CombinatorialLimitError("sequential_chain: outcome count exceeds limit");
    }

    OutcomeDistribution dist;
    std::vector<int> path;
    auto descend = [&](auto&& self, const StateVector& state, double t_now, double weight) -> void {
        const std::size_t level = path.size();
        if (level == times.size()) {
            dist.outcomes.push_back({path, weight});
            dist.total += weight;
            return;
        }
        const StateVector evolved = evolve_state(state, sched, t_now, times[level]);
        for (std::size_t k = 0; k < bases[level].size(); ++k) {
            const StateVector projected = projector(bases[level][k]) * evolved;
            const double p = projected.squaredNorm();
            path.push_back(static_cast<int>(k));
            self(self, p > 0.0 ? StateVector(projected / std::sqrt(p)) : bases[level][k], times[level], weight * p);
            path.pop_back();
        }
    };
    descend(descend, psi1, t_prep, 1.0);
    return dist;
}

/// Outcomes agreeing with `fixed` (position -> index), renormalized.
inline OutcomeDistribution condition_on(const OutcomeDistribution& dist, const std::map<std::size_t, int>& fixed) {
    OutcomeDistribution out;
    for (const auto& o : dist.outcomes) {
        bool keep = true;
        for (const auto& [pos, idx] : fixed) keep = keep && o.indices.at(pos) == idx;
        if (keep) {
            out.outcomes.push_back(o);
            out.total += o.probability;
        }
    }
    if (out.total <= zero_normalization_threshold) {
        throw ZeroNormalizationError("condition_on: conditioning event has zero probability");
    }
    const double mass = out.total;
    out.total = 0.0;
    for (auto& o : out.outcomes) {
        o.probability /= mass;
        out.total += o.probability;
    }
    return out;
}

/// Measures of every history of the layout's family, by exhaustive enumeration.
inline MeasureReport enumerate_measures(const FamilyLayout& layout, const HamiltonianSchedule& sched,
                                        std::uint64_t limit = default_history_limit) {
    return measure_report(enumerate_family(layout, limit), sched);
}

inline OutcomeDistribution as_distribution(const MeasureReport& report) {
    OutcomeDistribution d;
    for (const auto& e : report.entries) {
        d.outcomes.push_back({e.indices, e.measure});
        d.total += e.measure;
    }
    return d;
}

struct FrequencyTable {
    std::uint64_t samples = 0;
    std::vector<std::uint64_t> counts;  // aligned with the distribution's outcomes
    std::vector<double> frequencies;
    // Outcomes whose frequency falls outside 5 binomial standard deviations
    // (only assessed for samples >= 10^4).
    std::vector<std::size_t> flagged;
    double max_deviation = 0.0;
};

inline constexpr std::uint64_t monte_carlo_chunk = 1u << 14;
inline constexpr std::uint64_t monte_carlo_band_min_samples = 10'000;

/// Worker count from FPF_WORKERS, else the hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("FPF_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Samples `n` outcomes. The draw is split into fixed-size chunks, each with
/// its own stream derived from (seed, chunk index), so the table depends only
/// on (dist, n, seed) and not on the worker count.
inline FrequencyTable monte_carlo_sample(const OutcomeDistribution& dist, std::uint64_t n, std::uint64_t seed,
                                         unsigned workers = 0) {
    if (n == 0) throw DomainError("monte_carlo_sample: need at least one sample");
    if (dist.outcomes.empty()) throw ValidationError("monte_carlo_sample: empty distribution");
    double total = 0.0;
    for (const auto& o : dist.outcomes) {
        if (!(o.probability >= 0.0)) throw ValidationError("monte_carlo_sample: negative probability");
        total += o.probability;
    }
    if (std::abs(total - 1.0) > tolerance::equality) throw ValidationError("monte_carlo_sample: probabilities do not sum to 1");

    const std::size_t m = dist.outcomes.size();
    std::vector<double> cdf(m);
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < m; ++i) {
        acc += dist.outcomes[i].probability;
        cdf[i] = acc / total;
        if (dist.outcomes[i].probability > 0.0) last_positive = i;
    }

    const std::uint64_t chunks = (n + monte_carlo_chunk - 1) / monte_carlo_chunk;
    std::vector<std::vector<std::uint64_t>> partial(chunks, std::vector<std::uint64_t>(m, 0));
    auto run_chunk = [&](std::uint64_t c) {
        SplitMix64 rng(SplitMix64::derive(seed, c));
        const std::uint64_t begin = c * monte_carlo_chunk;
        const std::uint64_t end = std::min(n, begin + monte_carlo_chunk);
        for (std::uint64_t s = begin; s < end; ++s) {
            const double u = rng.uniform();
            auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            partial[c][std::min(idx, last_positive)] += 1;
        }
    };
    const unsigned w = std::max(1u, std::min<unsigned>(workers == 0 ? worker_count() : workers,
                                                       static_cast<unsigned>(chunks)));
    if (w == 1) {
        for (std::uint64_t c = 0; c < chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < w; ++t) {
            pool.emplace_back([&, t] {
                for (std::uint64_t c = t; c < chunks; c += w) run_chunk(c);
            });
        }
        for (auto& th : pool) th.join();
    }

    FrequencyTable table;
    table.samples = n;
    table.counts.assign(m, 0);
    for (const auto& part : partial) {
        for (std::size_t i = 0; i < m; ++i) table.counts[i] += part[i];
    }
    for (std::size_t i = 0; i < m; ++i) {
        const double p = dist.outcomes[i].probability / total;
        const double f = static_cast<double>(table.counts[i]) / static_cast<double>(n);
        table.frequencies.push_back(f);
        const double dev = std::abs(f - p);
        table.max_deviation = std::max(table.max_deviation, dev);
        if (n >= monte_carlo_band_min_samples && dev > 5.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n))) {
            table.flagged.push_back(i);
        }
    }
    return table;
}

}  // namespace fpf
