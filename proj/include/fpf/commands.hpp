#pragma once

// Implementation of the fpf command-line subcommands. Each command writes its
// report to `out`, diagnostics to `err`, and returns the process exit code.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fpf/contour.hpp"
#include "fpf/dynamics.hpp"
#include "fpf/envariance.hpp"
#include "fpf/errors.hpp"
#include "fpf/histories.hpp"
#include "fpf/measure.hpp"
#include "fpf/model_io.hpp"
#include "fpf/oracle.hpp"

namespace fpf::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_parse_error = 2,
    exit_validation_failure = 3,
    exit_zero_normalization = 4,
    exit_combinatorial_guard = 5,
};

enum class Format { text, structured };

struct Options {
    double tol = tolerance::equality;
    int steps_per_segment = default_steps_per_segment;
    std::uint64_t seed = 0;
    std::uint64_t trials = 100'000;
    Format format = Format::text;
};

// Decomposition totals must agree to this, independent of --tol.
inline constexpr double decomposition_agreement = 1e-12;

inline std::string fmt15(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v == 0.0 ? 0.0 : v);
    return buf;
}

/// `v` rounded to 15 significant digits, for structured reports.
inline double round15(double v) { return std::stod(fmt15(v)); }

inline json complex15(Complex z) { return json::array({round15(z.real()), round15(z.imag())}); }

inline json matrix15(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex15(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string complex_text(Complex z) { return "(" + fmt15(z.real()) + ", " + fmt15(z.imag()) + ")"; }

inline void write_matrix_text(std::ostream& out, const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out << " ";
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << " " << complex_text(m(r, c));
        out << "\n";
    }
}

/// Runs `body`, translating library errors into exit codes.
inline int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ModelParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_parse_error;
    } catch (const ZeroNormalizationError& e) {
        err << "error: zero normalization: " << e.what() << "\n";
        return exit_zero_normalization;
    } catch (const CombinatorialLimitError& e) {
        err << "error: combinatorial guard: " << e.what() << "\n";
        return exit_combinatorial_guard;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_validation_failure;
    }
}

inline int cmd_propagate(const ModelSpec& model, double t_a, double t_b, const Options& opt, std::ostream& out,
                         std::ostream& err) {
    return guarded(err, [&] {
        const auto sched = schedule_of(model);
        const Matrix u = propagate(sched, t_a, t_b);
        const double unitarity = max_abs_entry(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols()));
        if (opt.format == Format::structured) {
            json doc{{"command", "propagate"},      {"t_a", round15(t_a)}, {"t_b", round15(t_b)},
                     {"dim", model.dim},            {"unitary", matrix15(u)},
                     {"unitarity_error", round15(unitarity)}};
            out << doc.dump(2) << "\n";
        } else {
            out << "U(" << fmt15(t_b) << ", " << fmt15(t_a) << ")  dim=" << model.dim << "\n";
            write_matrix_text(out, u);
            out << "unitarity_error: " << fmt15(unitarity) << "\n";
        }
        if (!(unitarity <= tolerance::unitarity)) {
            err << "error: propagator failed the unitarity check (" << fmt15(unitarity) << ")\n";
            return static_cast<int>(exit_validation_failure);
        }
        return static_cast<int>(exit_ok);
    });
}

inline json report_json(const MeasureReport& r) {
    json entries = json::array();
    for (const auto& e : r.entries) {
        json j{{"id", e.id}, {"indices", e.indices}, {"delta_psi", round15(e.delta_psi)}, {"measure", round15(e.measure)}};
        if (e.delta_psi_line) j["delta_psi_line"] = round15(*e.delta_psi_line);
        entries.push_back(std::move(j));
    }
    json ct = json::array();
    for (double t : r.constraint_times) ct.push_back(round15(t));
    json doc{{"histories", std::move(entries)},
             {"normalization", round15(r.normalization)},
             {"constraint_times", std::move(ct)},
             {"total", round15(r.total())}};
    if (r.max_route_discrepancy) doc["max_route_discrepancy"] = round15(*r.max_route_discrepancy);
    return doc;
}

inline void write_report_text(std::ostream& out, const MeasureReport& r) {
    out << "histories: " << r.entries.size() << "\n";
    out << "constraint_times:";
    for (double t : r.constraint_times) out << " " << fmt15(t);
    out << "\nnormalization: " << fmt15(r.normalization) << "\n";
    out << "total_measure: " << fmt15(r.total()) << "\n";
    if (r.max_route_discrepancy) out << "max_route_discrepancy: " << fmt15(*r.max_route_discrepancy) << "\n";
    out << "id\tdelta_psi\tdelta_psi_line\tmeasure\n";
    for (const auto& e : r.entries) {
        out << e.id << "\t" << fmt15(e.delta_psi) << "\t" << (e.delta_psi_line ? fmt15(*e.delta_psi_line) : "-")
            << "\t" << fmt15(e.measure) << "\n";
    }
}

inline int cmd_measure(const ModelSpec& model, const Options& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto sched = schedule_of(model);
        const auto ef = enumerate_family(layout_of(model));
        const auto report = measure_report(ef, sched, opt.steps_per_segment);
        if (opt.format == Format::structured) {
            json doc = report_json(report);
            doc["command"] = "measure";
            out << doc.dump(2) << "\n";
        } else {
            out << "measure of existence\n";
            write_report_text(out, report);
        }
        if (!(*report.max_route_discrepancy <= opt.tol)) {
            err << "error: line-integral and closed-form routes disagree by " << fmt15(*report.max_route_discrepancy)
                << "\n";
            return static_cast<int>(exit_validation_failure);
        }
        return static_cast<int>(exit_ok);
    });
}

inline int cmd_decompose(const ModelSpec& model, const Options& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto sched = schedule_of(model);
        const auto bundle = toy_bundle_of(model);
        std::vector<Decomposition> parts;
        for (auto mode : all_decomposition_modes) parts.push_back(decompose_total_measure(bundle, sched, mode));
        double lo = parts.front().total, hi = parts.front().total;
        for (const auto& d : parts) {
            lo = std::min(lo, d.total);
            hi = std::max(hi, d.total);
        }
        const double spread = hi - lo;
        if (opt.format == Format::structured) {
            json modes = json::array();
            for (const auto& d : parts) {
                json terms = json::array();
                for (double t : d.terms) terms.push_back(round15(t));
                modes.push_back({{"mode", to_string(d.mode)}, {"total", round15(d.total)}, {"terms", std::move(terms)}});
            }
            json doc{{"command", "decompose"}, {"modes", std::move(modes)}, {"max_spread", round15(spread)}};
            out << doc.dump(2) << "\n";
        } else {
            out << "decompositions of the total measure\n";
            for (const auto& d : parts) {
                out << to_string(d.mode) << " total=" << fmt15(d.total) << " terms=" << d.terms.size() << ":";
                for (double t : d.terms) out << " " << fmt15(t);
                out << "\n";
            }
            out << "max_spread: " << fmt15(spread) << "\n";
        }
        if (!(spread <= decomposition_agreement)) {
            err << "error: decomposition totals disagree by " << fmt15(spread) << "\n";
            return static_cast<int>(exit_validation_failure);
        }
        return static_cast<int>(exit_ok);
    });
}

/// Qubit model used by `verify` when no model file is given: preparation |0>
/// at t=0, sigma_x then (sigma_z + sigma_y / 2), computational basis at 0.4,
/// Hadamard basis at 1.0.
inline ModelSpec default_verify_model() {
    ModelSpec m;
    m.dim = 2;
    m.grid = {0.0, 0.4, 1.0};
    Matrix sx(2, 2), mixed(2, 2);
    sx << 0, 1, 1, 0;
    mixed << Complex(1, 0), Complex(0, -0.5), Complex(0, 0.5), Complex(-1, 0);
    m.hamiltonian = {{0.0, 0.4, sx}, {0.4, 1.0, mixed}};
    const double h = std::numbers::sqrt2 / 2.0;
    StateVector plus(2), minus(2);
    plus << h, h;
    minus << h, -h;
    m.bases = {std::nullopt, std::nullopt, std::vector<StateVector>{plus, minus}};
    m.preparation = basis_state(2, 0);
    return m;
}

struct CheckLine {
    std::string name;
    bool pass = false;
    std::string detail;
};

inline int cmd_verify(const ModelSpec& model, const Options& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto sched = schedule_of(model);
        const auto layout = layout_of(model);
        const auto ef = enumerate_family(layout);
        const auto report = measure_report(ef, sched, opt.steps_per_segment);
        std::vector<CheckLine> checks;

        checks.push_back({"route_equivalence", *report.max_route_discrepancy <= opt.tol,
                          "max_dev=" + fmt15(*report.max_route_discrepancy)});

        const double norm_dev = std::abs(report.total() - 1.0);
        checks.push_back({"normalization", norm_dev <= opt.tol, "max_dev=" + fmt15(norm_dev)});

        double moe_dev = 0.0;
        for (std::size_t m = 0; m < ef.family.size(); ++m) {
            moe_dev = std::max(moe_dev, std::abs(measure_of_existence(ef.family[m], ef.family, sched) -
                                                 report.entries[m].measure));
        }
        checks.push_back({"measure_of_existence", moe_dev <= opt.tol, "max_dev=" + fmt15(moe_dev)});

        if (!layout.constraints.contains(0)) {
            checks.push_back({"sequential_chain", false, "no preparation at the first grid time"});
        } else {
            // Constrained later times are measured in a basis containing the
            // constraint state, then the chain is conditioned on that outcome.
            std::vector<std::vector<StateVector>> bases;
            std::vector<double> times;
            std::map<std::size_t, int> fixed;
            for (std::size_t i = 1; i < layout.grid.size(); ++i) {
                times.push_back(layout.grid[i]);
                if (!layout.constraints.contains(i)) {
                    bases.push_back(layout.bases[i]);
                    continue;
                }
                const StateVector& c = layout.constraints.at(i);
                int found = -1;
                for (std::size_t k = 0; k < layout.bases[i].size() && found < 0; ++k) {
                    if (std::abs(std::abs(inner(layout.bases[i][k], c)) - 1.0) <= tolerance::equality) {
                        found = static_cast<int>(k);
                    }
                }
                if (found >= 0 && is_orthonormal_set(layout.bases[i], true)) {
                    bases.push_back(layout.bases[i]);
                } else {
                    bases.push_back(complete_basis(c));
                    found = 0;
                }
                fixed[i - 1] = found;
            }
            const auto chain = condition_on(
                sequential_chain(layout.constraints.at(0), layout.grid[0], bases, times, sched), fixed);
            double chain_dev = 0.0;
            for (const auto& e : report.entries) {
                double p = 0.0;
                for (const auto& o : chain.outcomes) {
                    bool match = true;
                    for (std::size_t i = 1; i < e.indices.size() && match; ++i) {
                        match = e.indices[i] < 0 ? o.indices[i - 1] == fixed.at(i - 1) : o.indices[i - 1] == e.indices[i];
                    }
                    if (match) p += o.probability;
                }
                chain_dev = std::max(chain_dev, std::abs(p - e.measure));
            }
            checks.push_back({"sequential_chain", chain_dev <= opt.tol, "max_dev=" + fmt15(chain_dev)});
        }

        const auto dist = as_distribution(report);
        const auto table = monte_carlo_sample(dist, opt.trials, opt.seed);
        const auto again = monte_carlo_sample(dist, opt.trials, opt.seed, 1);
        const bool banded = opt.trials >= monte_carlo_band_min_samples;
        checks.push_back({"monte_carlo", table.flagged.empty(),
                          "n=" + std::to_string(opt.trials) + " seed=" + std::to_string(opt.seed) +
                              " max_dev=" + fmt15(table.max_deviation) +
                              " outside_5sigma=" + std::to_string(table.flagged.size()) +
                              (banded ? "" : " (band not assessed below 10000 samples)")});
        checks.push_back({"monte_carlo_determinism", table.counts == again.counts, "rerun with same seed"});

        bool all = true;
        for (const auto& c : checks) all = all && c.pass;
        if (opt.format == Format::structured) {
            json lines = json::array();
            for (const auto& c : checks) lines.push_back({{"check", c.name}, {"pass", c.pass}, {"detail", c.detail}});
            json freqs = json::array();
            for (std::size_t i = 0; i < report.entries.size(); ++i) {
                freqs.push_back({{"id", report.entries[i].id},
                                 {"measure", round15(report.entries[i].measure)},
                                 {"count", table.counts[i]},
                                 {"frequency", round15(table.frequencies[i])}});
            }
            json doc{{"command", "verify"}, {"pass", all}, {"checks", std::move(lines)}, {"samples", std::move(freqs)}};
            out << doc.dump(2) << "\n";
        } else {
            out << "verification suite (" << report.entries.size() << " histories)\n";
            for (const auto& c : checks) out << (c.pass ? "PASS " : "FAIL ") << c.name << " " << c.detail << "\n";
            out << "id\tmeasure\tcount\tfrequency\n";
            for (std::size_t i = 0; i < report.entries.size(); ++i) {
                out << report.entries[i].id << "\t" << fmt15(report.entries[i].measure) << "\t" << table.counts[i]
                    << "\t" << fmt15(table.frequencies[i]) << "\n";
            }
            out << (all ? "RESULT: PASS" : "RESULT: FAIL") << "\n";
        }
        return static_cast<int>(all ? exit_ok : exit_validation_failure);
    });
}

inline int cmd_envariance(const BipartiteState& psi, const Matrix& u_a, const Options& opt, std::ostream& out,
                          std::ostream& err) {
    return guarded(err, [&] {
        const auto sf = schmidt_decompose(psi);
        const auto res = check_envariance(psi, u_a, opt.tol);
        if (opt.format == Format::structured) {
            json coeffs = json::array();
            for (double c : sf.coefficients) coeffs.push_back(round15(c));
            json doc{{"command", "envariance"}, {"envariant", res.envariant}, {"schmidt_coefficients", coeffs}};
            if (res.envariant) {
                json phases = json::array();
                for (auto p : res.phases) phases.push_back(complex15(p));
                doc["permutation"] = res.permutation;
                doc["phases"] = std::move(phases);
                doc["adapted_basis"] = res.adapted_basis;
                doc["counter"] = matrix15(*res.counter);
                doc["residual"] = round15(res.residual);
            }
            out << doc.dump(2) << "\n";
        } else {
            out << "schmidt_coefficients:";
            for (double c : sf.coefficients) out << " " << fmt15(c);
            out << "\nenvariant: " << (res.envariant ? "yes" : "no") << "\n";
            if (res.envariant) {
                out << "permutation:";
                for (auto k : res.permutation) out << " " << k;
                out << "\nphases:";
                for (auto p : res.phases) out << " " << complex_text(p);
                out << "\nadapted_basis: " << (res.adapted_basis ? "yes" : "no") << "\n";
                out << "counter U_B:\n";
                write_matrix_text(out, *res.counter);
                out << "residual: " << fmt15(res.residual) << "\n";
            }
        }
        return static_cast<int>(exit_ok);
    });
}

}  // namespace fpf::cli
