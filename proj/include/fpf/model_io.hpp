#pragma once

// JSON model files. Complex numbers are [re, im] pairs (a bare number is
// read as a real value); states are arrays of complex numbers; matrices are
// arrays of rows.
//
//   {
//     "dim": 2,
//     "grid": [0.0, 0.785398163397448],
//     "hamiltonian": [{"t_start": 0.0, "t_end": 0.785398163397448,
//                      "H": [[[0,0],[1,0]], [[1,0],[0,0]]]}],
//     "bases": [null, [[[1,0],[0,0]], [[0,0],[1,0]]]],
//     "constraints": [{"time": 0.0, "state": [[1,0],[0,0]]}],
//     "preparation": [[1,0],[0,0]]
//   }
//
// "bases" (one entry per grid time, null = computational basis),
// "constraints" and "preparation" are optional. A preparation is a
// constraint at the first grid time.

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fpf/dynamics.hpp"
#include "fpf/envariance.hpp"
#include "fpf/errors.hpp"
#include "fpf/histories.hpp"
#include "fpf/linalg.hpp"
#include "fpf/measure.hpp"

namespace fpf {

using json = nlohmann::json;

/// The input could not be read as a model. `line` is 1-based, 0 when unknown.
class ModelParseError : public Error {
public:
    ModelParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

inline constexpr double model_hermitian_tolerance = 1e-8;

struct ModelSpec {
    Eigen::Index dim = 0;
    std::vector<double> grid;
    std::vector<Segment> hamiltonian;
    std::vector<std::optional<std::vector<StateVector>>> bases;  // empty, or one per grid time
    std::vector<std::pair<double, StateVector>> constraints;
    std::optional<StateVector> preparation;
};

namespace io_detail {

class Reader {
public:
    Reader(std::string text, std::string source) : text_(std::move(text)), source_(std::move(source)) {}

    json parse() const {
        try {
            return json::parse(text_);
        } catch (const json::parse_error& e) {
            throw ModelParseError(source_, line_at(e.byte), std::string("malformed document: ") + e.what());
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ModelParseError(source_, line_of_key(key), key + ": " + what);
    }

    double number(const json& j, const std::string& key) const {
        if (!j.is_number()) fail(key, "expected a number");
        const double v = j.get<double>();
        if (!std::isfinite(v)) fail(key, "non-finite number");
        return v;
    }

    Complex complex(const json& j, const std::string& key) const {
        if (j.is_number()) return {number(j, key), 0.0};
        if (!j.is_array() || j.size() != 2) fail(key, "expected a [re, im] pair");
        return {number(j[0], key), number(j[1], key)};
    }

    StateVector state(const json& j, const std::string& key, Eigen::Index dim) const {
        if (!j.is_array()) fail(key, "expected an array of amplitudes");
        if (static_cast<Eigen::Index>(j.size()) != dim) {
            fail(key, "expected " + std::to_string(dim) + " amplitudes, got " + std::to_string(j.size()));
        }
        StateVector v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) v(i) = complex(j[i], key);
        return v;
    }

    Matrix matrix(const json& j, const std::string& key, Eigen::Index dim) const {
        if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != dim) {
            fail(key, "expected " + std::to_string(dim) + " rows");
        }
        Matrix m(dim, dim);
        for (Eigen::Index r = 0; r < dim; ++r) {
            const json& row = j[r];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dim) {
                fail(key, "row " + std::to_string(r) + " must have " + std::to_string(dim) + " entries");
            }
            for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = complex(row[c], key);
        }
        return m;
    }

    const std::string& source() const { return source_; }

private:
    std::size_t line_at(std::size_t byte) const {
        std::size_t line = 1;
        for (std::size_t i = 0; i < byte && i < text_.size(); ++i) {
            if (text_[i] == '\n') ++line;
        }
        return line;
    }

    // Line of the first occurrence of the top-level key named in `key`.
    std::size_t line_of_key(const std::string& key) const {
        const auto stop = key.find_first_of("[.");
        const std::string needle = "\"" + key.substr(0, stop) + "\"";
        const auto pos = text_.find(needle);
        return pos == std::string::npos ? 0 : line_at(pos);
    }

    std::string text_;
    std::string source_;
};

inline json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline json state_json(const StateVector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(complex_json(v(i)));
    return a;
}

inline json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelParseError(path, 0, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace io_detail

inline ModelSpec parse_model(const std::string& text, const std::string& source = "<model>") {
    const io_detail::Reader rd(text, source);
    const json doc = rd.parse();
    if (!doc.is_object()) rd.fail("model", "top level must be an object");

    ModelSpec m;
    if (!doc.contains("dim") || !doc["dim"].is_number_integer() || doc["dim"].get<long long>() < 1) {
        rd.fail("dim", "required positive integer");
    }
    m.dim = doc["dim"].get<long long>();

    if (!doc.contains("grid") || !doc["grid"].is_array() || doc["grid"].empty()) rd.fail("grid", "required non-empty array");
    for (std::size_t i = 0; i < doc["grid"].size(); ++i) m.grid.push_back(rd.number(doc["grid"][i], "grid"));
    for (std::size_t i = 1; i < m.grid.size(); ++i) {
        if (!(m.grid[i] > m.grid[i - 1])) rd.fail("grid", "times must be strictly increasing");
    }

    if (!doc.contains("hamiltonian") || !doc["hamiltonian"].is_array() || doc["hamiltonian"].empty()) {
        rd.fail("hamiltonian", "required non-empty array of segments");
    }
    for (std::size_t k = 0; k < doc["hamiltonian"].size(); ++k) {
        const json& s = doc["hamiltonian"][k];
        const std::string key = "hamiltonian[" + std::to_string(k) + "]";
        if (!s.is_object() || !s.contains("t_start") || !s.contains("t_end") || !s.contains("H")) {
            rd.fail(key, "segment needs t_start, t_end and H");
        }
        Segment seg{rd.number(s["t_start"], key + ".t_start"), rd.number(s["t_end"], key + ".t_end"),
                    rd.matrix(s["H"], key + ".H", m.dim)};
        if (!is_hermitian(seg.H, model_hermitian_tolerance)) rd.fail(key + ".H", "matrix is not Hermitian");
        m.hamiltonian.push_back(std::move(seg));
    }

    if (doc.contains("bases") && !doc["bases"].is_null()) {
        const json& b = doc["bases"];
        if (!b.is_array() || b.size() != m.grid.size()) rd.fail("bases", "need one entry per grid time");
        for (std::size_t i = 0; i < b.size(); ++i) {
            const std::string key = "bases[" + std::to_string(i) + "]";
            if (b[i].is_null()) {
                m.bases.emplace_back(std::nullopt);
                continue;
            }
            if (!b[i].is_array() || b[i].empty()) rd.fail(key, "expected null or a list of states");
            std::vector<StateVector> basis;
            for (const auto& v : b[i]) basis.push_back(rd.state(v, key, m.dim));
            m.bases.emplace_back(std::move(basis));
        }
    }

    if (doc.contains("constraints") && !doc["constraints"].is_null()) {
        const json& cs = doc["constraints"];
        if (!cs.is_array()) rd.fail("constraints", "expected an array");
        for (std::size_t k = 0; k < cs.size(); ++k) {
            const std::string key = "constraints[" + std::to_string(k) + "]";
            if (!cs[k].is_object() || !cs[k].contains("time") || !cs[k].contains("state")) {
                rd.fail(key, "constraint needs time and state");
            }
            const double t = rd.number(cs[k]["time"], key + ".time");
            bool on_grid = false;
            for (double g : m.grid) on_grid = on_grid || g == t;
            if (!on_grid) rd.fail(key, "constraint time is not a grid time");
            for (const auto& [t_prev, s_prev] : m.constraints) {
                if (t_prev == t) rd.fail(key, "duplicate constraint time");
            }
            StateVector s = rd.state(cs[k]["state"], key + ".state", m.dim);
            if (!is_normalized(s)) rd.fail(key, "state is not normalized");
            m.constraints.emplace_back(t, std::move(s));
        }
    }

    if (doc.contains("preparation") && !doc["preparation"].is_null()) {
        StateVector p = rd.state(doc["preparation"], "preparation", m.dim);
        if (!is_normalized(p)) rd.fail("preparation", "state is not normalized");
        for (const auto& [t, s] : m.constraints) {
            if (t == m.grid.front() && (s - p).norm() > tolerance::equality) {
                rd.fail("preparation", "conflicts with the constraint at the first grid time");
            }
        }
        m.preparation = std::move(p);
    }
    return m;
}

inline ModelSpec load_model(const std::string& path) { return parse_model(io_detail::read_file(path), path); }

inline json model_to_json(const ModelSpec& m) {
    json doc;
    doc["dim"] = m.dim;
    doc["grid"] = m.grid;
    json ham = json::array();
    for (const auto& s : m.hamiltonian) {
        ham.push_back({{"t_start", s.t_start}, {"t_end", s.t_end}, {"H", io_detail::matrix_json(s.H)}});
    }
    doc["hamiltonian"] = std::move(ham);
    if (!m.bases.empty()) {
        json b = json::array();
        for (const auto& basis : m.bases) {
            if (!basis) {
                b.push_back(nullptr);
                continue;
            }
            json list = json::array();
            for (const auto& v : *basis) list.push_back(io_detail::state_json(v));
            b.push_back(std::move(list));
        }
        doc["bases"] = std::move(b);
    }
    json cs = json::array();
    for (const auto& [t, s] : m.constraints) cs.push_back({{"time", t}, {"state", io_detail::state_json(s)}});
    doc["constraints"] = std::move(cs);
    if (m.preparation) doc["preparation"] = io_detail::state_json(*m.preparation);
    return doc;
}

inline std::string write_model(const ModelSpec& m) { return model_to_json(m).dump(2) + "\n"; }

inline HamiltonianSchedule schedule_of(const ModelSpec& m) {
    return HamiltonianSchedule(m.hamiltonian, model_hermitian_tolerance);
}

inline std::vector<StateVector> basis_at(const ModelSpec& m, std::size_t grid_index) {
    if (m.bases.empty() || !m.bases.at(grid_index)) return computational_basis(m.dim);
    return *m.bases[grid_index];
}

/// Constraints keyed by grid index; the preparation pins the first time.
inline std::map<std::size_t, StateVector> constraints_of(const ModelSpec& m) {
    std::map<std::size_t, StateVector> out;
    const TimeGrid grid(m.grid);
    for (const auto& [t, s] : m.constraints) out.emplace(grid.index_of(t), s);
    if (m.preparation) out.insert_or_assign(0, *m.preparation);
    return out;
}

inline FamilyLayout layout_of(const ModelSpec& m) {
    FamilyLayout layout{TimeGrid(m.grid), {}, constraints_of(m)};
    for (std::size_t i = 0; i < m.grid.size(); ++i) layout.bases.push_back(basis_at(m, i));
    return layout;
}

/// Three grid times: past branches from the first basis, the pivot from the
/// constraint at the middle time, future branches from the last basis.
inline ToyBundle toy_bundle_of(const ModelSpec& m) {
    if (m.grid.size() != 3) throw ValidationError("toy bundle needs exactly three grid times");
    const auto cs = constraints_of(m);
    if (!cs.contains(1)) throw ValidationError("toy bundle needs a pivot constraint at the middle grid time");
    return ToyBundle{m.grid[0], basis_at(m, 0), m.grid[1], cs.at(1), m.grid[2], basis_at(m, 2)};
}

/// {"dims": [d_A, d_B], "amplitudes": [...]} and {"matrix": [[...], ...]}.
inline BipartiteState parse_bipartite_state(const std::string& text, const std::string& source = "<state>") {
    const io_detail::Reader rd(text, source);
    const json doc = rd.parse();
    if (!doc.is_object() || !doc.contains("dims") || !doc["dims"].is_array() || doc["dims"].size() != 2 ||
        !doc["dims"][0].is_number_integer() || !doc["dims"][1].is_number_integer()) {
        rd.fail("dims", "required pair of positive integers");
    }
    const long long da = doc["dims"][0].get<long long>();
    const long long db = doc["dims"][1].get<long long>();
    if (da < 1 || db < 1) rd.fail("dims", "dimensions must be positive");
    if (!doc.contains("amplitudes")) rd.fail("amplitudes", "required");
    StateVector amps = rd.state(doc["amplitudes"], "amplitudes", da * db);
    if (!is_normalized(amps)) rd.fail("amplitudes", "state is not normalized");
    return BipartiteState(da, db, std::move(amps));
}

inline Matrix parse_transform(const std::string& text, Eigen::Index dim, const std::string& source = "<transform>") {
    const io_detail::Reader rd(text, source);
    const json doc = rd.parse();
    if (!doc.is_object() || !doc.contains("matrix")) rd.fail("matrix", "required");
    return rd.matrix(doc["matrix"], "matrix", dim);
}

}  // namespace fpf
