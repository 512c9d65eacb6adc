#pragma once

// Schmidt decomposition of bipartite pure states and the search for a
// counter-transformation on B that undoes a unitary applied to A.

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fpf/errors.hpp"
#include "fpf/linalg.hpp"

namespace fpf {

/// Amplitude of |i>_A |j>_B sits at index i * d_B + j.
struct BipartiteState {
    Eigen::Index d_a = 1;
    Eigen::Index d_b = 1;
    StateVector amplitudes;

    BipartiteState(Eigen::Index da, Eigen::Index db, StateVector amps)
        : d_a(da), d_b(db), amplitudes(std::move(amps)) {
        if (d_a < 1 || d_b < 1) throw DimensionError("BipartiteState: subsystem dimensions must be positive");
        detail::require_same_dim(amplitudes.size(), d_a * d_b, "BipartiteState");
        if (!is_normalized(amplitudes)) throw ValidationError("BipartiteState: state not normalized");
    }

    /// Amplitude grid M with M(i, j) = <i j|psi>.
    Matrix grid() const {
        Matrix m(d_a, d_b);
        for (Eigen::Index i = 0; i < d_a; ++i) {
            for (Eigen::Index j = 0; j < d_b; ++j) m(i, j) = amplitudes(i * d_b + j);
        }
        return m;
    }

    static StateVector flatten(const Matrix& m) {
        StateVector v(m.rows() * m.cols());
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
        }
        return v;
    }
};

struct SchmidtForm {
    std::vector<double> coefficients;  // descending, strictly positive
    std::vector<StateVector> basis_a;
    std::vector<StateVector> basis_b;

    std::size_t rank() const { return coefficients.size(); }

    StateVector reconstruct() const {
        StateVector out = StateVector::Zero(basis_a.front().size() * basis_b.front().size());
        for (std::size_t k = 0; k < rank(); ++k) out += coefficients[k] * tensor(basis_a[k], basis_b[k]);
        return out;
    }
};

// Singular values below this count as zero Schmidt coefficients.
inline constexpr double schmidt_rank_tolerance = 1e-12;

/// Singular value decomposition of the amplitude grid: M = U S V^dagger gives
/// |psi> = sum_k s_k |u_k> |conj(v_k)>.
inline SchmidtForm schmidt_decompose(const BipartiteState& psi) {
    const Matrix m = psi.grid();
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    SchmidtForm form;
    const auto& s = svd.singularValues();
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        if (s(k) <= schmidt_rank_tolerance) break;
        form.coefficients.push_back(s(k));
        form.basis_a.push_back(svd.matrixU().col(k));
        form.basis_b.push_back(svd.matrixV().col(k).conjugate());
    }
    if (form.coefficients.empty()) throw ValidationError("schmidt_decompose: state has Schmidt rank 0");
    return form;
}

/// (U_A (x) U_B)|psi>.
inline StateVector apply_local(const BipartiteState& psi, const Matrix& u_a, const Matrix& u_b) {
    detail::require_same_dim(u_a.rows(), psi.d_a, "apply_local");
    detail::require_same_dim(u_b.rows(), psi.d_b, "apply_local");
    return BipartiteState::flatten(u_a * psi.grid() * u_b.transpose());
}

struct EnvarianceResult {
    bool envariant = false;
    std::optional<Matrix> counter;  // U_B on d_B
    // Schmidt index k of A is mapped to permutation[k], with phase on B.
    std::vector<std::size_t> permutation;
    std::vector<Complex> phases;
    // The Schmidt basis was re-chosen inside degenerate coefficient blocks.
    bool adapted_basis = false;
    double residual = 0.0;
};

namespace detail {

inline Matrix complement_identity(const std::vector<StateVector>& basis_b, Eigen::Index d_b) {
    Matrix p = Matrix::Identity(d_b, d_b);
    for (const auto& b : basis_b) p -= projector(b);
    return p;
}

inline double envariance_residual(const BipartiteState& psi, const Matrix& u_a, const Matrix& u_b) {
    return (apply_local(psi, u_a, u_b) - psi.amplitudes).cwiseAbs().maxCoeff();
}

// Permutation-with-phases counter in the computed Schmidt basis.
inline std::optional<EnvarianceResult> permutation_counter(const BipartiteState& psi, const SchmidtForm& sf,
                                                           const Matrix& u_a, double tol) {
    const std::size_t r = sf.rank();
    EnvarianceResult res;
    res.permutation.assign(r, r);
    res.phases.assign(r, Complex{1.0});
    std::vector<bool> taken(r, false);
    for (std::size_t k = 0; k < r; ++k) {
        const StateVector image = u_a * sf.basis_a[k];
        for (std::size_t j = 0; j < r; ++j) {
            if (taken[j] || std::abs(sf.coefficients[j] - sf.coefficients[k]) > tol) continue;
            const Complex lambda = inner(sf.basis_a[j], image);
            if (std::abs(std::abs(lambda) - 1.0) <= tol) {
                res.permutation[k] = j;
                res.phases[k] = std::conj(lambda) / std::abs(lambda);
                taken[j] = true;
                break;
            }
        }
        if (res.permutation[k] == r) return std::nullopt;
    }
    Matrix u_b = complement_identity(sf.basis_b, psi.d_b);
    for (std::size_t k = 0; k < r; ++k) {
        u_b += res.phases[k] * outer(sf.basis_b[res.permutation[k]], sf.basis_b[k]);
    }
    res.residual = envariance_residual(psi, u_a, u_b);
    if (res.residual > tol) return std::nullopt;
    res.envariant = true;
    res.counter = std::move(u_b);
    return res;
}

// Inside each block of equal coefficients the Schmidt basis is free; pick the
// one diagonalizing U_A, after which the counter is a pure phase on each b_k.
inline std::optional<EnvarianceResult> adapted_counter(const BipartiteState& psi, const SchmidtForm& sf,
                                                       const Matrix& u_a, double tol) {
    const std::size_t r = sf.rank();
    std::vector<StateVector> new_a, new_b;
    std::vector<Complex> eigen_phases;
    std::size_t start = 0;
    while (start < r) {
        std::size_t stop = start + 1;
        while (stop < r && std::abs(sf.coefficients[stop] - sf.coefficients[start]) <= tol) ++stop;
        const auto n = static_cast<Eigen::Index>(stop - start);
        Matrix block(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index k = 0; k < n; ++k) {
                block(j, k) = inner(sf.basis_a[start + j], u_a * sf.basis_a[start + k]);
            }
        }
        // U_A must keep the block's span invariant.
        if (!check_unitary(block, tol)) return std::nullopt;
        Eigen::ComplexSchur<Matrix> schur(block);
        const Matrix& q = schur.matrixU();
        const Matrix& t = schur.matrixT();
        for (Eigen::Index k = 0; k < n; ++k) {
            StateVector a = StateVector::Zero(psi.d_a);
            StateVector b = StateVector::Zero(psi.d_b);
            for (Eigen::Index j = 0; j < n; ++j) {
                a += q(j, k) * sf.basis_a[start + j];
                b += std::conj(q(j, k)) * sf.basis_b[start + j];
            }
            new_a.push_back(a);
            new_b.push_back(b);
            eigen_phases.push_back(t(k, k) / std::abs(t(k, k)));
        }
        start = stop;
    }
    EnvarianceResult res;
    res.adapted_basis = true;
    Matrix u_b = complement_identity(new_b, psi.d_b);
    for (std::size_t k = 0; k < r; ++k) {
        res.permutation.push_back(k);
        res.phases.push_back(std::conj(eigen_phases[k]));
        u_b += res.phases.back() * projector(new_b[k]);
    }
    res.residual = envariance_residual(psi, u_a, u_b);
    if (res.residual > tol) return std::nullopt;
    res.envariant = true;
    res.counter = std::move(u_b);
    return res;
}

}  // namespace detail

/// Looks for U_B with (I (x) U_B)(U_A (x) I)|psi> = |psi>, among
/// permutations-with-phases of B's Schmidt basis. Phases are solved from the
/// overlaps, not searched.
inline EnvarianceResult check_envariance(const BipartiteState& psi, const Matrix& u_a,
                                         double tol = tolerance::equality) {
    if (u_a.rows() != psi.d_a || u_a.cols() != psi.d_a) throw DimensionError("check_envariance: U_A has wrong dimension");
    if (!check_unitary(u_a, tol)) throw ValidationError("check_envariance: U_A is not unitary");
    const SchmidtForm sf = schmidt_decompose(psi);
    if (auto direct = detail::permutation_counter(psi, sf, u_a, tol)) return *direct;
    if (auto adapted = detail::adapted_counter(psi, sf, u_a, tol)) return *adapted;
    EnvarianceResult none;
    none.residual = detail::envariance_residual(psi, u_a, Matrix::Identity(psi.d_b, psi.d_b));
    return none;
}

}  // namespace fpf
