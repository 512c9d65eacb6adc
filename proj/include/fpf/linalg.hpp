#pragma once

// Dense complex kernel shared by every other module: states are column
// vectors, operators are square matrices, hbar = 1.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "fpf/errors.hpp"

namespace fpf {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

namespace tolerance {
inline constexpr double equality = 1e-10;
inline constexpr double unitarity = 1e-12;
}  // namespace tolerance

enum class MatrixKind { general, hermitian, unitary, projector };

namespace detail {

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                             " vs " + std::to_string(b) + ")");
    }
}

inline void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw DimensionError(std::string(what) + ": matrix is not square");
    }
}

}  // namespace detail

/// Conjugate-linear in `bra`.
inline Complex inner(const StateVector& bra, const StateVector& ket) {
    detail::require_same_dim(bra.size(), ket.size(), "inner");
    return bra.dot(ket);
}

/// Kronecker product; basis index (i, j) maps to i * dim(b) + j.
inline StateVector tensor(const StateVector& a, const StateVector& b) {
    StateVector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        out.segment(i * b.size(), b.size()) = a(i) * b;
    }
    return out;
}

inline Matrix tensor(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline StateVector basis_state(Eigen::Index dim, Eigen::Index index) {
    if (dim < 1 || index < 0 || index >= dim) {
        throw DomainError("basis_state: index " + std::to_string(index) + " outside dimension " +
                          std::to_string(dim));
    }
    StateVector v = StateVector::Zero(dim);
    v(index) = 1.0;
    return v;
}

inline std::vector<StateVector> computational_basis(Eigen::Index dim) {
    std::vector<StateVector> basis;
    basis.reserve(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < dim; ++i) basis.push_back(basis_state(dim, i));
    return basis;
}

inline Matrix outer(const StateVector& ket, const StateVector& bra) { return ket * bra.adjoint(); }

inline Matrix projector(const StateVector& v) { return outer(v, v); }

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const auto z = m(i, j);
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        }
    }
    return true;
}

inline double max_abs_entry(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_normalized(const StateVector& v, double tol = tolerance::equality) {
    return v.size() >= 1 && std::abs(v.norm() - 1.0) <= tol;
}

inline bool is_hermitian(const Matrix& m, double tol = tolerance::equality) {
    return m.rows() == m.cols() && max_abs_entry(m - m.adjoint()) <= tol;
}

/// max |(M^dagger M - I)_ij| <= tol.
inline bool check_unitary(const Matrix& m, double tol = tolerance::unitarity) {
    if (m.rows() != m.cols()) return false;
    return max_abs_entry(m.adjoint() * m - Matrix::Identity(m.rows(), m.cols())) <= tol;
}

inline bool is_projector(const Matrix& m, double tol = tolerance::equality) {
    return is_hermitian(m, tol) && max_abs_entry(m * m - m) <= tol;
}

inline bool has_kind(const Matrix& m, MatrixKind kind, double tol = tolerance::equality) {
    switch (kind) {
        case MatrixKind::general:
            return m.rows() == m.cols();
        case MatrixKind::hermitian:
            return is_hermitian(m, tol);
        case MatrixKind::unitary:
            return check_unitary(m, tol);
        case MatrixKind::projector:
            return is_projector(m, tol);
    }
    return false;
}

/// True when `vectors` are pairwise orthonormal; with `complete` also require they span the space.
inline bool is_orthonormal_set(std::span<const StateVector> vectors, bool complete,
                               double tol = tolerance::equality) {
    if (vectors.empty()) return false;
    const auto dim = vectors.front().size();
    for (const auto& v : vectors) {
        if (v.size() != dim) return false;
    }
    if (complete && static_cast<Eigen::Index>(vectors.size()) != dim) return false;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        for (std::size_t j = i; j < vectors.size(); ++j) {
            const Complex g = vectors[i].dot(vectors[j]);
            const Complex expected = i == j ? Complex{1.0} : Complex{0.0};
            if (std::abs(g - expected) > tol) return false;
        }
    }
    return true;
}

/// exp(-i * theta * H) from a Hermitian eigensystem H = V diag(evals) V^dagger.
inline Matrix exp_from_spectrum(const Eigen::VectorXd& evals, const Matrix& evecs, double theta) {
    Eigen::VectorXcd phases(evals.size());
    for (Eigen::Index k = 0; k < evals.size(); ++k) {
        phases(k) = std::polar(1.0, -theta * evals(k));
    }
    return evecs * phases.asDiagonal() * evecs.adjoint();
}

/// exp(-i * theta * H) for Hermitian H, via the eigendecomposition of H.
inline Matrix hermitian_exp(const Matrix& h, double theta) {
    detail::require_square(h, "hermitian_exp");
    if (!is_hermitian(h)) throw ValidationError("hermitian_exp: generator is not Hermitian");
    if (theta == 0.0) return Matrix::Identity(h.rows(), h.cols());
    const Matrix sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw ValidationError("hermitian_exp: eigendecomposition failed");
    }
    return exp_from_spectrum(solver.eigenvalues(), solver.eigenvectors(), theta);
}

}  // namespace fpf
