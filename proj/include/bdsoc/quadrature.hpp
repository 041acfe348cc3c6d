#pragma once

#include "bdsoc/core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <vector>

namespace bdsoc {

template <typename T>
struct QuadratureRule {
    VectorT<T> nodes;
    VectorT<T> weights;
};

namespace detail {

// Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix,
// weights are mu0 times the squared first eigenvector components.
template <typename T>
QuadratureRule<T> golub_welsch(const VectorT<T>& off_diagonal, T mu0) {
    const Index n = off_diagonal.size() + 1;
    MatrixT<T> jacobi = MatrixT<T>::Zero(n, n);
    for (Index k = 0; k + 1 < n; ++k) {
        jacobi(k, k + 1) = off_diagonal[k];
        jacobi(k + 1, k) = off_diagonal[k];
    }
    Eigen::SelfAdjointEigenSolver<MatrixT<T>> eig(jacobi);
    QuadratureRule<T> rule{eig.eigenvalues(), VectorT<T>(n)};
    for (Index k = 0; k < n; ++k) rule.weights[k] = mu0 * eig.eigenvectors()(0, k) * eig.eigenvectors()(0, k);
    return rule;
}

} // namespace detail

/// Gauss-Hermite rule for the standard normal law: sum_k w_k p(x_k) equals
/// E[p(xi)], xi ~ N(0, 1), for polynomials p of degree <= 2n - 1.
template <typename T = Scalar>
QuadratureRule<T> gauss_hermite(Index n) {
    require(n >= 1, "gauss_hermite: at least one node");
    if (n == 1) return {VectorT<T>::Zero(1), VectorT<T>::Ones(1)};
    VectorT<T> off(n - 1);
    for (Index k = 0; k + 1 < n; ++k) off[k] = std::sqrt(static_cast<T>(k + 1));
    return detail::golub_welsch<T>(off, T(1));
}

/// Gauss-Legendre rule on [a, b].
template <typename T = Scalar>
QuadratureRule<T> gauss_legendre(Index n, T a = T(-1), T b = T(1)) {
    require(n >= 1, "gauss_legendre: at least one node");
    QuadratureRule<T> rule;
    if (n == 1) {
        rule = {VectorT<T>::Zero(1), VectorT<T>::Constant(1, T(2))};
    } else {
        VectorT<T> off(n - 1);
        for (Index k = 0; k + 1 < n; ++k) {
            const T kk = static_cast<T>(k + 1);
            off[k] = kk / std::sqrt(T(4) * kk * kk - T(1));
        }
        rule = detail::golub_welsch<T>(off, T(2));
    }
    const T half = (b - a) / T(2);
    const T mid = (b + a) / T(2);
    rule.nodes = (rule.nodes.array() * half + mid).matrix();
    rule.weights *= half;
    return rule;
}

/// Tensor-product Gauss-Hermite rule in `dim` dimensions; nodes stored as
/// columns.
struct TensorRule {
    Matrix nodes; ///< dim x count
    Vector weights;
};

TensorRule gauss_hermite_tensor(Index nodes_per_axis, Index dim);

} // namespace bdsoc
