#pragma once

#include "bdsoc/core.hpp"
#include "bdsoc/grid.hpp"

#include <functional>

namespace bdsoc {

/// Positive weight rho with its normalization certificate: quadrature values
/// of the mass and of the second moment on the truncated domain.
struct WeightFunction {
    std::function<Scalar(const Vector&)> rho;
    SpaceGrid domain;
    Scalar mass = 0.0;          ///< quadrature of rho
    Scalar second_moment = 0.0; ///< quadrature of |x|^2 rho
    Scalar min_on_grid = 0.0;

    /// rho > 0 on the grid, |mass - 1| <= tol and a finite second moment.
    bool certified(Scalar tol = 1e-6) const;
};

/// Certifies an arbitrary weight on `domain`.
WeightFunction make_weight(std::function<Scalar(const Vector&)> rho, SpaceGrid domain);

/// Standard normal density (2 pi)^{-n/2} exp(-|x|^2 / 2) truncated to
/// [-radius, radius]^n.
WeightFunction gaussian_weight(Index dim, Scalar radius = 6.0, Index points_per_axis = 241);

} // namespace bdsoc
