#pragma once

#include "bdsoc/core.hpp"
#include "bdsoc/grid.hpp"

#include <functional>
#include <string>
#include <vector>

namespace bdsoc {

struct Dimensions {
    Index state = 1;    ///< n, dimension of X
    Index forward = 1;  ///< d, dimension of W (and of Z)
    Index backward = 1; ///< l, dimension of B
    Index control = 1;  ///< k, dimension of the control points
};

using DriftFn = std::function<Vector(Scalar t, const Vector& x, const Vector& v)>;
using DiffusionFn = std::function<Matrix(Scalar t, const Vector& x, const Vector& v)>;
using DriverFn = std::function<Scalar(Scalar t, const Vector& x, Scalar y, const Vector& z, const Vector& v)>;
using BackwardDriverFn = std::function<Vector(Scalar t, const Vector& x, Scalar y, const Vector& z)>;
using TerminalFn = std::function<Scalar(const Vector& x)>;

/// Coefficients of the controlled forward SDE and of the doubly stochastic
/// cost equation, together with their declared Lipschitz constants.
///
///   dX = b(t,X,v) dt + sigma(t,X,v) dW
///   -dY = f(t,X,Y,Z,v) dt + g(t,X,Y,Z) dB(backward) - Z dW,  Y_T = h(X_T)
struct CoefficientSet {
    std::string name;
    Dimensions dims;
    DriftFn drift;                  ///< b, values in R^n
    DiffusionFn diffusion;          ///< sigma, values in R^{n x d}
    DriverFn driver;                ///< f
    BackwardDriverFn backward_driver; ///< g, values in R^l
    TerminalFn terminal;            ///< h
    Scalar lipschitz = 1.0;         ///< declared L
    Scalar alpha = 0.5;             ///< declared contraction of g in z
};

struct LipschitzCheck {
    std::string function; ///< "b", "sigma", "f", "g", "h"
    std::string part;     ///< "joint", "x", "y", "z" or "v"
    Scalar max_ratio = 0.0;
    Scalar declared = 0.0;
    bool pass = true;
};

struct ValidationReport {
    std::vector<LipschitzCheck> checks;
    Scalar slack = 1.05;
    bool pass() const;
    Scalar max_ratio(const std::string& function, const std::string& part) const;
};

struct ValidationOptions {
    Scalar box_radius = 3.0; ///< x, y and z are sampled in [-r, r]
    Scalar t_begin = 0.0;
    Scalar t_end = 1.0;
    Scalar slack = 1.05;
    Seed seed = 20240611;
};

/// Samples finite-difference Lipschitz ratios of every coefficient, block by
/// block, and compares them with the declared constants. For g the squared
/// convention |g - g'|^2 <= L|y - y'|^2 + alpha|z - z'|^2 is used for the
/// y and z parts.
///
/// Throws Error if alpha is outside (0, 1), L <= 0, an output has the wrong
/// shape or any sampled output is non-finite.
ValidationReport validate_model(const CoefficientSet& model, const ControlSet& controls, Index sample_budget,
                                const ValidationOptions& options = {});

} // namespace bdsoc
