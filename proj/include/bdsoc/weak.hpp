#pragma once

#include "bdsoc/bdsde.hpp"
#include "bdsoc/core.hpp"
#include "bdsoc/environment.hpp"
#include "bdsoc/grid.hpp"
#include "bdsoc/model.hpp"
#include "bdsoc/sde.hpp"
#include "bdsoc/value.hpp"
#include "bdsoc/weight.hpp"

#include <functional>
#include <string>
#include <vector>

namespace bdsoc {

/// phi(t, x) = psi(t) * bump(x) with bump(x) = exp(-1 / (1 - |(x - c) / R|^2))
/// inside the ball and psi(t) = sum_k c_k t^k.
class TestFunction {
public:
    TestFunction(Vector center, Scalar radius, std::vector<Scalar> temporal = {1.0});

    Scalar spatial(const Vector& x) const;
    Vector gradient(const Vector& x) const;
    Scalar temporal(Scalar t) const;
    Scalar temporal_derivative(Scalar t) const;
    Scalar operator()(Scalar t, const Vector& x) const { return temporal(t) * spatial(x); }

    const Vector& center() const { return center_; }
    Scalar radius() const { return radius_; }
    const std::vector<Scalar>& temporal_coefficients() const { return coefficients_; }
    /// The support ball stays at least one cell away from the boundary.
    bool supported_inside(const SpaceGrid& grid) const;

private:
    Vector center_;
    Scalar radius_;
    std::vector<Scalar> coefficients_;
};

/// Bumps of radius R centred at {-2, -1, 0, 1, 2} * R / 2 along axis 0, each
/// with temporal parts 1 and (T - t) / (T - t0).
std::vector<TestFunction> default_battery(Index dim, Scalar t0, Scalar horizon, Scalar radius = 1.0);

/// Central differences on the grid (one-sided on the boundary); nodes x n.
Matrix grid_gradient(const SpaceGrid& grid, const Eigen::Ref<const Vector>& values);

struct NormReport {
    Scalar l2 = 0.0;             ///< int_0^T int |u|^2 rho
    Scalar sigma_gradient = 0.0; ///< int_0^T int |sigma* grad u|^2 rho
    Scalar gradient = 0.0;       ///< int_0^T int sum_i |d_i u|^2 rho
    Scalar h_norm = 0.0;         ///< sqrt(l2 + sigma_gradient)
    Scalar d_norm = 0.0;         ///< sqrt(l2 + gradient)
};

/// Weighted norms by trapezoid quadrature on the field's grid in space and
/// time. sigma is evaluated with the field's recorded control.
NormReport weighted_norms(const ValueField& field, const CoefficientSet& model, const WeightFunction& rho);

using SpatialFn = std::function<Scalar(const Vector&)>;

struct EquivalenceReport {
    std::vector<Scalar> times; ///< s values
    Matrix ratios;             ///< battery x times
    Vector integrated;         ///< time-integrated ratio per battery member
    Scalar lower = 0.0;        ///< c: smallest ratio seen
    Scalar upper = 0.0;        ///< C: largest ratio seen
    Scalar lower_bound = 0.5;
    Scalar upper_bound = 2.0;
    bool pass = true;
};

/// r(phi, s) = int E|phi(X_s^{t,x})| rho(x) dx / int |phi| rho dx with the
/// expectation over the environment's W paths and trapezoid quadrature over
/// the nodes of `x_nodes`. `time_offsets` are local step counts after t.
EquivalenceReport check_norm_equivalence(const CoefficientSet& model, const BrownianEnvironment& env,
                                         const ControlPolicy& policy, const WeightFunction& rho,
                                         const std::vector<SpatialFn>& battery, const SpaceGrid& x_nodes,
                                         Index start_index, const std::vector<Index>& time_offsets,
                                         Scalar lower_bound = 0.5, Scalar upper_bound = 2.0);

struct WeakEntry {
    Index test = 0;
    Index control = -1;    ///< -1: the field's recorded feedback control
    Scalar lhs = 0.0;
    Scalar rhs = 0.0;      ///< generator-consistent bilinear form
    Scalar margin = 0.0;
    Scalar rhs_variant = 0.0; ///< variant bilinear form, reported only
    Scalar margin_variant = 0.0;
    Scalar rhs_strong = 0.0;  ///< strong operator (second differences of u)
};

struct WeakOptions {
    Scalar epsilon = 0.05;
    Scalar tolerance = 1e-8; ///< tol_weak
    bool feedback_candidate = true;
    Index time_nodes = 3;    ///< Gauss-Legendre nodes per time interval
};

struct WeakFormReport {
    std::vector<WeakEntry> supersolution; ///< margin = lhs - rhs, every (test, constant control)
    std::vector<WeakEntry> attainment; ///< per test, best candidate; margin = rhs - lhs + epsilon
    Scalar epsilon = 0.0;
    Scalar tolerance = 0.0;
    Scalar min_supersolution_margin = 0.0;
    Scalar min_attainment_margin = 0.0;
    Scalar min_supersolution_variant = 0.0;
    Scalar min_attainment_variant = 0.0;
    Scalar route_difference = 0.0; ///< max |rhs - rhs_strong|
    bool pass_supersolution = true;
    bool pass_attainment = true;
    bool pass() const { return pass_supersolution && pass_attainment; }
};

/// Assembles both sides of the supersolution inequality (every constant
/// control) and the epsilon-attainment inequality (best candidate) for every
/// test function. On interval [t_i, t_{i+1}] the right side uses u(t_{i+1}),
/// sigma* grad u(t_{i+1}) and coefficients at t_i against int psi; the dB
/// term uses the realised Delta B_i with the interval average of phi.
/// The pass flags use the bilinear form
///   (L^v u, phi) = -1/2 int (grad u sigma)(sigma* grad phi) + int (b - A) . grad u phi,
/// the integration-by-parts image of int (L^v u) phi. The variant
/// +1/2 int (grad u sigma)(sigma* grad phi) + int u div(b - A) phi is
/// reported alongside.
WeakFormReport check_weak_inequalities(const ValueField& field, const CoefficientSet& model,
                                       const BrownianEnvironment& env, const std::vector<TestFunction>& battery,
                                       const WeakOptions& options = {});

struct WeakTolerance {
    Scalar c_ref = 0.0;
    Scalar monte_carlo = 0.0;
    Scalar tolerance = 0.0;
};

/// tol_weak = 3 SE + C_ref (dt + h^2), with C_ref from the margin change
/// between a run and its 2x refinement (dt/2, h/2), converted to an error
/// bound assuming convergence order no better than 1/2.
WeakTolerance calibrate_weak_tolerance(const WeakFormReport& coarse, const WeakFormReport& fine, Scalar dt, Scalar h,
                                       Scalar monte_carlo_error = 0.0, Scalar floor = 1e-8);

/// |int (grad u sigma)(sigma* grad phi) + int div(sigma sigma* grad u) phi|
/// on the grid for one time slice and control.
Scalar integration_by_parts_residual(const SpaceGrid& grid, const Eigen::Ref<const Vector>& u,
                                     const CoefficientSet& model, Scalar t, const Vector& v, const TestFunction& phi);

struct AdjointReport {
    Scalar ibp_residual = 0.0;     ///< max over tests, times and controls
    Scalar route_difference = 0.0; ///< max |weak-form rhs - strong-form rhs|
    Scalar tolerance = 0.0;
    bool pass = true;
};

AdjointReport check_adjoint_identity(const ValueField& field, const CoefficientSet& model,
                                     const BrownianEnvironment& env, const std::vector<TestFunction>& battery,
                                     Scalar tolerance);

struct RepresentationReport {
    PenaltyLadderReport ladder;
    Scalar field_value = 0.0;    ///< V(t, x)
    Scalar y0 = 0.0;             ///< Y^n_t at the largest level
    Scalar y0_limit = 0.0;       ///< Richardson limit over the ladder
    Scalar value_gap = 0.0;      ///< |y0_limit - V(t, x)|
    Scalar path_gap = 0.0;       ///< mean_p max_i |Y^n_i - V(t_i, X_i)|
    Scalar k_second_moment = 0.0;
    Scalar k_terminal = 0.0;     ///< mean K_T at the largest level
    Scalar z_error = 0.0;        ///< mean |Z - sigma* grad V| / z_reference
    Scalar z_reference = 0.0;    ///< max(mean |sigma* grad V| on paths, weighted RMS on the grid)
    Scalar tol_value = 0.0;
    Scalar tol_z = 0.1;
    std::vector<std::string> warnings;
    bool pass = true;
};

/// Penalised ladder with obstacle V = field along paths under a constant
/// control; checks Y^n -> V, a finite second moment of K_T and
/// Z^n ~ sigma* grad V.
RepresentationReport check_supersolution_representation(const ValueField& field, const CoefficientSet& model,
                                                        const BrownianEnvironment& env, Index control,
                                                        Index t_index, const Vector& x,
                                                        const RegressionBasis& basis,
                                                        const std::vector<Scalar>& levels, Scalar tol_z = 0.1);

} // namespace bdsoc
