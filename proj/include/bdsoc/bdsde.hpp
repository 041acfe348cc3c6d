#pragma once

#include "bdsoc/core.hpp"
#include "bdsoc/environment.hpp"
#include "bdsoc/model.hpp"
#include "bdsoc/regression.hpp"
#include "bdsoc/sde.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bdsoc {

/// Pathwise (Y, Z, K) on the ensemble's local steps 0 .. steps.
struct BdsdeSolution {
    Matrix y;      ///< M x (steps + 1)
    Matrix z;      ///< M x (steps * d); row p, block k holds Z_k of path p
    Matrix k;      ///< M x (steps + 1), non-decreasing, zero without penalty
    Index forward_dim = 1;
    Index start_index = 0;
    Scalar penalty_level = 0.0;
    Seed master_seed = 0;
    Seed b_seed = 0;
    /// Standard error of Y at the start, from the spread of the pathwise
    /// accumulated cost xi + sum (f dt + g dB + penalty dt).
    Scalar y0_standard_error = 0.0;
    /// xi_p + sum_i (f dt + g dB + dK) along each path.
    Vector pathwise_cost;
    std::vector<std::string> warnings;

    Index paths() const { return y.rows(); }
    Index steps() const { return y.cols() - 1; }
    Scalar y0() const { return y.col(0).mean(); }
    auto z_at(Index p, Index step) const { return z.row(p).segment(step * forward_dim, forward_dim).transpose(); }
};

using Obstacle = std::function<Scalar(Scalar t, const Vector& x)>;

/// Fine control over the backward recursion; defaults give the plain
/// BDSDE on the whole ensemble with terminal value h(X_T).
struct BackwardOptions {
    std::optional<Index> horizon_step;  ///< local step of the terminal time
    std::optional<Vector> terminal;     ///< terminal values per path (overrides h)
    const Obstacle* obstacle = nullptr; ///< lower obstacle for the penalty term
    Scalar penalty = 0.0;               ///< n in n (y - V)^-
};

/// Regression-based backward scheme, step i:
///   Z~_i = E[Y_{i+1} dW_i | X_i] / dt
///   Z_i  = E[(Y_{i+1} + g(t_i, X_i, Y_{i+1}, Z~_i) dB_i) dW_i | X_i] / dt
///   Y_i  = E[Y_{i+1} + f(t_i, X_i, Y_{i+1}, Z_i, v_i) dt + g(t_i, X_i, Y_{i+1}, Z_i) dB_i | X_i]
/// with the backward increment dB_i known. Y_{i+1} enters the Z targets
/// centred by its regression on X_i (a control variate; same conditional
/// expectation). With a penalty n the updated value
/// solves Y = Y_hat + n (Y - V)^- dt, i.e. Y = (Y_hat + n dt V) / (1 + n dt)
/// where Y_hat < V, and K_{i+1} = K_i + n (Y_i - V_i)^- dt.
/// One step of the scheme on an arbitrary sample: returns Y_i, Z_i at the
/// sample points, the driver increments f dt + g dB, and the fitted
/// projections so the step can be evaluated off-sample.
struct BackwardStep {
    Vector y;
    Matrix z;
    Vector increment;
    Regression y_fit;
    Regression z_fit;
};

BackwardStep backward_step(const CoefficientSet& model, const RegressionBasis& basis, Scalar t, Scalar dt,
                           const Matrix& states, const Vector& y_next, const Matrix& dw, const Vector& db,
                           const std::function<const Vector&(Index)>& control_of,
                           std::vector<std::string>* warnings = nullptr);

BdsdeSolution solve_backward(const CoefficientSet& model, const BrownianEnvironment& env,
                             const PathEnsemble& ensemble, const ControlPolicy& policy,
                             const RegressionBasis& basis, const BackwardOptions& options = {});

BdsdeSolution solve_bdsde(const CoefficientSet& model, const BrownianEnvironment& env, const PathEnsemble& ensemble,
                          const ControlPolicy& policy, const RegressionBasis& basis);

/// Penalised equation with driver f + n (y - V(t, x))^-. Warns when the
/// obstacle exceeds h on terminal states.
BdsdeSolution solve_penalized(const CoefficientSet& model, const BrownianEnvironment& env,
                              const PathEnsemble& ensemble, const ControlPolicy& policy,
                              const RegressionBasis& basis, const Obstacle& obstacle, Scalar level);

/// Result of the penalty ladder n = levels[0] < levels[1] < ...
struct PenaltyLadderReport {
    std::vector<Scalar> levels;
    std::vector<Scalar> y0;                ///< path mean of Y^n at the start
    std::vector<Scalar> k_terminal;        ///< path mean of K^n_T
    std::vector<Scalar> max_negative_part; ///< max over paths/steps of (Y^n - V)^-
    std::vector<Scalar> skorokhod;         ///< |mean_p sum_i (Y_i - V_i)(K_{i+1} - K_i)|
    Scalar y0_limit = 0.0;                 ///< Richardson limit over the last three levels
    Scalar k_limit = 0.0;
    Scalar monotonicity_violation = 0.0;   ///< max over levels/paths/steps of Y^n - Y^{n'} (n < n')
    Scalar tol_mc = 0.0;
    Scalar tol_sk = 0.0;
    bool monotone = true;
    bool negative_part_decreasing = true;
    bool skorokhod_ok = true;
    BdsdeSolution last; ///< solution at the largest level
};

PenaltyLadderReport run_penalty_ladder(const CoefficientSet& model, const BrownianEnvironment& env,
                                       const PathEnsemble& ensemble, const ControlPolicy& policy,
                                       const RegressionBasis& basis, const Obstacle& obstacle,
                                       const std::vector<Scalar>& levels);

/// Default ladder 2^0 .. 2^10.
std::vector<Scalar> default_penalty_ladder();

/// Terminal function and driver of one side of a comparison.
struct BdsdeParameters {
    TerminalFn terminal;
    DriverFn driver;
};

struct ComparisonReport {
    Scalar min_gap = 0.0;  ///< min over paths/steps of Y' - Y
    Scalar start_gap = 0.0; ///< Y'_0 - Y_0 (path means)
    Scalar standard_error = 0.0;
    Scalar tolerance = 0.0; ///< 3 standard errors
    bool pass = true;
};

/// Solves both equations on the same noise and reports min(Y' - Y).
/// Throws Error when xi <= xi' or f <= f' is violated on sampled points.
ComparisonReport check_comparison(const CoefficientSet& model, const BdsdeParameters& low, const BdsdeParameters& high,
                                  const BrownianEnvironment& env, const PathEnsemble& ensemble,
                                  const ControlPolicy& policy, const RegressionBasis& basis, Index samples = 2000);

/// E[sup |Y - Y'|^2] against E[|xi - xi'|^2] for xi' = h(X_T) + eps psi(X_T)
/// along an eps ladder (target slope 1).
LadderReport check_stability(const CoefficientSet& model, const BrownianEnvironment& env, const PathEnsemble& ensemble,
                             const ControlPolicy& policy, const RegressionBasis& basis, const TerminalFn& perturbation,
                             const std::vector<Scalar>& epsilons, Scalar slope_tolerance = 0.2);

/// Which argument of Y^{t, zeta; v} is perturbed along a ladder.
enum class PerturbedArgument { initial_state, start_time, control };

/// E[sup_s |Y^{t,zeta;v}_s - Y^{t',zeta';v'}_s|^2] (common times s) against
/// |zeta - zeta'|^2, |t - t'| or (T - t)|v - v'|^2 respectively; target slope 1.
/// `ladder` holds offsets (initial_state), step counts (start_time) or
/// control indices (control).
LadderReport check_parameter_stability(const CoefficientSet& model, const BrownianEnvironment& env,
                                       const RegressionBasis& basis, Index start_index, const Vector& x,
                                       const ControlSet& controls, Index control, PerturbedArgument argument,
                                       const std::vector<Scalar>& ladder, Scalar slope_tolerance = 0.2);

} // namespace bdsoc
