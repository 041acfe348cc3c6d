#pragma once

#include "bdsoc/bdsde.hpp"
#include "bdsoc/core.hpp"
#include "bdsoc/environment.hpp"
#include "bdsoc/grid.hpp"
#include "bdsoc/model.hpp"
#include "bdsoc/regression.hpp"
#include "bdsoc/sde.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bdsoc {

enum class ValueBackend { grid_dp, regression_mc };

std::string to_string(ValueBackend backend);
ValueBackend parse_backend(const std::string& name);

/// u(t_i, x_j) on a time x space grid, conditioned on one backward path.
struct ValueField {
    TimeGrid time{0.0, 1.0, 1};
    SpaceGrid space = SpaceGrid::line(0.0, 1.0, 2);
    ControlSet controls = ControlSet::scalars({0.0});
    Matrix values;          ///< (N + 1) x nodes
    IndexMatrix argmax;     ///< (N + 1) x nodes; the last row repeats row N - 1
    Matrix standard_error;  ///< (N + 1) x nodes, zero for grid-DP
    Seed master_seed = 0;
    Seed b_seed = 0;
    ValueBackend backend = ValueBackend::grid_dp;

    Index steps() const { return time.steps(); }
    Vector row(Index i) const { return values.row(i).transpose(); }
    /// Multilinear interpolation of row i at x.
    Scalar at(Index i, const Vector& x) const;
    Scalar standard_error_at(Index i, const Vector& x) const;
    /// Grid index of time t (must be a grid time up to rounding).
    Index time_index(Scalar t) const;
};

struct ValueOptions {
    ValueBackend backend = ValueBackend::grid_dp;
    Index hermite_nodes = 5; ///< per W-dimension (grid-DP)
    Index replicas = 8;      ///< independent clouds (regression-MC)
};

/// Backward recursion u(t_i, .) = max_v G_{t_i, t_{i+1}}^v [u(t_{i+1}, .)]
/// with u(T, .) = h. Ties go to the lowest control index.
///
/// grid-DP evaluates the one-step scheme at every node with Gauss-Hermite
/// quadrature in W and the realised Delta B_i; it refuses n > 2.
/// regression-MC draws a cloud uniformly over the box at every step, moves
/// it one step with the environment's W increments and projects on hat
/// functions of the space grid; several independent clouds (sharing the
/// backward path) give the standard error.
ValueField solve_value_function(const CoefficientSet& model, const BrownianEnvironment& env, const SpaceGrid& space,
                                const ControlSet& controls, const ValueOptions& options = {});

struct SemigroupValue {
    Scalar value = 0.0;
    Scalar standard_error = 0.0;
};

/// G_{t, t + delta}[eta] under a constant control: the BDSDE on
/// [t_index, t_index + delta_steps] from x with terminal terminal(X_{t+delta}),
/// on a fresh ensemble that reuses the environment's noise.
SemigroupValue backward_semigroup(const CoefficientSet& model, const BrownianEnvironment& env, Index t_index,
                                  const Vector& x, Index delta_steps, const TerminalFn& terminal,
                                  const ControlSet& controls, Index control,
                                  const RegressionBasis& basis = RegressionBasis::polynomial(2));

struct DppEntry {
    Index t_index = 0;
    Vector x;
    Index delta_steps = 0;
    Scalar field_value = 0.0;
    Scalar semigroup_value = 0.0; ///< max over controls
    Index best_control = 0;
    Scalar standard_error = 0.0;
    Scalar residual = 0.0;
    Scalar tolerance = 0.0;
    bool pass = true;
};

struct DppReport {
    std::vector<DppEntry> entries;
    Scalar one_step_error = 0.0; ///< max over probes of the one-step residual
    bool pass = true;
};

struct Probe {
    Index t_index = 0;
    Vector x;
};

/// Residual |u(t, x) - max_v G_{t, t + delta}[u(t + delta, .)](x, v)| at every
/// probe and delta. Tolerance: one-step residual * delta + 3 SE + floor.
DppReport check_dpp(const ValueField& field, const CoefficientSet& model, const BrownianEnvironment& env,
                    const std::vector<Index>& delta_steps, const std::vector<Probe>& probes,
                    const RegressionBasis& basis = RegressionBasis::polynomial(2), Scalar floor = 1e-10);

struct EpsilonOptimalReport {
    std::optional<ControlPolicy> policy;
    Scalar value = 0.0;    ///< u(t, x)
    Scalar achieved = 0.0; ///< J(t, x; policy)
    Scalar gap = 0.0;      ///< value - achieved
    Scalar standard_error = 0.0;
    Scalar epsilon = 0.0;
    bool certified = false; ///< gap <= epsilon + 3 SE
};

/// Feedback policy reading the recorded argmax, certified by re-simulation.
EpsilonOptimalReport extract_epsilon_optimal(const ValueField& field, const CoefficientSet& model,
                                             const BrownianEnvironment& env, Index t_index, const Vector& x,
                                             Scalar epsilon,
                                             const RegressionBasis& basis = RegressionBasis::polynomial(2));

struct ContinuityReport {
    LadderReport x_ladder; ///< E|u(t,x) - u(t,x')|^2 against |x - x'|^2
    LadderReport t_ladder; ///< E|u(t,x) - u(t',x)|^2 against |t - t'|
    Scalar slope_tolerance = 0.25;
    bool strict_pass = true; ///< both slopes within the tolerance of 1
    bool bound_pass = true;  ///< both slopes >= 1 - tolerance (the Hoelder bound holds)
};

/// Expectation over the supplied fields (one per backward path). Degenerate
/// ladders (all differences zero) pass.
ContinuityReport check_continuity(const std::vector<ValueField>& fields, Index t_index, const Vector& x,
                                  const std::vector<Scalar>& x_offsets, const std::vector<Index>& t_offsets,
                                  Scalar slope_tolerance = 0.25);

} // namespace bdsoc
