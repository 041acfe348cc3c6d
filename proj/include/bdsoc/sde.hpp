#pragma once

#include "bdsoc/core.hpp"
#include "bdsoc/environment.hpp"
#include "bdsoc/grid.hpp"
#include "bdsoc/model.hpp"
#include "bdsoc/stats.hpp"

#include <string>
#include <vector>

namespace bdsoc {

using IndexMatrix = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Admissible control valued in a ControlSet: constant, open-loop per time
/// step, or a feedback table over (time step, nearest space node).
class ControlPolicy {
public:
    enum class Mode { constant, open_loop, feedback };

    static ControlPolicy constant(ControlSet controls, Index index);
    static ControlPolicy open_loop(ControlSet controls, std::vector<Index> per_step);
    /// table(i, j): control index at global step i and space node j.
    static ControlPolicy feedback(ControlSet controls, SpaceGrid grid, IndexMatrix table);

    Mode mode() const { return mode_; }
    const ControlSet& controls() const { return controls_; }
    Index control_index(Index step, const Eigen::Ref<const Vector>& x) const;
    const Vector& control(Index step, const Eigen::Ref<const Vector>& x) const {
        return controls_[control_index(step, x)];
    }
    /// Checks the policy covers every step of a grid with `steps` steps.
    void check_covers(Index steps) const;
    std::string tag() const;

private:
    ControlPolicy(Mode mode, ControlSet controls) : mode_(mode), controls_(std::move(controls)) {}

    Mode mode_;
    ControlSet controls_;
    Index constant_ = 0;
    std::vector<Index> sequence_;
    std::vector<SpaceGrid> grid_; // zero or one entry
    IndexMatrix table_;
};

/// States X^{t,x;v} of M paths from a common start, on the global grid steps
/// start_index .. N. Local step k corresponds to global step start_index + k.
struct PathEnsemble {
    RowMatrix values;   ///< M x ((steps + 1) * n)
    IndexMatrix controls; ///< M x steps, control index used on each step
    Index start_index = 0;
    Vector start;
    Index state_dim = 1;
    TimeGrid grid{0.0, 1.0, 1};
    std::string policy_tag;
    std::string model_name;
    Seed master_seed = 0;
    Seed b_seed = 0;

    Index paths() const { return values.rows(); }
    Index steps() const { return grid.steps() - start_index; }
    auto state(Index p, Index k) const { return values.row(p).segment(k * state_dim, state_dim).transpose(); }
    /// Column of component `c` at local step k across all paths.
    Vector component(Index k, Index c = 0) const { return values.col(k * state_dim + c); }
    /// M x n matrix of states at local step k.
    Matrix states(Index k) const;
};

/// Euler-Maruyama for dX = b dt + sigma dW over the environment, starting at
/// global step `start_index` from x. Throws Error naming the path and step if
/// a state becomes non-finite or exceeds the blow-up guard.
PathEnsemble simulate_forward(const CoefficientSet& model, const BrownianEnvironment& env, Index start_index,
                              const Vector& x, const ControlPolicy& policy, Scalar blowup_guard = 1e6);

struct MomentReport {
    Scalar exponent = 2.0;
    Scalar sup_ratio = 0.0; ///< E[sup |X|^p] / (1 + |x|^p)
    std::vector<Scalar> deltas;       ///< realised window lengths (multiples of the step)
    std::vector<Scalar> delta_ratios; ///< E[sup_{s <= t + delta} |X_s - x|^p] / delta^{p/2}
    Scalar variation = 1.0;           ///< max / min of the positive delta ratios
    Scalar growth = 1.0;              ///< largest ratio(delta') / ratio(delta) over delta' < delta
    Scalar max_variation = 2.0;       ///< bound on growth
    bool pass = true;
};

/// Empirical moment ratios of the forward flow for p in {2, 4}.
MomentReport check_moment_bounds(const PathEnsemble& ensemble, Scalar p,
                                 const std::vector<Scalar>& delta_ladder = {0.1, 0.05, 0.025},
                                 Scalar max_variation = 2.0);

/// Values measured along a 3-point (or longer) perturbation ladder with a
/// fitted power law.
struct LadderReport {
    std::vector<Scalar> scale;  ///< perturbation size on the ladder
    std::vector<Scalar> value;  ///< measured quantity
    std::vector<Scalar> ratio;  ///< value / reference combination
    PowerLawFit fit;
    Scalar target_slope = 1.0;
    Scalar slope_tolerance = 0.2; ///< relative
    Scalar max_variation = 2.0;
    bool pass = true;
};

/// E[sup |X^{x} - X^{x'}|^2] against |x - x'| for x' = x + offset * direction,
/// shared noise. Target exponent 2.
LadderReport check_flow_stability(const CoefficientSet& model, const BrownianEnvironment& env, Index start_index,
                                  const Vector& x, const Vector& direction, const std::vector<Scalar>& offsets,
                                  const ControlPolicy& policy, Scalar slope_tolerance = 0.2);

/// E[sup |X^{v} - X^{v_k}|^2] against (T - t)|v - v_k|^2 for constant controls
/// v = controls[base] and v_k = controls[ladder[k]]; passes when the ratio is
/// stable across the ladder.
LadderReport check_control_stability(const CoefficientSet& model, const BrownianEnvironment& env, Index start_index,
                                     const Vector& x, const ControlSet& controls, Index base,
                                     const std::vector<Index>& ladder, Scalar max_variation = 2.0);

} // namespace bdsoc
