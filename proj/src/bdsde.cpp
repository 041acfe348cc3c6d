#include "bdsoc/bdsde.hpp"
#include "bdsoc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace bdsoc {

BackwardStep backward_step(const CoefficientSet& model, const RegressionBasis& basis, Scalar t, Scalar dt,
                           const Matrix& states, const Vector& y_next, const Matrix& dw, const Vector& db,
                           const std::function<const Vector&(Index)>& control_of,
                           std::vector<std::string>* warnings) {
    const Index m = states.rows();
    const Index d = dw.cols();
    BackwardStep out;
    // Centring Y_{i+1} by its fitted conditional mean leaves E[. dW | X_i]
    // unchanged and removes most of the variance of the Z targets.
    const Vector centre = Regression::fit(basis, states, y_next, warnings).fitted().col(0);
    const Vector y_centred = y_next - centre;
    const Matrix z_guess_target = (dw.array().colwise() * y_centred.array()).matrix() / dt;
    const Regression z_guess = Regression::fit(basis, states, z_guess_target, warnings);

    Matrix z_target(m, d);
    parallel::parallel_for(static_cast<std::size_t>(m), [&](std::size_t pp) {
        const Index p = static_cast<Index>(pp);
        const Vector x = states.row(p).transpose();
        const Vector zt = z_guess.fitted().row(p).transpose();
        const Scalar gdb = model.backward_driver(t, x, y_next[p], zt).dot(db);
        z_target.row(p) = (y_centred[p] + gdb) * dw.row(p) / dt;
    });
    out.z_fit = Regression::fit(basis, states, z_target, warnings);
    out.z = out.z_fit.fitted();

    Vector y_target(m);
    out.increment.resize(m);
    parallel::parallel_for(static_cast<std::size_t>(m), [&](std::size_t pp) {
        const Index p = static_cast<Index>(pp);
        const Vector x = states.row(p).transpose();
        const Vector zp = out.z.row(p).transpose();
        const Vector& v = control_of(p);
        const Scalar fdt = model.driver(t, x, y_next[p], zp, v) * dt;
        const Scalar gdb = model.backward_driver(t, x, y_next[p], zp).dot(db);
        out.increment[p] = fdt + gdb;
        y_target[p] = y_next[p] + fdt + gdb;
    });
    out.y_fit = Regression::fit(basis, states, y_target, warnings);
    out.y = out.y_fit.fitted().col(0);
    return out;
}

BdsdeSolution solve_backward(const CoefficientSet& model, const BrownianEnvironment& env,
                             const PathEnsemble& ensemble, const ControlPolicy& policy,
                             const RegressionBasis& basis, const BackwardOptions& options) {
    require(ensemble.grid == env.grid(), "solve_bdsde: ensemble and environment use different grids");
    require(ensemble.master_seed == env.master_seed() && ensemble.b_seed == env.b_seed(),
            "solve_bdsde: ensemble and environment were generated from different seeds");
    require(ensemble.paths() == env.paths(), "solve_bdsde: ensemble and environment disagree on the path count");
    require(options.penalty >= 0.0, "solve_bdsde: penalty level must be non-negative");
    require(options.penalty == 0.0 || options.obstacle != nullptr, "solve_bdsde: a penalty needs an obstacle");

    const Index m = ensemble.paths();
    const Index d = model.dims.forward;
    const Index horizon = options.horizon_step.value_or(ensemble.steps());
    require(horizon >= 0 && horizon <= ensemble.steps(), "solve_bdsde: horizon outside the ensemble");
    const Scalar dt = env.grid().step();
    const Scalar n_pen = options.penalty;

    BdsdeSolution sol;
    sol.y.resize(m, horizon + 1);
    sol.z = Matrix::Zero(m, horizon * d);
    sol.k = Matrix::Zero(m, horizon + 1);
    sol.forward_dim = d;
    sol.start_index = ensemble.start_index;
    sol.penalty_level = n_pen;
    sol.master_seed = env.master_seed();
    sol.b_seed = env.b_seed();

    if (options.terminal) {
        require(options.terminal->size() == m, "solve_bdsde: terminal vector has the wrong length");
        sol.y.col(horizon) = *options.terminal;
    } else {
        for (Index p = 0; p < m; ++p) sol.y(p, horizon) = model.terminal(ensemble.state(p, horizon));
    }
    require(sol.y.col(horizon).allFinite(), "solve_bdsde: non-finite terminal value");

    Vector cost = sol.y.col(horizon);
    Matrix dk = Matrix::Zero(m, horizon);
    for (Index i = horizon - 1; i >= 0; --i) {
        const Index gi = ensemble.start_index + i;
        const Scalar t = env.grid().time(gi);
        const Matrix states = ensemble.states(i);
        const Vector y_next = sol.y.col(i + 1);
        const Vector db = env.db(gi);
        Matrix dw(m, d);
        for (Index p = 0; p < m; ++p) dw.row(p) = env.dw(p, gi).transpose();

        BackwardStep step = backward_step(
            model, basis, t, dt, states, y_next, dw, db,
            [&](Index p) -> const Vector& { return policy.controls()[ensemble.controls(p, i)]; }, &sol.warnings);
        Vector& y = step.y;
        const Matrix& z = step.z;
        const Vector& increment = step.increment;

        if (n_pen > 0.0) {
            const Scalar ndt = n_pen * dt;
            for (Index p = 0; p < m; ++p) {
                const Scalar obstacle = (*options.obstacle)(t, states.row(p).transpose());
                if (y[p] < obstacle) {
                    const Scalar corrected = (y[p] + ndt * obstacle) / (1.0 + ndt);
                    dk(p, i) = corrected - y[p];
                    y[p] = corrected;
                }
            }
        }
        if (!y.allFinite() || !z.allFinite()) {
            std::ostringstream os;
            os << "solve_bdsde: non-finite solution at step " << gi;
            throw Error(os.str());
        }
        sol.y.col(i) = y;
        sol.z.middleCols(i * d, d) = z;
        cost += increment + dk.col(i);
    }
    for (Index i = 0; i < horizon; ++i) sol.k.col(i + 1) = sol.k.col(i) + dk.col(i);
    sol.pathwise_cost = cost;
    sol.y0_standard_error = standard_error(cost);
    std::sort(sol.warnings.begin(), sol.warnings.end());
    sol.warnings.erase(std::unique(sol.warnings.begin(), sol.warnings.end()), sol.warnings.end());
    return sol;
}

BdsdeSolution solve_bdsde(const CoefficientSet& model, const BrownianEnvironment& env, const PathEnsemble& ensemble,
                          const ControlPolicy& policy, const RegressionBasis& basis) {
    return solve_backward(model, env, ensemble, policy, basis);
}

BdsdeSolution solve_penalized(const CoefficientSet& model, const BrownianEnvironment& env,
                              const PathEnsemble& ensemble, const ControlPolicy& policy,
                              const RegressionBasis& basis, const Obstacle& obstacle, Scalar level) {
    BackwardOptions opts;
    opts.obstacle = &obstacle;
    opts.penalty = level;
    BdsdeSolution sol = solve_backward(model, env, ensemble, policy, basis, opts);
    const Scalar horizon_time = env.grid().horizon();
    for (Index p = 0; p < ensemble.paths(); ++p) {
        if (obstacle(horizon_time, ensemble.state(p, ensemble.steps())) > sol.y(p, sol.steps()) + 1e-12) {
            sol.warnings.push_back("obstacle exceeds the terminal value on some terminal states");
            break;
        }
    }
    return sol;
}

std::vector<Scalar> default_penalty_ladder() {
    std::vector<Scalar> levels;
    for (int e = 0; e <= 10; ++e) levels.push_back(std::ldexp(1.0, e));
    return levels;
}

PenaltyLadderReport run_penalty_ladder(const CoefficientSet& model, const BrownianEnvironment& env,
                                       const PathEnsemble& ensemble, const ControlPolicy& policy,
                                       const RegressionBasis& basis, const Obstacle& obstacle,
                                       const std::vector<Scalar>& levels) {
    require(!levels.empty(), "run_penalty_ladder: empty ladder");
    require(std::is_sorted(levels.begin(), levels.end()), "run_penalty_ladder: levels must increase");
    PenaltyLadderReport rep;
    rep.levels = levels;
    const Index m = ensemble.paths();
    Matrix previous;
    Scalar max_se = 0.0;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        BdsdeSolution sol = solve_penalized(model, env, ensemble, policy, basis, obstacle, levels[li]);
        const Index steps = sol.steps();
        Scalar neg = 0.0;
        Scalar sk = 0.0;
        for (Index p = 0; p < m; ++p) {
            Scalar path_sk = 0.0;
            for (Index i = 0; i <= steps; ++i) {
                const Scalar gap = sol.y(p, i) - obstacle(env.grid().time(ensemble.start_index + i), ensemble.state(p, i));
                neg = std::max(neg, std::max(0.0, -gap));
                if (i < steps) path_sk += gap * (sol.k(p, i + 1) - sol.k(p, i));
            }
            sk += path_sk;
        }
        max_se = std::max(max_se, sol.y0_standard_error);
        rep.y0.push_back(sol.y0());
        rep.k_terminal.push_back(sol.k.col(steps).mean());
        rep.max_negative_part.push_back(neg);
        rep.skorokhod.push_back(std::abs(sk / static_cast<Scalar>(m)));
        if (li > 0) rep.monotonicity_violation = std::max(rep.monotonicity_violation, (previous - sol.y).maxCoeff());
        previous = sol.y;
        if (li + 1 == levels.size()) rep.last = std::move(sol);
    }
    rep.tol_mc = 3.0 * max_se;
    const std::size_t L = levels.size();
    rep.y0_limit = L >= 3 ? richardson_limit(rep.y0[L - 3], rep.y0[L - 2], rep.y0[L - 1]) : rep.y0.back();
    rep.k_limit = L >= 3 ? richardson_limit(rep.k_terminal[L - 3], rep.k_terminal[L - 2], rep.k_terminal[L - 1])
                         : rep.k_terminal.back();
    rep.monotone = rep.monotonicity_violation <= rep.tol_mc + 1e-12;
    for (std::size_t li = 1; li < L; ++li)
        if (rep.max_negative_part[li] > rep.max_negative_part[li - 1] + rep.tol_mc + 1e-12) rep.negative_part_decreasing = false;
    const Scalar y_scale = rep.last.y.cwiseAbs().maxCoeff();
    const Scalar k_scale = rep.last.k.col(rep.last.steps()).cwiseAbs().maxCoeff();
    rep.tol_sk = 1e-2 * y_scale * k_scale;
    rep.skorokhod_ok = rep.skorokhod.back() <= rep.tol_sk + 1e-14;
    return rep;
}

ComparisonReport check_comparison(const CoefficientSet& model, const BdsdeParameters& low, const BdsdeParameters& high,
                                  const BrownianEnvironment& env, const PathEnsemble& ensemble,
                                  const ControlPolicy& policy, const RegressionBasis& basis, Index samples) {
    require(low.terminal && low.driver && high.terminal && high.driver, "check_comparison: incomplete parameters");
    const Index m = ensemble.paths();
    for (Index p = 0; p < m; ++p) {
        const Vector xT = ensemble.state(p, ensemble.steps());
        if (low.terminal(xT) > high.terminal(xT))
            throw Error("check_comparison: terminal values are not ordered on the ensemble");
    }
    std::mt19937_64 rng(mix_seed(env.master_seed(), 0xC0FFEEULL));
    std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
    const Index d = model.dims.forward;
    const ControlSet& controls = policy.controls();
    for (Index s = 0; s < samples; ++s) {
        const Index p = static_cast<Index>(unit(rng) * Scalar(m)) % m;
        const Index k = static_cast<Index>(unit(rng) * Scalar(ensemble.steps())) % std::max<Index>(1, ensemble.steps());
        const Scalar t = env.grid().time(ensemble.start_index + k);
        const Vector x = ensemble.state(p, k);
        const Scalar y = 10.0 * unit(rng) - 5.0;
        Vector z(d);
        for (Index a = 0; a < d; ++a) z[a] = 10.0 * unit(rng) - 5.0;
        const Vector& v = controls[static_cast<Index>(unit(rng) * Scalar(controls.size())) % controls.size()];
        if (low.driver(t, x, y, z, v) > high.driver(t, x, y, z, v) + 1e-12)
            throw Error("check_comparison: drivers are not ordered on sampled points");
    }

    CoefficientSet lo = model;
    lo.terminal = low.terminal;
    lo.driver = low.driver;
    CoefficientSet hi = model;
    hi.terminal = high.terminal;
    hi.driver = high.driver;
    const BdsdeSolution a = solve_bdsde(lo, env, ensemble, policy, basis);
    const BdsdeSolution b = solve_bdsde(hi, env, ensemble, policy, basis);
    ComparisonReport rep;
    rep.min_gap = (b.y - a.y).minCoeff();
    rep.start_gap = b.y0() - a.y0();
    rep.standard_error = standard_error(b.pathwise_cost - a.pathwise_cost);
    rep.tolerance = 3.0 * rep.standard_error;
    rep.pass = rep.min_gap >= -rep.tolerance;
    return rep;
}

namespace {

Scalar mean_sup_squared(const Matrix& a, const Matrix& b) {
    return (a - b).array().square().rowwise().maxCoeff().mean();
}

} // namespace

LadderReport check_stability(const CoefficientSet& model, const BrownianEnvironment& env, const PathEnsemble& ensemble,
                             const ControlPolicy& policy, const RegressionBasis& basis, const TerminalFn& perturbation,
                             const std::vector<Scalar>& epsilons, Scalar slope_tolerance) {
    require(epsilons.size() >= 2, "check_stability: empty ladder");
    const BdsdeSolution base = solve_bdsde(model, env, ensemble, policy, basis);
    LadderReport rep;
    rep.target_slope = 1.0;
    rep.slope_tolerance = slope_tolerance;
    const Index m = ensemble.paths();
    for (Scalar eps : epsilons) {
        CoefficientSet shifted = model;
        const TerminalFn h = model.terminal;
        shifted.terminal = [h, perturbation, eps](const Vector& x) { return h(x) + eps * perturbation(x); };
        const BdsdeSolution other = solve_bdsde(shifted, env, ensemble, policy, basis);
        Scalar dxi = 0.0;
        for (Index p = 0; p < m; ++p) {
            const Scalar e = eps * perturbation(ensemble.state(p, ensemble.steps()));
            dxi += e * e;
        }
        dxi /= static_cast<Scalar>(m);
        const Scalar dy = mean_sup_squared(base.y, other.y);
        rep.scale.push_back(dxi);
        rep.value.push_back(dy);
        rep.ratio.push_back(dxi > 0.0 ? dy / dxi : 0.0);
    }
    rep.fit = fit_power_law(rep.scale, rep.value);
    rep.pass = rep.fit.degenerate || std::abs(rep.fit.slope - 1.0) <= slope_tolerance;
    return rep;
}

LadderReport check_parameter_stability(const CoefficientSet& model, const BrownianEnvironment& env,
                                       const RegressionBasis& basis, Index start_index, const Vector& x,
                                       const ControlSet& controls, Index control, PerturbedArgument argument,
                                       const std::vector<Scalar>& ladder, Scalar slope_tolerance) {
    require(ladder.size() >= 2, "check_parameter_stability: empty ladder");
    const ControlPolicy policy = ControlPolicy::constant(controls, control);
    const PathEnsemble base_paths = simulate_forward(model, env, start_index, x, policy);
    const BdsdeSolution base = solve_bdsde(model, env, base_paths, policy, basis);
    const TimeGrid& grid = env.grid();
    LadderReport rep;
    rep.target_slope = 1.0;
    rep.slope_tolerance = slope_tolerance;
    for (Scalar entry : ladder) {
        Scalar scale = 0.0;
        Scalar value = 0.0;
        switch (argument) {
        case PerturbedArgument::initial_state: {
            require(entry > 0.0, "check_parameter_stability: offsets must be positive");
            Vector x2 = x;
            x2[0] += entry;
            const PathEnsemble paths = simulate_forward(model, env, start_index, x2, policy);
            const BdsdeSolution other = solve_bdsde(model, env, paths, policy, basis);
            scale = entry * entry;
            value = mean_sup_squared(base.y, other.y);
            break;
        }
        case PerturbedArgument::start_time: {
            const Index shift = static_cast<Index>(std::lround(entry));
            require(shift >= 1 && start_index + shift < grid.steps(), "check_parameter_stability: bad time shift");
            const PathEnsemble paths = simulate_forward(model, env, start_index + shift, x, policy);
            const BdsdeSolution other = solve_bdsde(model, env, paths, policy, basis);
            scale = grid.time(start_index + shift) - grid.time(start_index);
            value = mean_sup_squared(base.y.rightCols(other.y.cols()), other.y);
            break;
        }
        case PerturbedArgument::control: {
            const Index idx = static_cast<Index>(std::lround(entry));
            require(controls.valid_index(idx) && idx != control, "check_parameter_stability: bad control index");
            const ControlPolicy p2 = ControlPolicy::constant(controls, idx);
            const PathEnsemble paths = simulate_forward(model, env, start_index, x, p2);
            const BdsdeSolution other = solve_bdsde(model, env, paths, p2, basis);
            scale = (grid.horizon() - grid.time(start_index)) * (controls[idx] - controls[control]).squaredNorm();
            value = mean_sup_squared(base.y, other.y);
            break;
        }
        }
        rep.scale.push_back(scale);
        rep.value.push_back(value);
        rep.ratio.push_back(value / scale);
    }
    rep.fit = fit_power_law(rep.scale, rep.value);
    rep.pass = rep.fit.degenerate || std::abs(rep.fit.slope - 1.0) <= slope_tolerance;
    return rep;
}

} // namespace bdsoc
