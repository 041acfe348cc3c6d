#include "bdsoc/value.hpp"
#include "bdsoc/parallel.hpp"
#include "bdsoc/quadrature.hpp"
#include "bdsoc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bdsoc {

std::string to_string(ValueBackend backend) {
    return backend == ValueBackend::grid_dp ? "grid-dp" : "regression-mc";
}

ValueBackend parse_backend(const std::string& name) {
    if (name == "grid-dp") return ValueBackend::grid_dp;
    if (name == "regression-mc") return ValueBackend::regression_mc;
    throw Error("unknown value backend '" + name + "' (expected grid-dp or regression-mc)");
}

Scalar ValueField::at(Index i, const Vector& x) const {
    require(i >= 0 && i < values.rows(), "ValueField: time index outside the field");
    return space.interpolate(values.row(i).transpose(), x);
}

Scalar ValueField::standard_error_at(Index i, const Vector& x) const {
    require(i >= 0 && i < standard_error.rows(), "ValueField: time index outside the field");
    return space.interpolate(standard_error.row(i).transpose(), x);
}

Index ValueField::time_index(Scalar t) const {
    const Scalar s = (t - time.t0()) / time.step();
    const Index i = static_cast<Index>(std::lround(s));
    require(i >= 0 && i <= time.steps() && std::abs(s - Scalar(i)) < 1e-6, "ValueField: time is not on the grid");
    return i;
}

namespace {

ValueField empty_field(const BrownianEnvironment& env, const SpaceGrid& space, const ControlSet& controls,
                       ValueBackend backend) {
    ValueField field;
    field.time = env.grid();
    field.space = space;
    field.controls = controls;
    const Index rows = env.grid().steps() + 1;
    field.values = Matrix::Zero(rows, space.size());
    field.argmax = IndexMatrix::Zero(rows, space.size());
    field.standard_error = Matrix::Zero(rows, space.size());
    field.master_seed = env.master_seed();
    field.b_seed = env.b_seed();
    field.backend = backend;
    return field;
}

void set_terminal_row(const CoefficientSet& model, ValueField& field) {
    const Index last = field.steps();
    for (Index j = 0; j < field.space.size(); ++j) field.values(last, j) = model.terminal(field.space.node(j));
    if (last >= 1) field.argmax.row(last) = field.argmax.row(last - 1);
}

// One explicit step of the scheme at a single point with the W-expectation
// replaced by the tensor Gauss-Hermite rule.
Scalar quadrature_step(const CoefficientSet& model, const TensorRule& rule, const SpaceGrid& space,
                       const Vector& next, Scalar t, Scalar dt, const Vector& x, const Vector& v, const Vector& db) {
    const Index q = rule.weights.size();
    const Index d = rule.nodes.rows();
    const Scalar root = std::sqrt(dt);
    const Vector drift = x + model.drift(t, x, v) * dt;
    const Matrix sigma = model.diffusion(t, x, v);
    Vector y_next(q);
    for (Index k = 0; k < q; ++k) {
        const Vector moved = drift + sigma * (rule.nodes.col(k) * root);
        y_next[k] = space.interpolate(next, moved);
    }
    Vector z_guess = Vector::Zero(d);
    for (Index k = 0; k < q; ++k) z_guess += rule.weights[k] * y_next[k] * rule.nodes.col(k);
    z_guess /= root;
    Vector z = Vector::Zero(d);
    for (Index k = 0; k < q; ++k) {
        const Scalar gdb = model.backward_driver(t, x, y_next[k], z_guess).dot(db);
        z += rule.weights[k] * (y_next[k] + gdb) * rule.nodes.col(k);
    }
    z /= root;
    Scalar y = 0.0;
    for (Index k = 0; k < q; ++k) {
        const Scalar fdt = model.driver(t, x, y_next[k], z, v) * dt;
        const Scalar gdb = model.backward_driver(t, x, y_next[k], z).dot(db);
        y += rule.weights[k] * (y_next[k] + fdt + gdb);
    }
    return y;
}

ValueField solve_grid_dp(const CoefficientSet& model, const BrownianEnvironment& env, const SpaceGrid& space,
                         const ControlSet& controls, Index hermite_nodes) {
    require(space.dim() <= 2, "grid-DP backend supports state dimension <= 2; use regression-mc");
    ValueField field = empty_field(env, space, controls, ValueBackend::grid_dp);
    const TensorRule rule = gauss_hermite_tensor(hermite_nodes, model.dims.forward);
    const TimeGrid& grid = env.grid();
    const Scalar dt = grid.step();
    const Index last = grid.steps();
    for (Index j = 0; j < space.size(); ++j) field.values(last, j) = model.terminal(space.node(j));
    for (Index i = last - 1; i >= 0; --i) {
        const Vector next = field.values.row(i + 1).transpose();
        const Vector db = env.db(i);
        const Scalar t = grid.time(i);
        parallel::parallel_for(static_cast<std::size_t>(space.size()), [&](std::size_t jj) {
            const Index j = static_cast<Index>(jj);
            const Vector x = space.node(j);
            Scalar best = 0.0;
            Index arg = 0;
            for (Index c = 0; c < controls.size(); ++c) {
                const Scalar y = quadrature_step(model, rule, space, next, t, dt, x, controls[c], db);
                if (c == 0 || y > best) {
                    best = y;
                    arg = c;
                }
            }
            field.values(i, j) = best;
            field.argmax(i, j) = arg;
        });
        if (!field.values.row(i).allFinite()) throw Error("grid-DP: non-finite value at step " + std::to_string(i));
    }
    set_terminal_row(model, field);
    return field;
}

// One independent regression-MC sweep on the environment's noise.
ValueField solve_mc_replica(const CoefficientSet& model, const BrownianEnvironment& env, const SpaceGrid& space,
                            const ControlSet& controls) {
    ValueField field = empty_field(env, space, controls, ValueBackend::regression_mc);
    const TimeGrid& grid = env.grid();
    const Scalar dt = grid.step();
    const Index last = grid.steps();
    const Index m = env.paths();
    const Index n = space.dim();
    const Index d = model.dims.forward;
    const RegressionBasis basis = RegressionBasis::piecewise_linear(space);
    Matrix nodes(space.size(), n);
    for (Index j = 0; j < space.size(); ++j) nodes.row(j) = space.node(j).transpose();
    for (Index j = 0; j < space.size(); ++j) field.values(last, j) = model.terminal(space.node(j));

    std::vector<std::string> warnings;
    for (Index i = last - 1; i >= 0; --i) {
        const Scalar t = grid.time(i);
        const Vector next = field.values.row(i + 1).transpose();
        const Vector db = env.db(i);
        std::mt19937_64 rng(mix_seed(env.master_seed(), 0xC10D0000ULL + static_cast<Seed>(i)));
        std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
        Matrix cloud(m, n);
        for (Index p = 0; p < m; ++p)
            for (Index a = 0; a < n; ++a)
                cloud(p, a) = space.lower()[a] + unit(rng) * (space.upper()[a] - space.lower()[a]);
        Matrix dw(m, d);
        for (Index p = 0; p < m; ++p) dw.row(p) = env.dw(p, i).transpose();

        Matrix candidates(space.size(), controls.size());
        for (Index c = 0; c < controls.size(); ++c) {
            const Vector& v = controls[c];
            Vector y_next(m);
            parallel::parallel_for(static_cast<std::size_t>(m), [&](std::size_t pp) {
                const Index p = static_cast<Index>(pp);
                const Vector x = cloud.row(p).transpose();
                const Vector moved = x + model.drift(t, x, v) * dt + model.diffusion(t, x, v) * dw.row(p).transpose();
                y_next[p] = space.interpolate(next, moved);
            });
            const BackwardStep step = backward_step(
                model, basis, t, dt, cloud, y_next, dw, db, [&](Index) -> const Vector& { return v; }, &warnings);
            candidates.col(c) = step.y_fit.evaluate(nodes).col(0);
        }
        for (Index j = 0; j < space.size(); ++j) {
            Index arg = 0;
            for (Index c = 1; c < controls.size(); ++c)
                if (candidates(j, c) > candidates(j, arg)) arg = c;
            field.values(i, j) = candidates(j, arg);
            field.argmax(i, j) = arg;
        }
        if (!field.values.row(i).allFinite()) throw Error("regression-MC: non-finite value at step " + std::to_string(i));
    }
    set_terminal_row(model, field);
    return field;
}

ValueField solve_regression_mc(const CoefficientSet& model, const BrownianEnvironment& env, const SpaceGrid& space,
                               const ControlSet& controls, Index replicas) {
    require(replicas >= 1, "regression-MC: at least one replica");
    ValueField first = solve_mc_replica(model, env, space, controls);
    if (replicas == 1) return first;
    std::vector<Matrix> runs{first.values};
    for (Index r = 1; r < replicas; ++r) {
        const BrownianEnvironment other =
            build_environment(env.grid(), env.paths(), env.forward_dim(), env.backward_dim(),
                              mix_seed(env.master_seed(), static_cast<Seed>(r)), env.b_seed());
        runs.push_back(solve_mc_replica(model, other, space, controls).values);
    }
    Matrix mean = Matrix::Zero(first.values.rows(), first.values.cols());
    for (const auto& v : runs) mean += v;
    mean /= static_cast<Scalar>(replicas);
    Matrix var = Matrix::Zero(mean.rows(), mean.cols());
    for (const auto& v : runs) var += (v - mean).array().square().matrix();
    var /= static_cast<Scalar>(replicas - 1);
    first.values = mean;
    first.standard_error = (var.array() / static_cast<Scalar>(replicas)).sqrt().matrix();
    return first;
}

} // namespace

ValueField solve_value_function(const CoefficientSet& model, const BrownianEnvironment& env, const SpaceGrid& space,
                                const ControlSet& controls, const ValueOptions& options) {
    require(space.dim() == model.dims.state, "solve_value_function: space grid dimension differs from the model");
    require(controls.dim() == model.dims.control, "solve_value_function: control dimension mismatch");
    require(env.forward_dim() == model.dims.forward, "solve_value_function: environment and model disagree on d");
    if (options.backend == ValueBackend::grid_dp) return solve_grid_dp(model, env, space, controls, options.hermite_nodes);
    return solve_regression_mc(model, env, space, controls, options.replicas);
}

SemigroupValue backward_semigroup(const CoefficientSet& model, const BrownianEnvironment& env, Index t_index,
                                  const Vector& x, Index delta_steps, const TerminalFn& terminal,
                                  const ControlSet& controls, Index control, const RegressionBasis& basis) {
    require(delta_steps >= 0 && t_index >= 0 && t_index + delta_steps <= env.grid().steps(),
            "backward_semigroup: interval leaves the grid");
    if (delta_steps == 0) return {terminal(x), 0.0};
    const ControlPolicy policy = ControlPolicy::constant(controls, control);
    const PathEnsemble paths = simulate_forward(model, env, t_index, x, policy);
    Vector eta(paths.paths());
    for (Index p = 0; p < paths.paths(); ++p) eta[p] = terminal(paths.state(p, delta_steps));
    BackwardOptions opts;
    opts.horizon_step = delta_steps;
    opts.terminal = eta;
    const BdsdeSolution sol = solve_backward(model, env, paths, policy, basis, opts);
    return {sol.y0(), sol.y0_standard_error};
}

DppReport check_dpp(const ValueField& field, const CoefficientSet& model, const BrownianEnvironment& env,
                    const std::vector<Index>& delta_steps, const std::vector<Probe>& probes,
                    const RegressionBasis& basis, Scalar floor) {
    require(!probes.empty() && !delta_steps.empty(), "check_dpp: need probes and delta steps");
    require(field.time == env.grid() && field.b_seed == env.b_seed(),
            "check_dpp: field and environment disagree on grid or backward path");
    for (const auto& pr : probes) {
        require(field.space.contains(pr.x), "check_dpp: probe outside the space grid");
        require(pr.t_index >= 0 && pr.t_index < field.steps(), "check_dpp: probe time outside the grid");
    }
    auto evaluate = [&](const Probe& pr, Index delta) {
        DppEntry e;
        e.t_index = pr.t_index;
        e.x = pr.x;
        e.delta_steps = delta;
        e.field_value = field.at(pr.t_index, pr.x);
        const Index target = pr.t_index + delta;
        const TerminalFn next = [&field, target](const Vector& y) { return field.at(target, y); };
        for (Index c = 0; c < field.controls.size(); ++c) {
            const SemigroupValue g = backward_semigroup(model, env, pr.t_index, pr.x, delta, next, field.controls, c, basis);
            if (c == 0 || g.value > e.semigroup_value) {
                e.semigroup_value = g.value;
                e.best_control = c;
                e.standard_error = g.standard_error;
            }
        }
        e.residual = std::abs(e.field_value - e.semigroup_value);
        return e;
    };

    DppReport rep;
    for (const auto& pr : probes) {
        if (pr.t_index + 1 > field.steps()) continue;
        rep.one_step_error = std::max(rep.one_step_error, evaluate(pr, 1).residual);
    }
    for (const auto& pr : probes) {
        for (Index delta : delta_steps) {
            require(delta >= 1, "check_dpp: delta steps must be positive");
            if (pr.t_index + delta > field.steps()) throw Error("check_dpp: probe plus delta leaves the grid");
            DppEntry e = evaluate(pr, delta);
            e.tolerance = rep.one_step_error * Scalar(delta) + 3.0 * e.standard_error + floor;
            e.pass = e.residual <= e.tolerance;
            rep.pass = rep.pass && e.pass;
            rep.entries.push_back(std::move(e));
        }
    }
    return rep;
}

EpsilonOptimalReport extract_epsilon_optimal(const ValueField& field, const CoefficientSet& model,
                                             const BrownianEnvironment& env, Index t_index, const Vector& x,
                                             Scalar epsilon, const RegressionBasis& basis) {
    require(field.time == env.grid(), "extract_epsilon_optimal: field and environment use different grids");
    require(epsilon >= 0.0, "extract_epsilon_optimal: epsilon must be non-negative");
    require(t_index >= 0 && t_index < field.steps(), "extract_epsilon_optimal: start time outside the grid");
    IndexMatrix table = field.argmax.topRows(field.steps());
    EpsilonOptimalReport rep;
    rep.policy = ControlPolicy::feedback(field.controls, field.space, std::move(table));
    const PathEnsemble paths = simulate_forward(model, env, t_index, x, *rep.policy);
    const BdsdeSolution sol = solve_bdsde(model, env, paths, *rep.policy, basis);
    rep.value = field.at(t_index, x);
    rep.achieved = sol.y0();
    rep.gap = rep.value - rep.achieved;
    rep.standard_error = sol.y0_standard_error;
    rep.epsilon = epsilon;
    rep.certified = rep.gap <= epsilon + 3.0 * rep.standard_error;
    return rep;
}

namespace {

void finish_ladder(LadderReport& rep, Scalar tol, bool& strict, bool& bound) {
    rep.fit = fit_power_law(rep.scale, rep.value);
    rep.target_slope = 1.0;
    rep.slope_tolerance = tol;
    const bool s = rep.fit.degenerate || std::abs(rep.fit.slope - 1.0) <= tol;
    const bool b = rep.fit.degenerate || rep.fit.slope >= 1.0 - tol;
    rep.pass = b;
    strict = strict && s;
    bound = bound && b;
}

} // namespace

ContinuityReport check_continuity(const std::vector<ValueField>& fields, Index t_index, const Vector& x,
                                  const std::vector<Scalar>& x_offsets, const std::vector<Index>& t_offsets,
                                  Scalar slope_tolerance) {
    require(!fields.empty(), "check_continuity: no fields");
    require(x_offsets.size() >= 2 && t_offsets.size() >= 2, "check_continuity: degenerate ladder");
    const Scalar count = static_cast<Scalar>(fields.size());
    ContinuityReport rep;
    rep.slope_tolerance = slope_tolerance;
    for (Scalar h : x_offsets) {
        require(h > 0.0, "check_continuity: x offsets must be positive");
        Vector x2 = x;
        x2[0] += h;
        require(fields.front().space.contains(x2), "check_continuity: x ladder leaves the grid");
        Scalar acc = 0.0;
        for (const auto& f : fields) acc += std::pow(f.at(t_index, x) - f.at(t_index, x2), 2);
        rep.x_ladder.scale.push_back(h * h);
        rep.x_ladder.value.push_back(acc / count);
        rep.x_ladder.ratio.push_back(acc / count / (h * h));
    }
    for (Index k : t_offsets) {
        require(k >= 1 && t_index + k <= fields.front().steps(), "check_continuity: t ladder leaves the grid");
        const Scalar dt = fields.front().time.time(t_index + k) - fields.front().time.time(t_index);
        Scalar acc = 0.0;
        for (const auto& f : fields) acc += std::pow(f.at(t_index, x) - f.at(t_index + k, x), 2);
        rep.t_ladder.scale.push_back(dt);
        rep.t_ladder.value.push_back(acc / count);
        rep.t_ladder.ratio.push_back(acc / count / dt);
    }
    finish_ladder(rep.x_ladder, slope_tolerance, rep.strict_pass, rep.bound_pass);
    finish_ladder(rep.t_ladder, slope_tolerance, rep.strict_pass, rep.bound_pass);
    return rep;
}

} // namespace bdsoc
