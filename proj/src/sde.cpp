#include "bdsoc/sde.hpp"
#include "bdsoc/parallel.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <sstream>

namespace bdsoc {

ControlPolicy ControlPolicy::constant(ControlSet controls, Index index) {
    require(controls.valid_index(index), "ControlPolicy: constant control index outside the control set");
    ControlPolicy p(Mode::constant, std::move(controls));
    p.constant_ = index;
    return p;
}

ControlPolicy ControlPolicy::open_loop(ControlSet controls, std::vector<Index> per_step) {
    require(!per_step.empty(), "ControlPolicy: empty open-loop sequence");
    for (Index i : per_step) require(controls.valid_index(i), "ControlPolicy: open-loop index outside the control set");
    ControlPolicy p(Mode::open_loop, std::move(controls));
    p.sequence_ = std::move(per_step);
    return p;
}

ControlPolicy ControlPolicy::feedback(ControlSet controls, SpaceGrid grid, IndexMatrix table) {
    require(table.cols() == grid.size(), "ControlPolicy: feedback table must cover every space node");
    require(table.rows() >= 1, "ControlPolicy: feedback table must cover at least one step");
    for (Index i = 0; i < table.size(); ++i)
        require(controls.valid_index(table.data()[i]), "ControlPolicy: feedback index outside the control set");
    ControlPolicy p(Mode::feedback, std::move(controls));
    p.grid_.push_back(std::move(grid));
    p.table_ = std::move(table);
    return p;
}

void ControlPolicy::check_covers(Index steps) const {
    if (mode_ == Mode::open_loop)
        require(static_cast<Index>(sequence_.size()) >= steps, "ControlPolicy: open-loop sequence shorter than the grid");
    if (mode_ == Mode::feedback) require(table_.rows() >= steps, "ControlPolicy: feedback table shorter than the grid");
}

Index ControlPolicy::control_index(Index step, const Eigen::Ref<const Vector>& x) const {
    switch (mode_) {
    case Mode::constant:
        return constant_;
    case Mode::open_loop:
        return sequence_.at(static_cast<std::size_t>(step));
    case Mode::feedback:
        return table_(step, grid_.front().nearest(x));
    }
    return constant_;
}

std::string ControlPolicy::tag() const {
    std::ostringstream os;
    switch (mode_) {
    case Mode::constant: os << "constant:" << constant_; break;
    case Mode::open_loop: os << "open-loop:" << sequence_.size(); break;
    case Mode::feedback: os << "feedback:" << table_.rows() << "x" << table_.cols(); break;
    }
    return os.str();
}

Matrix PathEnsemble::states(Index k) const {
    Matrix out(paths(), state_dim);
    for (Index c = 0; c < state_dim; ++c) out.col(c) = values.col(k * state_dim + c);
    return out;
}

PathEnsemble simulate_forward(const CoefficientSet& model, const BrownianEnvironment& env, Index start_index,
                              const Vector& x, const ControlPolicy& policy, Scalar blowup_guard) {
    const TimeGrid& grid = env.grid();
    const Index n = model.dims.state;
    require(start_index >= 0 && start_index <= grid.steps(), "simulate_forward: start index outside the grid");
    require(x.size() == n, "simulate_forward: start point has the wrong dimension");
    require(env.forward_dim() == model.dims.forward, "simulate_forward: environment and model disagree on d");
    require(policy.controls().dim() == model.dims.control, "simulate_forward: control dimension mismatch");
    policy.check_covers(grid.steps());

    const Index steps = grid.steps() - start_index;
    const Index m = env.paths();
    PathEnsemble ens;
    ens.values.resize(m, (steps + 1) * n);
    ens.controls.resize(m, steps);
    ens.start_index = start_index;
    ens.start = x;
    ens.state_dim = n;
    ens.grid = grid;
    ens.policy_tag = policy.tag();
    ens.model_name = model.name;
    ens.master_seed = env.master_seed();
    ens.b_seed = env.b_seed();

    const Scalar dt = grid.step();
    std::vector<std::string> failures(static_cast<std::size_t>(m));
    parallel::parallel_for(static_cast<std::size_t>(m), [&](std::size_t pp) {
        const Index p = static_cast<Index>(pp);
        Vector state = x;
        ens.values.row(p).segment(0, n) = state.transpose();
        for (Index k = 0; k < steps; ++k) {
            const Index i = start_index + k;
            const Scalar t = grid.time(i);
            const Index vi = policy.control_index(i, state);
            const Vector& v = policy.controls()[vi];
            ens.controls(p, k) = vi;
            state += model.drift(t, state, v) * dt + model.diffusion(t, state, v) * env.dw(p, i);
            if (!state.allFinite() || state.cwiseAbs().maxCoeff() > blowup_guard) {
                std::ostringstream os;
                os << "simulate_forward: state blew up on path " << p << " at step " << (i + 1);
                failures[pp] = os.str();
                return;
            }
            ens.values.row(p).segment((k + 1) * n, n) = state.transpose();
        }
    });
    for (const auto& f : failures)
        if (!f.empty()) throw Error(f);
    return ens;
}

MomentReport check_moment_bounds(const PathEnsemble& ensemble, Scalar p, const std::vector<Scalar>& delta_ladder,
                                 Scalar max_variation) {
    require(ensemble.paths() >= 1, "check_moment_bounds: empty ensemble");
    require(p == 2.0 || p == 4.0, "check_moment_bounds: exponent must be 2 or 4");
    const Index m = ensemble.paths();
    const Index steps = ensemble.steps();
    const Scalar dt = ensemble.grid.step();
    MomentReport rep;
    rep.exponent = p;
    rep.max_variation = max_variation;

    Scalar sup_acc = 0.0;
    for (Index q = 0; q < m; ++q) {
        Scalar s = 0.0;
        for (Index k = 0; k <= steps; ++k) s = std::max(s, std::pow(ensemble.state(q, k).norm(), p));
        sup_acc += s;
    }
    rep.sup_ratio = sup_acc / static_cast<Scalar>(m) / (1.0 + std::pow(ensemble.start.norm(), p));

    for (Scalar delta : delta_ladder) {
        const Index window = std::clamp<Index>(static_cast<Index>(std::lround(delta / dt)), 1, steps);
        const Scalar realised = static_cast<Scalar>(window) * dt;
        Scalar acc = 0.0;
        for (Index q = 0; q < m; ++q) {
            Scalar s = 0.0;
            for (Index k = 0; k <= window; ++k)
                s = std::max(s, std::pow((ensemble.state(q, k) - ensemble.start).norm(), p));
            acc += s;
        }
        rep.deltas.push_back(realised);
        rep.delta_ratios.push_back(acc / static_cast<Scalar>(m) / std::pow(realised, p / 2.0));
    }
    rep.variation = variation_factor(rep.delta_ratios);
    // growth of the ratio as the window shrinks; a decaying ratio (drift
    // dominated, sigma vanishing) is still bounded
    rep.growth = 1.0;
    for (std::size_t a = 0; a < rep.deltas.size(); ++a)
        for (std::size_t b = 0; b < rep.deltas.size(); ++b) {
            if (!(rep.deltas[b] < rep.deltas[a]) || rep.delta_ratios[b] <= 0.0) continue;
            rep.growth = rep.delta_ratios[a] > 0.0
                             ? std::max(rep.growth, rep.delta_ratios[b] / rep.delta_ratios[a])
                             : std::numeric_limits<Scalar>::infinity();
        }
    rep.pass = std::isfinite(rep.sup_ratio) && rep.growth <= max_variation;
    return rep;
}

namespace {

Scalar mean_sup_squared_gap(const PathEnsemble& a, const PathEnsemble& b) {
    const Index m = a.paths();
    Scalar acc = 0.0;
    for (Index q = 0; q < m; ++q) {
        Scalar s = 0.0;
        for (Index k = 0; k <= a.steps(); ++k) s = std::max(s, (a.state(q, k) - b.state(q, k)).squaredNorm());
        acc += s;
    }
    return acc / static_cast<Scalar>(m);
}

} // namespace

LadderReport check_flow_stability(const CoefficientSet& model, const BrownianEnvironment& env, Index start_index,
                                  const Vector& x, const Vector& direction, const std::vector<Scalar>& offsets,
                                  const ControlPolicy& policy, Scalar slope_tolerance) {
    require(offsets.size() >= 2, "check_flow_stability: ladder needs at least two points");
    const PathEnsemble base = simulate_forward(model, env, start_index, x, policy);
    LadderReport rep;
    rep.target_slope = 2.0;
    rep.slope_tolerance = slope_tolerance;
    for (Scalar h : offsets) {
        require(h > 0.0, "check_flow_stability: offsets must be positive");
        const Vector shift = direction.normalized() * h;
        const PathEnsemble moved = simulate_forward(model, env, start_index, x + shift, policy);
        const Scalar gap = mean_sup_squared_gap(base, moved);
        rep.scale.push_back(h);
        rep.value.push_back(gap);
        rep.ratio.push_back(gap / (h * h));
    }
    rep.fit = fit_power_law(rep.scale, rep.value);
    rep.pass = !rep.fit.degenerate && std::abs(rep.fit.slope - rep.target_slope) <= slope_tolerance * rep.target_slope;
    return rep;
}

LadderReport check_control_stability(const CoefficientSet& model, const BrownianEnvironment& env, Index start_index,
                                     const Vector& x, const ControlSet& controls, Index base,
                                     const std::vector<Index>& ladder, Scalar max_variation) {
    require(ladder.size() >= 2, "check_control_stability: ladder needs at least two controls");
    const PathEnsemble ref = simulate_forward(model, env, start_index, x, ControlPolicy::constant(controls, base));
    const Scalar horizon = env.grid().horizon() - env.grid().time(start_index);
    LadderReport rep;
    rep.target_slope = 1.0;
    rep.max_variation = max_variation;
    for (Index k : ladder) {
        const Scalar dv2 = (controls[k] - controls[base]).squaredNorm();
        require(dv2 > 0.0, "check_control_stability: ladder controls must differ from the base control");
        const PathEnsemble other = simulate_forward(model, env, start_index, x, ControlPolicy::constant(controls, k));
        const Scalar gap = mean_sup_squared_gap(ref, other);
        rep.scale.push_back(horizon * dv2);
        rep.value.push_back(gap);
        rep.ratio.push_back(gap / (horizon * dv2));
    }
    rep.fit = fit_power_law(rep.scale, rep.value);
    const Scalar variation = variation_factor(rep.ratio);
    rep.pass = variation <= max_variation;
    return rep;
}

} // namespace bdsoc
