#include "bdsoc/pipeline.hpp"

#include "bdsoc/bdsde.hpp"
#include "bdsoc/environment.hpp"
#include "bdsoc/io.hpp"
#include "bdsoc/parallel.hpp"
#include "bdsoc/quadrature.hpp"
#include "bdsoc/registry.hpp"
#include "bdsoc/sde.hpp"
#include "bdsoc/stats.hpp"
#include "bdsoc/value.hpp"
#include "bdsoc/weak.hpp"
#include "bdsoc/weight.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace bdsoc {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
    return out;
}

// Every key of `doc` must exist in `schema`; model.parameters is free-form
// (the registry validates it).
void check_keys(const json& doc, const json& schema, const std::string& prefix) {
    if (!doc.is_object()) throw Error("config: '" + (prefix.empty() ? std::string("<root>") : prefix) + "' must be an object");
    for (const auto& [key, value] : doc.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!schema.contains(key)) {
            std::vector<std::string> keys;
            for (const auto& kv : schema.items()) keys.push_back(kv.key());
            throw Error("config: unknown key '" + path + "'; valid keys: " + join(keys));
        }
        if (path == "model.parameters") continue;
        if (schema[key].is_object()) check_keys(value, schema[key], path);
    }
}

void merge(json& into, const json& from) {
    for (const auto& [key, value] : from.items()) {
        if (value.is_object() && into.contains(key) && into[key].is_object()) merge(into[key], value);
        else into[key] = value;
    }
}

template <typename T>
T get(const json& doc, const char* section, const char* key) {
    const json& v = section ? doc.at(section).at(key) : doc.at(key);
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw Error(std::string("config: '") + (section ? std::string(section) + "." : "") + key + "' has the wrong type");
    }
}

struct Context {
    const ExperimentConfig& cfg;
    RegistryModel rm;
    TimeGrid tg;
    BrownianEnvironment env;
    Vector x0;
    Seed ms;
    Seed bs;
    std::filesystem::path dir;
    std::vector<CheckResult> checks;
    std::vector<std::string> artifacts;
    std::optional<ValueField> dp;

    Context(const ExperimentConfig& c, RegistryModel model)
        : cfg(c), rm(std::move(model)), tg(c.t0, c.horizon, c.steps),
          env(build_environment(tg, c.paths, rm.model.dims.forward, rm.model.dims.backward, *c.master_seed, *c.b_seed)),
          x0(Vector::Constant(rm.model.dims.state, c.start)), ms(*c.master_seed), bs(*c.b_seed), dir(c.output) {}

    void add(const std::string& criterion, const std::string& name, Scalar value, Scalar tolerance,
             const std::string& relation, bool pass) {
        checks.push_back({criterion, name, value, tolerance, relation, pass, ms, bs});
    }
    void write(const std::string& file, const std::string& content) {
        write_text((dir / file).string(), content);
        artifacts.push_back(file);
    }
    SpaceGrid space() const { return SpaceGrid::line(cfg.lower, cfg.upper, cfg.points); }
    const ValueField& field() {
        if (!dp) dp = solve_value_function(rm.model, env, space(), rm.controls);
        return *dp;
    }
    ControlPolicy policy() const {
        require(rm.controls.valid_index(cfg.control), "config: control index " + std::to_string(cfg.control) +
                                                          " outside the control set of size " +
                                                          std::to_string(rm.controls.size()));
        return ControlPolicy::constant(rm.controls, cfg.control);
    }
    Index probe_step() const { return std::max<Index>(1, tg.steps() / 5); }
};

RegistryModel build_model(const std::string& name, const ExperimentConfig& cfg) {
    RegistryModel rm = make_registry_model(name, name == cfg.model ? cfg.parameters : std::map<std::string, Scalar>{});
    if (name == cfg.model && !cfg.controls.empty()) rm.controls = ControlSet::scalars(cfg.controls);
    return rm;
}

// --- suites ---------------------------------------------------------------

void suite_validation(Context& c) {
    ValidationOptions opts;
    opts.slack = c.cfg.tol.lipschitz_slack;
    opts.seed = mix_seed(c.ms, 0x7A11);
    const ValidationReport rep = validate_model(c.rm.model, c.rm.controls, 2000, opts);
    Scalar worst = 0.0;
    for (const auto& chk : rep.checks)
        if (chk.declared > 0.0) worst = std::max(worst, chk.max_ratio / chk.declared);
    c.add("model", "lipschitz ratio / declared constant", worst, rep.slack, "<=", rep.pass());
}

void suite_forward(Context& c, bool export_ensemble) {
    const ControlPolicy pol = c.policy();
    const PathEnsemble ens = simulate_forward(c.rm.model, c.env, 0, c.x0, pol);
    if (export_ensemble) c.write("ensemble.csv", ensemble_csv(ens));
    for (Scalar p : {2.0, 4.0}) {
        const MomentReport m = check_moment_bounds(ens, p, {0.1, 0.05, 0.025}, c.cfg.tol.variation);
        const std::string tag = "p=" + std::to_string(int(p));
        c.add("C4", "sup moment ratio " + tag, m.sup_ratio, std::numeric_limits<Scalar>::infinity(), "finite",
              std::isfinite(m.sup_ratio));
        c.add("C4", "small-time moment ratio growth as delta shrinks " + tag, m.growth, m.max_variation, "<=", m.pass);
        c.add("C4", "small-time moment ratio max/min over delta ladder " + tag, m.variation, m.max_variation, "info", true);
    }
    Vector dir = Vector::Ones(c.rm.model.dims.state);
    const LadderReport flow = check_flow_stability(c.rm.model, c.env, 0, c.x0, dir, {0.1, 0.05, 0.025}, pol,
                                                   c.cfg.tol.slope);
    c.add("C4", "flow exponent of E sup|X - X'|^2 in |x - x'| (target 2)", flow.fit.slope, c.cfg.tol.slope * 2.0,
          "|v-2|<=", flow.pass);
    if (c.rm.controls.size() >= 3) {
        std::vector<Index> ladder;
        for (Index k = 0; k < c.rm.controls.size(); ++k)
            if (k != c.cfg.control) ladder.push_back(k);
        const LadderReport ctl = check_control_stability(c.rm.model, c.env, 0, c.x0, c.rm.controls, c.cfg.control,
                                                         ladder, c.cfg.tol.variation);
        c.add("C4", "control-perturbation ratio variation", variation_factor(ctl.ratio), c.cfg.tol.variation, "<=", ctl.pass);
    }
}

void martingale_oracle(Context& c) {
    const RegistryModel rm = build_model("martingale", c.cfg);
    const ControlPolicy pol = ControlPolicy::constant(rm.controls, 0);
    const PathEnsemble ens = simulate_forward(rm.model, c.env, 0, c.x0, pol);
    const BdsdeSolution sol = solve_bdsde(rm.model, c.env, ens, pol, RegressionBasis::polynomial(2));
    const Scalar tol = 3.0 * sol.y0_standard_error + 0.05 * std::sqrt(c.tg.step());
    c.add("C1", "martingale |Y0 - x0|", std::abs(sol.y0() - c.x0[0]), tol, "<=", std::abs(sol.y0() - c.x0[0]) <= tol);

    const Scalar sigma = rm.parameters.at("sigma");
    Scalar err = 0.0;
    for (Index p = 0; p < sol.paths(); ++p)
        for (Index k = 0; k < sol.steps(); ++k) err += std::abs(sol.z(p, k) - sigma);
    err /= Scalar(sol.paths() * sol.steps()) * std::max(std::abs(sigma), 1e-300);
    c.add("C8", "martingale time-averaged |Z - sigma| / sigma", err, c.cfg.tol.z, "<=", err <= c.cfg.tol.z);
}

Scalar linear_closed_form(const RegistryModel& rm, const BrownianEnvironment& env) {
    const Scalar a = rm.parameters.at("a"), b = rm.parameters.at("b"), cc = rm.parameters.at("c");
    const Scalar span = env.grid().horizon() - env.grid().t0();
    const Scalar bt = env.b_increment_between(0, env.grid().steps())[0];
    return cc * std::exp(a * span + b * bt - 0.5 * b * b * span);
}

void linear_oracle(Context& c) {
    const RegistryModel rm = build_model("linear-bdsde", c.cfg);
    const ControlPolicy pol = ControlPolicy::constant(rm.controls, 0);
    const RegressionBasis basis = RegressionBasis::polynomial(2);
    // validate the closed form on a 2^12-step grid first
    const TimeGrid fine(c.tg.t0(), c.tg.horizon(), 4096);
    const BrownianEnvironment fenv = build_environment(fine, 4, 1, 1, c.ms, c.bs);
    const BdsdeSolution fsol = solve_bdsde(rm.model, fenv, simulate_forward(rm.model, fenv, 0, c.x0, pol), pol, basis);
    const Scalar fclosed = linear_closed_form(rm, fenv);
    const Scalar frel = std::abs(fsol.y0() - fclosed) / std::abs(fclosed);
    c.add("C1", "linear closed form vs 4096-step recursion (relative)", frel, 0.01, "<=", frel <= 0.01);

    const BdsdeSolution sol = solve_bdsde(rm.model, c.env, simulate_forward(rm.model, c.env, 0, c.x0, pol), pol, basis);
    const Scalar closed = linear_closed_form(rm, c.env);
    const Scalar rel = std::abs(sol.y0() - closed) / std::abs(closed);
    c.add("C1", "linear-bdsde |Y0 - closed form| (relative)", rel, 0.05, "<=", rel <= 0.05);
}

void suite_solve(Context& c) {
    const ControlPolicy pol = c.policy();
    const PathEnsemble ens = simulate_forward(c.rm.model, c.env, 0, c.x0, pol);
    const BdsdeSolution sol = solve_bdsde(c.rm.model, c.env, ens, pol, RegressionBasis::polynomial(2));
    c.write("bdsde.csv", solution_csv(sol, c.rm.model.name));
    Scalar terminal = 0.0;
    for (Index p = 0; p < sol.paths(); ++p)
        terminal = std::max(terminal, std::abs(sol.y(p, sol.steps()) - c.rm.model.terminal(ens.state(p, ens.steps()))));
    c.add("aux", "terminal exactness max |Y_N - h(X_N)|", terminal, 0.0, "<=", terminal == 0.0);
    c.add("aux", "Y0 (standard error in tolerance column)", sol.y0(), sol.y0_standard_error, "info", true);
    if (c.cfg.model == "martingale") martingale_oracle(c);
    if (c.cfg.model == "linear-bdsde") linear_oracle(c);
}

void suite_comparison(Context& c) {
    const ControlPolicy pol = c.policy();
    const PathEnsemble ens = simulate_forward(c.rm.model, c.env, 0, c.x0, pol);
    std::mt19937_64 rng(mix_seed(c.ms, 0xC0A4));
    std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
    const BdsdeParameters low{c.rm.model.terminal, c.rm.model.driver};
    const RegressionBasis comparison_basis =
        RegressionBasis::piecewise_constant(SpaceGrid::line(c.cfg.lower - 1.0, c.cfg.upper + 1.0, 33));
    Scalar worst = std::numeric_limits<Scalar>::infinity();
    bool pass = true;
    for (Index k = 0; k < c.cfg.comparison_instances; ++k) {
        const Scalar a = 0.5 * unit(rng), b = 0.5 * unit(rng), w = 0.5 + 1.5 * unit(rng);
        const TerminalFn h = c.rm.model.terminal;
        const DriverFn f = c.rm.model.driver;
        BdsdeParameters high;
        high.terminal = [h, a, w](const Vector& x) { return h(x) + a * (1.0 + 0.5 * std::sin(w * x[0])); };
        high.driver = [f, b, w](Scalar t, const Vector& x, Scalar y, const Vector& z, const Vector& v) {
            return f(t, x, y, z, v) + b * (1.0 + 0.5 * std::cos(w * x[0]));
        };
        // cell means are order preserving; a global polynomial fit is not
        const ComparisonReport r = check_comparison(c.rm.model, low, high, c.env, ens, pol, comparison_basis);
        worst = std::min(worst, r.min_gap + r.tolerance);
        pass = pass && r.pass;
    }
    c.add("C2", "min over instances of min(Y' - Y) + 3 SE", worst, 0.0, ">=", pass);
}

void suite_stability(Context& c) {
    const ControlPolicy pol = c.policy();
    const PathEnsemble ens = simulate_forward(c.rm.model, c.env, 0, c.x0, pol);
    const RegressionBasis basis = RegressionBasis::polynomial(2);
    const LadderReport s = check_stability(c.rm.model, c.env, ens, pol, basis,
                                           [](const Vector& x) { return 1.0 + 0.5 * std::sin(x[0]); },
                                           {0.1, 0.05, 0.025}, c.cfg.tol.slope);
    c.add("C3", "terminal-data exponent of E sup|dY|^2 in E|d xi|^2", s.fit.degenerate ? 1.0 : s.fit.slope, c.cfg.tol.slope,
          "|v-1|<=", s.pass);
    const LadderReport p = check_parameter_stability(c.rm.model, c.env, basis, 0, c.x0, c.rm.controls, c.cfg.control,
                                                     PerturbedArgument::initial_state, {0.1, 0.05, 0.025},
                                                     c.cfg.tol.slope);
    c.add("C3", "initial-state exponent of E sup|dY|^2 in |d zeta|^2", p.fit.degenerate ? 1.0 : p.fit.slope, c.cfg.tol.slope,
          "|v-1|<=", p.pass);
}

void suite_dpp(Context& c) {
    const ValueField& f = c.field();
    std::vector<Probe> probes;
    const Index t = c.probe_step();
    for (Scalar dx : {-1.0, -0.5, 0.0, 0.5, 1.0}) probes.push_back({t, (c.x0.array() + dx).matrix()});
    std::vector<Index> deltas;
    for (Index d : {1, 5, 10})
        if (t + d <= c.tg.steps()) deltas.push_back(d);
    const DppReport r = check_dpp(f, c.rm.model, c.env, deltas, probes);
    c.write("dpp.csv", dpp_csv(r, c.rm.model.name, c.ms, c.bs));
    Scalar worst = 0.0, max_res = 0.0;
    for (const auto& e : r.entries) {
        worst = std::max(worst, e.residual / e.tolerance);
        max_res = std::max(max_res, e.residual);
    }
    c.add("C5", "max DPP residual / tol_dpp", worst, 1.0, "<=", r.pass);
    if (c.rm.deterministic)
        c.add("C5", "deterministic model max DPP residual", max_res, 1e-10, "<=", max_res <= 1e-10);

    const EpsilonOptimalReport eo = extract_epsilon_optimal(f, c.rm.model, c.env, 0, c.x0, c.cfg.tol.epsilon);
    c.add("aux", "epsilon-optimal feedback gap u - J", eo.gap, eo.epsilon + 3.0 * eo.standard_error, "<=", eo.certified);
}

void suite_value(Context& c) {
    const ValueField& f = c.field();
    c.write("value.csv", value_field_csv(f, c.rm.model.name));
    ValueOptions mo;
    mo.backend = ValueBackend::regression_mc;
    mo.replicas = c.cfg.replicas;
    const SpaceGrid mc_space = SpaceGrid::line(c.cfg.lower, c.cfg.upper, c.cfg.mc_points);
    const ValueField mc = solve_value_function(c.rm.model, c.env, mc_space, c.rm.controls, mo);
    c.write("value_mc.csv", value_field_csv(mc, c.rm.model.name));
    const Scalar diff = std::abs(f.at(0, c.x0) - mc.at(0, c.x0));
    const Scalar tol = 3.0 * mc.standard_error_at(0, c.x0) + c.cfg.tol.agreement * (c.tg.step() + mc_space.max_spacing());
    c.add("C6", "|grid-DP - regression-MC| at (t0, start)", diff, tol, "<=", diff <= tol);
}

void suite_continuity(Context& c) {
    std::vector<ValueField> fields;
    for (Index k = 0; k < c.cfg.continuity_fields; ++k) {
        const BrownianEnvironment e = build_environment(c.tg, 1, c.rm.model.dims.forward, c.rm.model.dims.backward, c.ms,
                                                        mix_seed(c.bs, Seed(k)));
        fields.push_back(solve_value_function(c.rm.model, e, c.space(), c.rm.controls));
    }
    const Vector probe = (c.x0.array() + c.cfg.continuity_probe).matrix();
    const ContinuityReport r = check_continuity(fields, 0, probe, {0.05, 0.1, 0.2}, {1, 2, 4}, c.cfg.tol.continuity);
    const Scalar bound = 1.0 - c.cfg.tol.continuity;
    auto slope = [](const LadderReport& l) { return l.fit.degenerate ? 1.0 : l.fit.slope; };
    c.add("C11", "x-slope of E|u(t,x) - u(t,x')|^2 in |x - x'|^2", slope(r.x_ladder), bound, ">=",
          r.x_ladder.fit.degenerate || r.x_ladder.fit.slope >= bound);
    c.add("C11", "t-slope of E|u(t,x) - u(t',x)|^2 in |t - t'|", slope(r.t_ladder), bound, ">=",
          r.t_ladder.fit.degenerate || r.t_ladder.fit.slope >= bound);
    c.add("C11", "both slopes within tolerance of 1 (1 = yes)", r.strict_pass ? 1.0 : 0.0, c.cfg.tol.continuity, "info",
          true);
}

void suite_penalization(Context& c) {
    // deterministic Snell example: f = g = 0, sigma = 0, h = 0, obstacle T - t
    const RegistryModel zero = make_registry_model("zero");
    const ControlPolicy zpol = ControlPolicy::constant(zero.controls, 0);
    const BrownianEnvironment senv = build_environment(c.tg, 64, 1, 1, c.ms, c.bs);
    const PathEnsemble sens = simulate_forward(zero.model, senv, 0, c.x0, zpol);
    const Scalar horizon = c.tg.horizon();
    const Obstacle snell = [horizon](Scalar t, const Vector&) { return horizon - t; };
    const PenaltyLadderReport lad = run_penalty_ladder(zero.model, senv, sens, zpol, RegressionBasis::polynomial(2),
                                                       snell, c.cfg.penalty_levels);
    std::ostringstream os;
    os << "# model=zero (obstacle T - t)\n# master_seed=" << c.ms << "\n# b_seed=" << c.bs
       << "\nlevel,y0,k_terminal,max_negative_part,skorokhod\n" << std::setprecision(17);
    for (std::size_t k = 0; k < lad.levels.size(); ++k)
        os << lad.levels[k] << ',' << lad.y0[k] << ',' << lad.k_terminal[k] << ',' << lad.max_negative_part[k] << ','
           << lad.skorokhod[k] << '\n';
    c.write("snell_ladder.csv", os.str());
    const Scalar target = horizon - c.tg.t0();
    const Scalar ey = std::abs(lad.y0.back() - target) / target, ek = std::abs(lad.k_terminal.back() - target) / target;
    c.add("C7", "Snell |Y^n_t0 - (T - t0)| / (T - t0) at largest n", ey, 0.02, "<=", ey <= 0.02);
    c.add("C7", "Snell |K^n_T - (T - t0)| / (T - t0) at largest n", ek, 0.05, "<=", ek <= 0.05);
    c.add("C7", "Snell max (Y^n - V)^- at largest n (decreasing in n)", lad.max_negative_part.back(), 0.0, "decreasing",
          lad.negative_part_decreasing);
    c.add("C7", "Snell Skorokhod residual", lad.skorokhod.back(), lad.tol_sk, "<=", lad.skorokhod_ok);
    c.add("C7", "Snell penalty monotonicity violation", lad.monotonicity_violation, lad.tol_mc, "<=", lad.monotone);

    // supersolution representation of the configured model's value field
    const ValueField& f = c.field();
    const Index ctrl = f.argmax(0, f.space.nearest(c.x0));
    const RepresentationReport r = check_supersolution_representation(
        f, c.rm.model, c.env, ctrl, 0, c.x0, RegressionBasis::polynomial(2), c.cfg.penalty_levels, c.cfg.tol.z);
    c.write("penalized.csv", solution_csv(r.ladder.last, c.rm.model.name));
    c.add("C7", "representation |lim Y^n_t0 - V(t0, start)|", r.value_gap, r.tol_value, "<=", r.value_gap <= r.tol_value);
    c.add("C7", "representation E|K_T|^2", r.k_second_moment, std::numeric_limits<Scalar>::infinity(), "finite",
          std::isfinite(r.k_second_moment));
    c.add("C7", "representation relative |Z^n - sigma* grad V|", r.z_error, r.tol_z, "<=", r.z_error <= r.tol_z);
    c.add("C7", "representation penalty monotonicity violation", r.ladder.monotonicity_violation, r.ladder.tol_mc, "<=",
          r.ladder.monotone);
}

Scalar gaussian_bump(Scalar x, Scalar width) { return std::exp(-0.5 * x * x / (width * width)); }

void suite_norm_equivalence(Context& c) {
    const WeightFunction rho = gaussian_weight(1);
    const std::vector<Scalar> widths = {0.5, 1.0, 2.0};
    std::vector<SpatialFn> battery;
    for (Scalar w : widths) battery.push_back([w](const Vector& x) { return gaussian_bump(x[0], w); });
    const SpaceGrid nodes = SpaceGrid::line(-6.0, 6.0, 49);
    const Index n = c.tg.steps();
    const std::vector<Index> offsets = {0, n / 4, n / 2, n};

    std::ostringstream os;
    os << "# model=" << c.rm.model.name << "\n# master_seed=" << c.ms << "\n# b_seed=" << c.bs
       << "\nmodel,control,test,time,ratio,oracle\n" << std::setprecision(17);
    Scalar lo = std::numeric_limits<Scalar>::infinity(), hi = 0.0;
    for (Index k = 0; k < c.rm.controls.size(); ++k) {
        const EquivalenceReport r = check_norm_equivalence(c.rm.model, c.env, ControlPolicy::constant(c.rm.controls, k),
                                                           rho, battery, nodes, 0, offsets, c.cfg.tol.norm_lower,
                                                           c.cfg.tol.norm_upper);
        lo = std::min(lo, r.lower);
        hi = std::max(hi, r.upper);
        for (Index b = 0; b < r.ratios.rows(); ++b)
            for (Index q = 0; q < r.ratios.cols(); ++q)
                os << c.rm.model.name << ',' << k << ',' << b << ',' << r.times[std::size_t(q)] << ',' << r.ratios(b, q)
                   << ",\n";
    }
    c.add("C9", "smallest norm-equivalence ratio", lo, c.cfg.tol.norm_lower, ">=", lo >= c.cfg.tol.norm_lower);
    c.add("C9", "largest norm-equivalence ratio", hi, c.cfg.tol.norm_upper, "<=", hi <= c.cfg.tol.norm_upper);

    // b = 0, sigma = 1 against Gauss-Hermite quadrature of E|phi(x + W_s)|
    RegistryModel bm = make_registry_model("martingale");
    const ControlPolicy pol = ControlPolicy::constant(bm.controls, 0);
    const EquivalenceReport r = check_norm_equivalence(bm.model, c.env, pol, rho, battery, nodes, 0, offsets,
                                                       c.cfg.tol.norm_lower, c.cfg.tol.norm_upper);
    const auto gh = gauss_hermite(20);
    const Vector qw = nodes.quadrature_weights();
    Scalar worst = 0.0;
    for (std::size_t b = 0; b < widths.size(); ++b) {
        Scalar denom = 0.0;
        for (Index j = 0; j < nodes.size(); ++j) denom += qw[j] * rho.rho(nodes.node(j)) * gaussian_bump(nodes.node(j)[0], widths[b]);
        for (std::size_t q = 0; q < offsets.size(); ++q) {
            const Scalar s = r.times[q] - c.tg.t0();
            Scalar num = 0.0;
            for (Index j = 0; j < nodes.size(); ++j) {
                const Scalar x = nodes.node(j)[0];
                Scalar e = 0.0;
                for (Index g = 0; g < gh.nodes.size(); ++g) e += gh.weights[g] * gaussian_bump(x + std::sqrt(s) * gh.nodes[g], widths[b]);
                num += qw[j] * rho.rho(nodes.node(j)) * e;
            }
            const Scalar oracle = num / denom;
            worst = std::max(worst, std::abs(r.ratios(Index(b), Index(q)) - oracle) / oracle);
            os << "martingale,0," << b << ',' << r.times[q] << ',' << r.ratios(Index(b), Index(q)) << ',' << oracle << '\n';
        }
    }
    c.write("norm_equivalence.csv", os.str());
    c.add("C9", "b=0 sigma=1 ratios vs Gauss-Hermite oracle (relative)", worst, 0.1, "<=", worst <= 0.1);
}

void suite_weak(Context& c) {
    const ValueField& f = c.field();
    const std::vector<TestFunction> battery = default_battery(1, c.tg.t0(), c.tg.horizon());
    WeakOptions wo;
    wo.epsilon = c.cfg.tol.epsilon;
    // one refinement doubling calibrates tol_weak
    const BrownianEnvironment fenv = build_environment(c.tg.refined(), 1, c.rm.model.dims.forward,
                                                       c.rm.model.dims.backward, c.ms, c.bs);
    const ValueField fine = solve_value_function(c.rm.model, fenv, c.space().refined(), c.rm.controls);
    const WeakFormReport coarse_rep = check_weak_inequalities(f, c.rm.model, c.env, battery, wo);
    const WeakFormReport fine_rep = check_weak_inequalities(fine, c.rm.model, fenv, battery, wo);
    const WeakTolerance tol = calibrate_weak_tolerance(coarse_rep, fine_rep, c.tg.step(), f.space.max_spacing());
    wo.tolerance = tol.tolerance;
    const WeakFormReport rep = check_weak_inequalities(f, c.rm.model, c.env, battery, wo);
    c.write("weak.csv", weak_report_csv(rep, c.rm.model.name, c.ms, c.bs));
    c.add("C10", "min supersolution margin", rep.min_supersolution_margin, -tol.tolerance, ">=", rep.pass_supersolution);
    c.add("C10", "min over tests of best attainment margin", rep.min_attainment_margin, -tol.tolerance, ">=", rep.pass_attainment);
    c.add("C10", "min supersolution margin, variant bilinear form", rep.min_supersolution_variant, -tol.tolerance, "info", true);
    c.add("C10", "min attainment margin, variant bilinear form", rep.min_attainment_variant, -tol.tolerance, "info", true);
    c.add("C10", "tol_weak reference constant C_ref", tol.c_ref, tol.tolerance, "info", true);
    if (c.cfg.model == "transport-control") {
        Index one = -1;
        for (Index k = 0; k < c.rm.controls.size(); ++k)
            if (c.rm.controls[k].size() == 1 && c.rm.controls[k][0] == 1.0) one = k;
        Scalar worst = std::numeric_limits<Scalar>::infinity();
        if (one >= 0) {
            worst = 0.0;
            for (const auto& e : rep.supersolution)
                if (e.control == one) worst = std::max(worst, std::abs(e.margin));
        }
        c.add("C10", "transport v=1 max |supersolution margin|", worst, 1e-8, "<=", worst <= 1e-8);
    }
    const AdjointReport adj = check_adjoint_identity(f, c.rm.model, c.env, battery, tol.tolerance);
    c.add("C10", "adjoint integration-by-parts residual", adj.ibp_residual, tol.tolerance, "<=",
          adj.ibp_residual <= tol.tolerance);
    c.add("C10", "weak vs strong assembly route difference", adj.route_difference, tol.tolerance, "<=",
          adj.route_difference <= tol.tolerance);
    const NormReport norms = weighted_norms(f, c.rm.model, gaussian_weight(1));
    c.add("C10", "weighted H-norm of the value field", norms.h_norm, std::numeric_limits<Scalar>::infinity(), "finite",
          std::isfinite(norms.h_norm));
}

void suite_reproducibility(Context& c) {
    const unsigned before = parallel::workers();
    const ControlPolicy pol = c.policy();
    auto artifacts = [&]() {
        const ValueField f = solve_value_function(c.rm.model, c.env, c.space(), c.rm.controls);
        const PathEnsemble ens = simulate_forward(c.rm.model, c.env, 0, c.x0, pol);
        const BdsdeSolution sol = solve_bdsde(c.rm.model, c.env, ens, pol, RegressionBasis::polynomial(2));
        return value_field_csv(f, c.rm.model.name) + solution_csv(sol, c.rm.model.name);
    };
    parallel::set_workers(1);
    const std::string one = artifacts();
    parallel::set_workers(3);
    const std::string three = artifacts();
    parallel::set_workers(before);
    const std::string main = value_field_csv(c.field(), c.rm.model.name);
    const bool same = one == three && one.compare(0, main.size(), main) == 0;
    c.add("C12", "artifacts identical for 1 and 3 workers and the main run (1 = yes)", same ? 1.0 : 0.0, 1.0, "==", same);
}

std::string checks_csv(const std::vector<CheckResult>& checks) {
    std::ostringstream os;
    os << "criterion,check,value,tolerance,relation,pass,master_seed,b_seed\n";
    for (const auto& k : checks)
        os << k.criterion << ",\"" << k.name << "\"," << format_scalar(k.value) << ',' << format_scalar(k.tolerance) << ','
           << k.relation << ',' << (k.pass ? "pass" : "FAIL") << ',' << k.master_seed << ',' << k.b_seed << '\n';
    return os.str();
}

json number(Scalar v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

} // namespace

std::vector<std::string> pipeline_names() {
    return {"simulate", "solve-bdsde", "solve-penalized", "value", "verify-dpp", "verify-weak", "verify-all"};
}

json default_config_json() {
    const Tolerances t;
    const ExperimentConfig c;
    json levels = json::array();
    for (Scalar l : default_penalty_ladder()) levels.push_back(l);
    return json{
        {"pipeline", c.pipeline},
        {"model", {{"name", c.model}, {"parameters", json::object()}}},
        {"time", {{"t0", c.t0}, {"horizon", c.horizon}, {"steps", c.steps}}},
        {"space", {{"lower", c.lower}, {"upper", c.upper}, {"points", c.points}, {"mc_points", c.mc_points}}},
        {"paths", c.paths},
        {"seeds", {{"master", nullptr}, {"b", nullptr}}},
        {"start", c.start},
        {"control", c.control},
        {"controls", json::array()},
        {"penalty", {{"levels", levels}}},
        {"value", {{"replicas", c.replicas}}},
        {"continuity", {{"fields", c.continuity_fields}, {"probe", c.continuity_probe}}},
        {"comparison", {{"instances", c.comparison_instances}}},
        {"tolerances",
         {{"epsilon", t.epsilon}, {"slope", t.slope}, {"continuity", t.continuity}, {"variation", t.variation},
          {"z", t.z}, {"norm_lower", t.norm_lower}, {"norm_upper", t.norm_upper},
          {"lipschitz_slack", t.lipschitz_slack}, {"agreement", t.agreement}}},
        {"output", c.output},
        {"workers", c.workers},
    };
}

ExperimentConfig config_from_json(const json& input) {
    const json schema = default_config_json();
    check_keys(input, schema, "");
    json doc = schema;
    merge(doc, input);

    ExperimentConfig c;
    c.pipeline = get<std::string>(doc, nullptr, "pipeline");
    const auto names = pipeline_names();
    if (std::find(names.begin(), names.end(), c.pipeline) == names.end())
        throw Error("unknown pipeline '" + c.pipeline + "'; valid pipelines: " + join(names));
    c.model = get<std::string>(doc, "model", "name");
    for (const auto& [key, value] : doc["model"]["parameters"].items()) {
        if (!value.is_number()) throw Error("config: model parameter '" + key + "' must be a number");
        c.parameters[key] = value.get<Scalar>();
    }
    c.t0 = get<Scalar>(doc, "time", "t0");
    c.horizon = get<Scalar>(doc, "time", "horizon");
    c.steps = get<Index>(doc, "time", "steps");
    c.lower = get<Scalar>(doc, "space", "lower");
    c.upper = get<Scalar>(doc, "space", "upper");
    c.points = get<Index>(doc, "space", "points");
    c.mc_points = get<Index>(doc, "space", "mc_points");
    c.paths = get<Index>(doc, nullptr, "paths");
    for (const char* key : {"master", "b"}) {
        const json& s = doc["seeds"][key];
        if (s.is_null()) throw Error(std::string("config: seeds.") + key + " is required (seeds are never implicit)");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
            throw Error(std::string("config: seeds.") + key + " must be a non-negative integer");
        (std::string(key) == "master" ? c.master_seed : c.b_seed) = s.get<Seed>();
    }
    c.start = get<Scalar>(doc, nullptr, "start");
    c.control = get<Index>(doc, nullptr, "control");
    c.controls = get<std::vector<Scalar>>(doc, nullptr, "controls");
    c.penalty_levels = get<std::vector<Scalar>>(doc, "penalty", "levels");
    c.replicas = get<Index>(doc, "value", "replicas");
    c.continuity_fields = get<Index>(doc, "continuity", "fields");
    c.continuity_probe = get<Scalar>(doc, "continuity", "probe");
    c.comparison_instances = get<Index>(doc, "comparison", "instances");
    Tolerances& t = c.tol;
    t.epsilon = get<Scalar>(doc, "tolerances", "epsilon");
    t.slope = get<Scalar>(doc, "tolerances", "slope");
    t.continuity = get<Scalar>(doc, "tolerances", "continuity");
    t.variation = get<Scalar>(doc, "tolerances", "variation");
    t.z = get<Scalar>(doc, "tolerances", "z");
    t.norm_lower = get<Scalar>(doc, "tolerances", "norm_lower");
    t.norm_upper = get<Scalar>(doc, "tolerances", "norm_upper");
    t.lipschitz_slack = get<Scalar>(doc, "tolerances", "lipschitz_slack");
    t.agreement = get<Scalar>(doc, "tolerances", "agreement");
    c.output = get<std::string>(doc, nullptr, "output");
    c.workers = get<unsigned>(doc, nullptr, "workers");

    require(c.paths >= 1, "config: paths must be positive");
    require(c.steps >= 1, "config: time.steps must be positive");
    require(c.points >= 2 && c.mc_points >= 2, "config: space grids need at least two points");
    require(c.penalty_levels.size() >= 3, "config: penalty.levels needs at least three levels");
    require(c.replicas >= 2, "config: value.replicas must be at least 2");
    require(c.continuity_fields >= 2, "config: continuity.fields must be at least 2");
    // unknown models fail here, naming the valid keys
    make_registry_model(c.model, c.parameters);
    return c;
}

json load_config_json(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_text(path), nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw Error("config '" + path + "': " + e.what());
    }
    check_keys(doc, default_config_json(), "");
    return doc;
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    const json schema = default_config_json();
    const json* level = &schema;
    json* target = &doc;
    std::string path;
    std::size_t begin = 0;
    while (true) {
        const auto dot = key.find('.', begin);
        const std::string part = key.substr(begin, dot == std::string::npos ? std::string::npos : dot - begin);
        path += (path.empty() ? "" : ".") + part;
        const bool free_form = path.rfind("model.parameters.", 0) == 0;
        if (!free_form && (!level->is_object() || !level->contains(part))) {
            std::vector<std::string> keys;
            if (level->is_object())
                for (const auto& kv : level->items()) keys.push_back(kv.key());
            throw Error("override: unknown key '" + path + "'; valid keys: " + join(keys));
        }
        if (!target->is_object()) *target = json::object();
        if (dot == std::string::npos) {
            (*target)[part] = value;
            return;
        }
        if (!free_form) level = &(*level)[part];
        target = &(*target)[part];
        begin = dot + 1;
    }
}

RunResult run(const ExperimentConfig& cfg) {
    require(cfg.master_seed && cfg.b_seed, "run: seeds are required");
    parallel::set_workers(cfg.workers);
    std::error_code ec;
    std::filesystem::create_directories(cfg.output, ec);
    if (ec || !std::filesystem::is_directory(cfg.output))
        throw Error("cannot create output directory '" + cfg.output + "'");

    Context c(cfg, build_model(cfg.model, cfg));
    const std::string& p = cfg.pipeline;
    if (p == "simulate") {
        suite_forward(c, true);
    } else if (p == "solve-bdsde") {
        suite_solve(c);
    } else if (p == "solve-penalized") {
        suite_penalization(c);
    } else if (p == "value") {
        suite_value(c);
    } else if (p == "verify-dpp") {
        c.write("value.csv", value_field_csv(c.field(), c.rm.model.name));
        suite_dpp(c);
        suite_continuity(c);
    } else if (p == "verify-weak") {
        c.write("value.csv", value_field_csv(c.field(), c.rm.model.name));
        suite_weak(c);
        suite_norm_equivalence(c);
    } else if (p == "verify-all") {
        suite_validation(c);
        martingale_oracle(c);
        linear_oracle(c);
        suite_comparison(c);
        suite_stability(c);
        suite_forward(c, false);
        suite_value(c);
        suite_dpp(c);
        suite_penalization(c);
        suite_norm_equivalence(c);
        suite_weak(c);
        suite_continuity(c);
        suite_reproducibility(c);
    } else {
        throw Error("unknown pipeline '" + p + "'; valid pipelines: " + join(pipeline_names()));
    }

    RunResult result;
    result.checks = c.checks;
    result.pass = std::all_of(c.checks.begin(), c.checks.end(), [](const CheckResult& k) { return k.pass; });
    c.write("checks.csv", checks_csv(c.checks));

    json summary;
    summary["pipeline"] = p;
    summary["model"] = {{"name", cfg.model}, {"parameters", c.rm.parameters}};
    summary["seeds"] = {{"master", c.ms}, {"b", c.bs}};
    summary["time"] = {{"t0", cfg.t0}, {"horizon", cfg.horizon}, {"steps", cfg.steps}};
    summary["space"] = {{"lower", cfg.lower}, {"upper", cfg.upper}, {"points", cfg.points}, {"mc_points", cfg.mc_points}};
    summary["paths"] = cfg.paths;
    summary["pass"] = result.pass;
    json rows = json::array();
    for (const auto& k : c.checks)
        rows.push_back({{"criterion", k.criterion}, {"check", k.name}, {"value", number(k.value)},
                        {"tolerance", number(k.tolerance)}, {"relation", k.relation}, {"pass", k.pass},
                        {"master_seed", k.master_seed}, {"b_seed", k.b_seed}});
    summary["checks"] = rows;
    summary["artifacts"] = c.artifacts;
    c.write("summary.json", summary.dump(2) + "\n");
    result.artifacts = c.artifacts;
    return result;
}

std::string report(const std::string& directory) {
    const std::filesystem::path dir(directory);
    const std::filesystem::path file = dir / "summary.json";
    if (!std::filesystem::exists(file))
        throw Error("no run found in '" + directory + "'; expected files: summary.json, checks.csv and the pipeline CSVs");
    json s;
    try {
        s = json::parse(read_text(file.string()));
    } catch (const json::parse_error& e) {
        throw Error("corrupt summary.json in '" + directory + "': " + e.what());
    }
    if (!s.contains("checks") || !s["checks"].is_array()) throw Error("corrupt summary.json in '" + directory + "': no checks");
    for (const auto& a : s.value("artifacts", json::array()))
        if (!std::filesystem::exists(dir / a.get<std::string>()))
            throw Error("artifact '" + a.get<std::string>() + "' listed in summary.json is missing");

    auto cell = [](const json& v) {
        if (v.is_number()) return format_scalar(v.get<Scalar>());
        return v.is_string() ? v.get<std::string>() : v.dump();
    };
    std::size_t width = 5;
    for (const auto& k : s["checks"]) width = std::max(width, k["check"].get<std::string>().size());
    const int name_w = int(width) + 2;
    std::ostringstream os;
    os << "pipeline " << s.value("pipeline", "?") << ", model " << s["model"].value("name", "?") << ", seeds "
       << s["seeds"]["master"] << "/" << s["seeds"]["b"] << "\n";
    os << std::left << std::setw(6) << "crit" << std::setw(name_w) << "check" << std::setw(24) << "value" << std::setw(12)
       << "relation" << std::setw(24) << "tolerance" << std::setw(6) << "pass" << "seed\n";
    for (const auto& k : s["checks"]) {
        os << std::left << std::setw(6) << k["criterion"].get<std::string>() << std::setw(name_w)
           << k["check"].get<std::string>() << std::setw(24) << cell(k["value"]) << std::setw(12)
           << k["relation"].get<std::string>() << std::setw(24) << cell(k["tolerance"]) << std::setw(6)
           << (k["pass"].get<bool>() ? "pass" : "FAIL") << k["master_seed"] << "/" << k["b_seed"] << "\n";
    }
    os << (s.value("pass", false) ? "ALL PASS" : "SOME CHECKS FAILED") << "\n";
    return os.str();
}

} // namespace bdsoc
