#include "support.hpp"

#include "bdsoc/bdsde.hpp"
#include "bdsoc/environment.hpp"
#include "bdsoc/registry.hpp"
#include "bdsoc/sde.hpp"
#include "bdsoc/value.hpp"

#include <doctest.h>

using namespace bdsoc;
using testing::vec1;

namespace {

const SpaceGrid box = SpaceGrid::line(-3.0, 3.0, 601);
const ControlSet three = ControlSet::scalars({-1.0, 0.0, 1.0});

CoefficientSet quadratic_penalty() {
    auto m = testing::scalar_model("quadratic-penalty");
    m.driver = [](Scalar, const Vector&, Scalar, const Vector&, const Vector& v) { return -v.squaredNorm(); };
    return m;
}

CoefficientSet transport(Scalar scale) {
    auto m = testing::scalar_model("transport");
    m.driver = [scale](Scalar, const Vector&, Scalar, const Vector&, const Vector& v) { return scale * v[0]; };
    return m;
}

} // namespace

TEST_SUITE("value") {

TEST_CASE("quadratic penalty with zero data has value 0 and argmax v = 0") {
    const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 1, 1, 1, 1, 2);
    const auto f = solve_value_function(quadratic_penalty(), env, box, three);
    CHECK(f.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK((f.argmax.array() == 1).all());
    const auto mc_env = build_environment(TimeGrid(0.0, 1.0, 10), 500, 1, 1, 1, 2);
    ValueOptions mc;
    mc.backend = ValueBackend::regression_mc;
    mc.replicas = 2;
    const auto g = solve_value_function(quadratic_penalty(), mc_env, SpaceGrid::line(-3, 3, 31), three, mc);
    CHECK(g.values.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("transport value is T - t with argmax v = 1") {
    const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 1, 1, 1, 1, 2);
    const auto f = solve_value_function(transport(1.0), env, box, three);
    for (Index i = 0; i <= 50; ++i) {
        CHECK((f.values.row(i).array() - (1.0 - env.grid().time(i))).abs().maxCoeff() < 1e-12);
        CHECK((f.argmax.row(i).array() == 2).all());
    }
    CHECK(f.time_index(0.5) == 25);
    CHECK_THROWS_AS(f.time_index(0.511), Error);
}

TEST_CASE("argmax is invariant under positive scaling") {
    const auto env = build_environment(TimeGrid(0.0, 1.0, 20), 1, 1, 1, 1, 2);
    const auto r = make_registry_model("controlled-drift-lq", {{"gamma", 0.0}});
    auto scaled = r.model;
    scaled.driver = [f = r.model.driver](Scalar t, const Vector& x, Scalar y, const Vector& z, const Vector& v) {
        return 3.0 * f(t, x, y / 3.0, z / 3.0, v);
    };
    scaled.terminal = [h = r.model.terminal](const Vector& x) { return 3.0 * h(x); };
    const SpaceGrid g = SpaceGrid::line(-3, 3, 121);
    const auto a = solve_value_function(r.model, env, g, r.controls);
    const auto b = solve_value_function(scaled, env, g, r.controls);
    CHECK(a.argmax == b.argmax);
    CHECK((b.values - 3.0 * a.values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("value is monotone in the terminal data") {
    const auto env = build_environment(TimeGrid(0.0, 1.0, 20), 1, 1, 1, 1, 2);
    const auto r = make_registry_model("controlled-drift-lq");
    auto higher = r.model;
    higher.terminal = [h = r.model.terminal](const Vector& x) { return h(x) + 0.1 * (1.0 + std::sin(x[0])); };
    const SpaceGrid g = SpaceGrid::line(-3, 3, 121);
    const auto a = solve_value_function(r.model, env, g, r.controls);
    const auto b = solve_value_function(higher, env, g, r.controls);
    CHECK((b.values - a.values).minCoeff() >= -1e-12);
}

TEST_CASE("field invariants") {
    const auto r = make_registry_model("degenerate-sigma");
    const auto env = build_environment(TimeGrid(0.0, 1.0, 20), 1, 1, 1, 1, 2);
    const SpaceGrid g = SpaceGrid::line(-3, 3, 121);
    const auto f = solve_value_function(r.model, env, g, r.controls);
    for (Index j = 0; j < g.size(); ++j) CHECK(f.values(20, j) == r.model.terminal(g.node(j)));
    CHECK(f.values.allFinite());
    CHECK(f.argmax.minCoeff() >= 0);
    CHECK(f.argmax.maxCoeff() < r.controls.size());
    CHECK(f.argmax.row(20) == f.argmax.row(19));
    CHECK_THROWS_AS(parse_backend("dp"), Error);
    CHECK(parse_backend(to_string(ValueBackend::regression_mc)) == ValueBackend::regression_mc);
}

TEST_CASE("grid-DP refuses more than two state dimensions") {
    auto m = testing::scalar_model();
    m.dims = Dimensions{3, 1, 1, 1};
    m.drift = [](Scalar, const Vector&, const Vector&) { return Vector::Zero(3).eval(); };
    m.diffusion = [](Scalar, const Vector&, const Vector&) { return Matrix::Zero(3, 1).eval(); };
    const SpaceGrid g3(Vector::Constant(3, -1.0), Vector::Constant(3, 1.0), {3, 3, 3});
    const auto env = build_environment(TimeGrid(0.0, 1.0, 2), 1, 1, 1, 1, 2);
    CHECK_THROWS_AS(solve_value_function(m, env, g3, ControlSet::scalars({0.0})), Error);
}

TEST_CASE("one-step semigroup matches the heat kernel") {
    const auto m = testing::brownian_model(1.0, [](const Vector& x) { return std::sin(x[0]); });
    const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 10000, 1, 1, 3, 4);
    const ControlSet u = ControlSet::scalars({0.0});
    const Scalar dt = env.grid().step();
    for (Scalar x : {-1.0, 0.3, 1.2}) {
        const auto zero = backward_semigroup(m, env, 10, vec1(x), 0, m.terminal, u, 0);
        CHECK(zero.value == std::sin(x));
        const auto one = backward_semigroup(m, env, 10, vec1(x), 1, m.terminal, u, 0);
        // E sin(x + sqrt(dt) xi) = sin(x) exp(-dt / 2)
        CHECK(std::abs(one.value - std::sin(x) * std::exp(-dt / 2)) <= 3.0 * one.standard_error + 1e-4);
    }
}

TEST_CASE("semigroup composition") {
    const auto m = testing::brownian_model(1.0, [](const Vector& x) { return std::sin(x[0]); });
    const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 4000, 1, 1, 3, 4);
    const ControlSet u = ControlSet::scalars({0.0});
    const SpaceGrid g = SpaceGrid::line(-2.0, 2.0, 81);
    Vector inner(g.size());
    Scalar inner_se = 0.0;
    for (Index j = 0; j < g.size(); ++j) {
        const auto s = backward_semigroup(m, env, 11, g.node(j), 1, m.terminal, u, 0);
        inner[j] = s.value;
        inner_se = std::max(inner_se, s.standard_error);
    }
    const TerminalFn next = [&](const Vector& y) { return g.interpolate(inner, y); };
    const Scalar x = 0.4;
    const auto two = backward_semigroup(m, env, 10, vec1(x), 2, m.terminal, u, 0);
    const auto composed = backward_semigroup(m, env, 10, vec1(x), 1, next, u, 0);
    const Scalar one_step_tol = 3.0 * (two.standard_error + inner_se) + g.max_spacing() * g.max_spacing();
    CHECK(std::abs(two.value - composed.value) <= 2.0 * one_step_tol);
}

TEST_CASE("deterministic DPP holds to roundoff") {
    const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 50, 1, 1, 1, 2);
    const auto f = solve_value_function(transport(1.0), env, box, three);
    std::vector<Probe> probes;
    for (Scalar x : {-1.0, 0.0, 1.0}) probes.push_back({10, vec1(x)});
    const auto rep = check_dpp(f, transport(1.0), env, {1, 5, 10, 40}, probes);
    CHECK(rep.pass);
    for (const auto& e : rep.entries) CHECK(e.residual <= 1e-10);
}

TEST_CASE("DPP on the controlled drift model") {
    const auto r = make_registry_model("controlled-drift-lq");
    const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 4000, 1, 1, 7, 11);
    const auto f = solve_value_function(r.model, env, box, r.controls);
    std::vector<Probe> probes;
    for (Scalar x : {-1.0, 0.0, 1.0}) probes.push_back({10, vec1(x)});
    const auto rep = check_dpp(f, r.model, env, {1, 5, 10}, probes);
    CHECK(rep.pass);
    CHECK(rep.one_step_error < 0.02);
}

TEST_CASE("epsilon-optimal feedback") {
    {
        const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 20, 1, 1, 1, 2);
        const auto f = solve_value_function(transport(1.0), env, box, three);
        const auto rep = extract_epsilon_optimal(f, transport(1.0), env, 0, vec1(0.0), 1e-12);
        CHECK(std::abs(rep.gap) < 1e-12);
        CHECK(rep.certified);
        CHECK(rep.policy->control_index(7, vec1(0.5)) == 2);
    }
    {
        const auto m = testing::brownian_model(1.0, [](const Vector& x) { return x[0]; });
        const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 4000, 1, 1, 1, 2);
        const auto f = solve_value_function(m, env, box, ControlSet::scalars({0.0}));
        const auto rep = extract_epsilon_optimal(f, m, env, 0, vec1(0.0), 0.0);
        CHECK(std::abs(rep.gap) <= 3.0 * rep.standard_error + 1e-3);
    }
    {
        const auto r = make_registry_model("controlled-drift-lq");
        const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 4000, 1, 1, 7, 11);
        const auto f = solve_value_function(r.model, env, box, r.controls);
        const auto rep = extract_epsilon_optimal(f, r.model, env, 0, vec1(0.0), 0.05);
        CHECK(rep.certified);
        // sup dominance: u >= J(v) for every constant control, up to the scheme budget
        for (Index c = 0; c < r.controls.size(); ++c) {
            const auto pol = ControlPolicy::constant(r.controls, c);
            const auto sol = solve_bdsde(r.model, env, simulate_forward(r.model, env, 0, vec1(0.0), pol), pol,
                                         RegressionBasis::polynomial(2));
            CHECK(f.at(0, vec1(0.0)) >= sol.y0() - 3.0 * sol.y0_standard_error - env.grid().step());
        }
    }
}

TEST_CASE("backends agree on the controlled drift model") {
    const auto r = make_registry_model("controlled-drift-lq");
    const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 4000, 1, 1, 7, 11);
    const auto dp = solve_value_function(r.model, env, box, r.controls);
    ValueOptions mc;
    mc.backend = ValueBackend::regression_mc;
    const SpaceGrid coarse = SpaceGrid::line(-3, 3, 61);
    const auto f = solve_value_function(r.model, env, coarse, r.controls, mc);
    const Scalar budget = 3.0 * f.standard_error_at(0, vec1(0.0)) + env.grid().step() + coarse.max_spacing();
    CHECK(std::abs(dp.at(0, vec1(0.0)) - f.at(0, vec1(0.0))) <= budget);
    CHECK(f.standard_error.row(0).maxCoeff() > 0.0);
}

TEST_CASE("continuity ladders") {
    const auto r = make_registry_model("zero");
    const auto m = testing::brownian_model(1.0, [](const Vector& x) { return x[0]; });
    std::vector<ValueField> zero_fields, linear_fields;
    const SpaceGrid g = SpaceGrid::line(-3, 3, 121);
    for (Seed b = 1; b <= 4; ++b) {
        const auto env = build_environment(TimeGrid(0.0, 1.0, 20), 1, 1, 1, 1, b);
        zero_fields.push_back(solve_value_function(r.model, env, g, r.controls));
        linear_fields.push_back(solve_value_function(m, env, g, ControlSet::scalars({0.0})));
    }
    const auto z = check_continuity(zero_fields, 5, vec1(0.0), {0.2, 0.1, 0.05}, {4, 2, 1});
    CHECK(z.x_ladder.fit.degenerate);
    CHECK(z.strict_pass);
    const auto l = check_continuity(linear_fields, 5, vec1(0.0), {0.2, 0.1, 0.05}, {4, 2, 1});
    CHECK(l.x_ladder.fit.slope == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(l.t_ladder.fit.degenerate);
    CHECK(l.strict_pass);
}

}
