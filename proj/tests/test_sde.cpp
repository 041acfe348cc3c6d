#include "support.hpp"

#include "bdsoc/environment.hpp"
#include "bdsoc/parallel.hpp"
#include "bdsoc/sde.hpp"

#include <doctest.h>

using namespace bdsoc;
using testing::vec1;

namespace {

const ControlSet single = ControlSet::scalars({0.0});

// Discrete running maximum of a Gaussian random walk with step variance dt,
// simulated independently of the library's noise.
Scalar walk_sup_moment(Index window, Scalar dt, Scalar p, Index paths, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<Scalar> n(0.0, std::sqrt(dt));
    Scalar acc = 0.0;
    for (Index q = 0; q < paths; ++q) {
        Scalar s = 0.0, best = 0.0;
        for (Index k = 0; k < window; ++k) {
            s += n(rng);
            best = std::max(best, std::pow(std::abs(s), p));
        }
        acc += best;
    }
    return acc / Scalar(paths);
}

} // namespace

TEST_SUITE("sde") {

TEST_CASE("zero coefficients keep the state constant") {
    const auto m = testing::scalar_model();
    const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 100, 1, 1, 1, 2);
    const auto ens = simulate_forward(m, env, 0, vec1(1.5), ControlPolicy::constant(single, 0));
    CHECK((ens.values.array() == 1.5).all());
    CHECK(ens.steps() == 50);
}

TEST_CASE("constant drift integrates exactly") {
    auto m = testing::scalar_model();
    m.drift = [](Scalar, const Vector&, const Vector&) { return Vector::Constant(1, 0.7); };
    const auto env = build_environment(TimeGrid(0.0, 2.0, 40), 10, 1, 1, 1, 2);
    const auto ens = simulate_forward(m, env, 0, vec1(0.0), ControlPolicy::constant(single, 0));
    for (Index p = 0; p < 10; ++p) CHECK(ens.state(p, 40)[0] == doctest::Approx(1.4).epsilon(1e-12));
}

TEST_CASE("Brownian terminal variance is T - t0") {
    const auto m = testing::brownian_model(1.0, [](const Vector&) { return 0.0; });
    const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 100000, 1, 1, 3, 4);
    const auto ens = simulate_forward(m, env, 0, vec1(0.0), ControlPolicy::constant(single, 0));
    const auto e = testing::estimate_variance(ens.component(50));
    CHECK(std::abs(e.variance - 1.0) <= 5.0 * e.se_variance);
    CHECK(std::abs(e.mean) <= 5.0 * e.se_mean);
}

TEST_CASE("moment ratios vanish without noise and drift") {
    const auto m = testing::scalar_model();
    const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 50, 1, 1, 1, 2);
    const auto ens = simulate_forward(m, env, 0, vec1(1.5), ControlPolicy::constant(single, 0));
    const auto rep = check_moment_bounds(ens, 2.0);
    for (Scalar r : rep.delta_ratios) CHECK(r == 0.0);
    CHECK(rep.sup_ratio == doctest::Approx(2.25 / 3.25));
    CHECK(rep.pass);
    CHECK_THROWS_AS(check_moment_bounds(ens, 3.0), Error);
}

TEST_CASE("Brownian small-time moments match a random-walk oracle") {
    const auto m = testing::brownian_model(1.0, [](const Vector&) { return 0.0; });
    const TimeGrid g(0.0, 1.0, 50);
    const auto env = build_environment(g, 20000, 1, 1, 8, 9);
    const auto ens = simulate_forward(m, env, 0, vec1(0.0), ControlPolicy::constant(single, 0));
    for (Scalar p : {2.0, 4.0}) {
        const auto rep = check_moment_bounds(ens, p);
        CHECK(rep.pass);
        CHECK(rep.variation <= 2.0);
        for (std::size_t k = 0; k < rep.deltas.size(); ++k) {
            const Index window = std::lround(rep.deltas[k] / g.step());
            const Scalar oracle = walk_sup_moment(window, g.step(), p, 100000, 77) / std::pow(rep.deltas[k], p / 2);
            CAPTURE(p);
            CAPTURE(window);
            CHECK(rep.delta_ratios[k] == doctest::Approx(oracle).epsilon(0.06));
        }
    }
}

TEST_CASE("flow stability exponent is 2") {
    auto m = testing::scalar_model();
    m.drift = [](Scalar, const Vector& x, const Vector&) { return Vector::Constant(1, std::sin(x[0])); };
    m.diffusion = [](Scalar, const Vector& x, const Vector&) { return Matrix::Constant(1, 1, 0.3 + 0.1 * std::cos(x[0])); };
    const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 2000, 1, 1, 4, 5);
    const auto rep = check_flow_stability(m, env, 0, vec1(0.2), vec1(1.0), {0.1, 0.05, 0.025},
                                          ControlPolicy::constant(single, 0));
    CHECK(rep.fit.slope == doctest::Approx(2.0).epsilon(0.2));
    CHECK(rep.pass);
}

TEST_CASE("control stability ratio is constant for a controlled drift") {
    auto m = testing::scalar_model();
    m.drift = [](Scalar, const Vector&, const Vector& v) { return v; };
    m.diffusion = [](Scalar, const Vector&, const Vector&) { return Matrix::Constant(1, 1, 0.3); };
    const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 500, 1, 1, 4, 5);
    const ControlSet u = ControlSet::scalars({0.0, 0.1, 0.2, 0.4});
    const auto rep = check_control_stability(m, env, 0, vec1(0.0), u, 0, {1, 2, 3});
    // sup_s |(v - v') (s - t)|^2 = (T - t)^2 |v - v'|^2, ratio T - t = 1
    for (Scalar r : rep.ratio) CHECK(r == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.pass);
}

TEST_CASE("blow-up is reported with the path") {
    auto m = testing::scalar_model();
    m.drift = [](Scalar, const Vector& x, const Vector&) { return (50.0 * x).eval(); };
    const auto env = build_environment(TimeGrid(0.0, 1.0, 50), 3, 1, 1, 1, 2);
    try {
        simulate_forward(m, env, 0, vec1(1.0), ControlPolicy::constant(single, 0));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("path") != std::string::npos);
    }
}

TEST_CASE("policies") {
    const ControlSet u = ControlSet::scalars({-1.0, 1.0});
    CHECK_THROWS_AS(ControlPolicy::constant(u, 2), Error);
    CHECK_THROWS_AS(ControlPolicy::open_loop(u, {0, 5}), Error);
    const SpaceGrid g = SpaceGrid::line(-1.0, 1.0, 3);
    IndexMatrix table(2, 3);
    table << 0, 1, 1, 1, 0, 0;
    const auto pol = ControlPolicy::feedback(u, g, table);
    CHECK(pol.control_index(0, vec1(-0.9)) == 0);
    CHECK(pol.control_index(0, vec1(0.1)) == 1);
    CHECK(pol.control_index(1, vec1(0.1)) == 0);
    CHECK_THROWS_AS(pol.check_covers(3), Error);
    table(0, 0) = 4;
    CHECK_THROWS_AS(ControlPolicy::feedback(u, g, table), Error);

    // a feedback driving toward the origin
    auto m = testing::scalar_model();
    m.drift = [](Scalar, const Vector&, const Vector& v) { return v; };
    const auto env = build_environment(TimeGrid(0.0, 1.0, 2), 1, 1, 1, 1, 2);
    IndexMatrix toward(2, 3);
    toward << 1, 0, 0, 1, 0, 0;
    const auto ens = simulate_forward(m, env, 0, vec1(-0.8), ControlPolicy::feedback(u, g, toward));
    CHECK(ens.state(0, 1)[0] == doctest::Approx(-0.3));
    CHECK(ens.state(0, 2)[0] == doctest::Approx(-0.8));
}

TEST_CASE("ensembles start at later steps and ignore the worker count") {
    const auto m = testing::brownian_model(0.5, [](const Vector&) { return 0.0; });
    const auto env = build_environment(TimeGrid(0.0, 1.0, 20), 300, 1, 1, 1, 2);
    const auto pol = ControlPolicy::constant(single, 0);
    const unsigned saved = parallel::workers();
    parallel::set_workers(1);
    const auto a = simulate_forward(m, env, 5, vec1(0.3), pol);
    parallel::set_workers(3);
    const auto b = simulate_forward(m, env, 5, vec1(0.3), pol);
    parallel::set_workers(saved);
    CHECK(a.steps() == 15);
    CHECK(a.values == b.values);
    CHECK(a.state(7, 1)[0] == doctest::Approx(0.3 + 0.5 * env.dw(7, 5)[0]));
}

}
