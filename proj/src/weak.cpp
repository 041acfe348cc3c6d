#include "bdsoc/weak.hpp"
#include "bdsoc/parallel.hpp"
#include "bdsoc/quadrature.hpp"
#include "bdsoc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bdsoc {

TestFunction::TestFunction(Vector center, Scalar radius, std::vector<Scalar> temporal)
    : center_(std::move(center)), radius_(radius), coefficients_(std::move(temporal)) {
    require(radius_ > 0.0, "TestFunction: radius must be positive");
    require(!coefficients_.empty(), "TestFunction: empty temporal polynomial");
}

Scalar TestFunction::spatial(const Vector& x) const {
    const Scalar s = (x - center_).squaredNorm() / (radius_ * radius_);
    return s < 1.0 ? std::exp(-1.0 / (1.0 - s)) : 0.0;
}

Vector TestFunction::gradient(const Vector& x) const {
    const Scalar s = (x - center_).squaredNorm() / (radius_ * radius_);
    if (s >= 1.0) return Vector::Zero(x.size());
    const Scalar phi = std::exp(-1.0 / (1.0 - s));
    return (-2.0 * phi / (radius_ * radius_ * (1.0 - s) * (1.0 - s))) * (x - center_);
}

Scalar TestFunction::temporal(Scalar t) const {
    Scalar acc = 0.0;
    for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) acc = acc * t + *it;
    return acc;
}

Scalar TestFunction::temporal_derivative(Scalar t) const {
    Scalar acc = 0.0;
    for (std::size_t k = coefficients_.size(); k-- > 1;) acc = acc * t + Scalar(k) * coefficients_[k];
    return acc;
}

bool TestFunction::supported_inside(const SpaceGrid& grid) const {
    if (center_.size() != grid.dim()) return false;
    for (Index a = 0; a < grid.dim(); ++a) {
        const Scalar h = grid.spacing(a);
        if (center_[a] - radius_ < grid.lower()[a] + h || center_[a] + radius_ > grid.upper()[a] - h) return false;
    }
    return true;
}

std::vector<TestFunction> default_battery(Index dim, Scalar t0, Scalar horizon, Scalar radius) {
    require(horizon > t0, "default_battery: empty time interval");
    std::vector<TestFunction> out;
    const Scalar span = horizon - t0;
    for (int k = -2; k <= 2; ++k) {
        Vector c = Vector::Zero(dim);
        c[0] = Scalar(k) * radius / 2.0;
        out.emplace_back(c, radius, std::vector<Scalar>{1.0});
        out.emplace_back(c, radius, std::vector<Scalar>{horizon / span, -1.0 / span});
    }
    return out;
}

Matrix grid_gradient(const SpaceGrid& grid, const Eigen::Ref<const Vector>& values) {
    require(values.size() == grid.size(), "grid_gradient: value count differs from the grid");
    Matrix g(grid.size(), grid.dim());
    for (Index j = 0; j < grid.size(); ++j) {
        for (Index a = 0; a < grid.dim(); ++a) {
            const Index up = grid.neighbour(j, a, +1);
            const Index down = grid.neighbour(j, a, -1);
            const Scalar h = grid.spacing(a);
            if (up >= 0 && down >= 0) g(j, a) = (values[up] - values[down]) / (2.0 * h);
            else if (up >= 0) g(j, a) = (values[up] - values[j]) / h;
            else g(j, a) = (values[j] - values[down]) / h;
        }
    }
    return g;
}

namespace {

// Hessian of nodal values by second differences; zero where a neighbour is
// missing (test functions vanish there).
Matrix grid_hessian_at(const SpaceGrid& grid, const Eigen::Ref<const Vector>& u, Index j) {
    const Index n = grid.dim();
    Matrix hess = Matrix::Zero(n, n);
    for (Index a = 0; a < n; ++a) {
        const Index up = grid.neighbour(j, a, +1), down = grid.neighbour(j, a, -1);
        if (up < 0 || down < 0) return Matrix::Zero(n, n);
        const Scalar h = grid.spacing(a);
        hess(a, a) = (u[up] - 2.0 * u[j] + u[down]) / (h * h);
        for (Index b = a + 1; b < n; ++b) {
            const Index pp = grid.neighbour(up, b, +1), pm = grid.neighbour(up, b, -1);
            const Index mp = grid.neighbour(down, b, +1), mm = grid.neighbour(down, b, -1);
            if (pp < 0 || pm < 0 || mp < 0 || mm < 0) return Matrix::Zero(n, n);
            hess(a, b) = hess(b, a) = (u[pp] - u[pm] - u[mp] + u[mm]) / (4.0 * h * grid.spacing(b));
        }
    }
    return hess;
}

constexpr Scalar coefficient_step = 1e-4;

Matrix diffusion_matrix(const CoefficientSet& m, Scalar t, const Vector& x, const Vector& v) {
    const Matrix s = m.diffusion(t, x, v);
    return s * s.transpose();
}

// A_i = 1/2 sum_k d_k a_{k,i}
Vector correction_drift(const CoefficientSet& m, Scalar t, const Vector& x, const Vector& v) {
    const Index n = x.size();
    Vector out = Vector::Zero(n);
    for (Index k = 0; k < n; ++k) {
        Vector xp = x, xm = x;
        xp[k] += coefficient_step;
        xm[k] -= coefficient_step;
        const Matrix da = (diffusion_matrix(m, t, xp, v) - diffusion_matrix(m, t, xm, v)) / (2.0 * coefficient_step);
        out += 0.5 * da.row(k).transpose();
    }
    return out;
}

Scalar divergence_of_drift_minus_correction(const CoefficientSet& m, Scalar t, const Vector& x, const Vector& v) {
    const Scalar e = 1e-3;
    Scalar acc = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        Vector xp = x, xm = x;
        xp[i] += e;
        xm[i] -= e;
        acc += ((m.drift(t, xp, v) - correction_drift(m, t, xp, v))[i] -
                (m.drift(t, xm, v) - correction_drift(m, t, xm, v))[i]) / (2.0 * e);
    }
    return acc;
}

// Per-node integrands of one time interval under one control assignment.
struct IntervalTerms {
    Vector f;        ///< f(t_i, x, u_{i+1}, sigma* grad u_{i+1}, v)
    Vector g;        ///< g(...) . dB_i
    Matrix flux;     ///< nodes x n: a grad u_{i+1}
    Vector drift;    ///< (b - A) . grad u_{i+1}
    Vector variant;   ///< u_{i+1} div(b - A)
    Vector strong;   ///< 1/2 tr(a D^2 u) + b . grad u
};

IntervalTerms interval_terms(const ValueField& field, const CoefficientSet& model, const Vector& db, Index i,
                             const std::function<const Vector&(Index)>& control_at) {
    const SpaceGrid& grid = field.space;
    const Index nodes = grid.size();
    const Index n = grid.dim();
    const Scalar t = field.time.time(i);
    const Vector u = field.row(i + 1);
    const Matrix grad = grid_gradient(grid, u);
    IntervalTerms out{Vector(nodes), Vector(nodes), Matrix(nodes, n), Vector(nodes), Vector(nodes), Vector(nodes)};
    parallel::parallel_for(static_cast<std::size_t>(nodes), [&](std::size_t jj) {
        const Index j = static_cast<Index>(jj);
        const Vector x = grid.node(j);
        const Vector& v = control_at(j);
        const Matrix sigma = model.diffusion(t, x, v);
        const Matrix a = sigma * sigma.transpose();
        const Vector gu = grad.row(j).transpose();
        const Vector z = sigma.transpose() * gu;
        const Vector b = model.drift(t, x, v);
        out.f[j] = model.driver(t, x, u[j], z, v);
        out.g[j] = model.backward_driver(t, x, u[j], z).dot(db);
        out.flux.row(j) = (a * gu).transpose();
        out.drift[j] = (b - correction_drift(model, t, x, v)).dot(gu);
        out.variant[j] = u[j] * divergence_of_drift_minus_correction(model, t, x, v);
        out.strong[j] = 0.5 * (a.cwiseProduct(grid_hessian_at(grid, u, j))).sum() + b.dot(gu);
    });
    return out;
}

struct TestNodal {
    Vector phi;  ///< w_j phi(x_j)
    Matrix grad; ///< w_j grad phi(x_j)
};

TestNodal nodal(const SpaceGrid& grid, const Vector& weights, const TestFunction& test) {
    TestNodal out{Vector(grid.size()), Matrix(grid.size(), grid.dim())};
    for (Index j = 0; j < grid.size(); ++j) {
        const Vector x = grid.node(j);
        out.phi[j] = weights[j] * test.spatial(x);
        out.grad.row(j) = weights[j] * test.gradient(x).transpose();
    }
    return out;
}

struct Assembly {
    Scalar rhs = 0.0, rhs_variant = 0.0, rhs_strong = 0.0;
};

} // namespace

NormReport weighted_norms(const ValueField& field, const CoefficientSet& model, const WeightFunction& rho) {
    require(field.values.allFinite(), "weighted_norms: field contains non-finite values");
    const SpaceGrid& grid = field.space;
    const Vector w = grid.quadrature_weights();
    Vector rw(grid.size());
    for (Index j = 0; j < grid.size(); ++j) rw[j] = w[j] * rho.rho(grid.node(j));
    const Index rows = field.values.rows();
    const Scalar dt = field.time.step();
    NormReport rep;
    for (Index i = 0; i < rows; ++i) {
        const Scalar tw = (i == 0 || i + 1 == rows) ? 0.5 * dt : dt;
        const Vector u = field.row(i);
        const Matrix grad = grid_gradient(grid, u);
        const Scalar t = field.time.time(i);
        Scalar l2 = 0.0, sg = 0.0, g = 0.0;
        for (Index j = 0; j < grid.size(); ++j) {
            const Vector x = grid.node(j);
            const Vector gu = grad.row(j).transpose();
            const Matrix sigma = model.diffusion(t, x, field.controls[field.argmax(i, j)]);
            l2 += rw[j] * u[j] * u[j];
            sg += rw[j] * (sigma.transpose() * gu).squaredNorm();
            g += rw[j] * gu.squaredNorm();
        }
        rep.l2 += tw * l2;
        rep.sigma_gradient += tw * sg;
        rep.gradient += tw * g;
    }
    rep.h_norm = std::sqrt(rep.l2 + rep.sigma_gradient);
    rep.d_norm = std::sqrt(rep.l2 + rep.gradient);
    return rep;
}

EquivalenceReport check_norm_equivalence(const CoefficientSet& model, const BrownianEnvironment& env,
                                         const ControlPolicy& policy, const WeightFunction& rho,
                                         const std::vector<SpatialFn>& battery, const SpaceGrid& x_nodes,
                                         Index start_index, const std::vector<Index>& time_offsets,
                                         Scalar lower_bound, Scalar upper_bound) {
    require(!battery.empty() && !time_offsets.empty(), "check_norm_equivalence: empty battery or time list");
    const TimeGrid& grid = env.grid();
    const Index steps = grid.steps() - start_index;
    require(steps >= 1, "check_norm_equivalence: no time left after the start");
    for (Index k : time_offsets) require(k >= 0 && k <= steps, "check_norm_equivalence: time offset outside the grid");
    const Index nb = static_cast<Index>(battery.size());
    const Vector w = x_nodes.quadrature_weights();

    Vector denom = Vector::Zero(nb);
    Matrix numer = Matrix::Zero(nb, static_cast<Index>(time_offsets.size()));
    Vector numer_int = Vector::Zero(nb);
    for (Index j = 0; j < x_nodes.size(); ++j) {
        const Vector x = x_nodes.node(j);
        const Scalar rw = w[j] * rho.rho(x);
        for (Index b = 0; b < nb; ++b) denom[b] += rw * std::abs(battery[std::size_t(b)](x));
        const PathEnsemble paths = simulate_forward(model, env, start_index, x, policy);
        const Index m = paths.paths();
        Matrix mean_abs = Matrix::Zero(nb, steps + 1); // battery x local step
        for (Index k = 0; k <= steps; ++k) {
            for (Index p = 0; p < m; ++p) {
                const Vector s = paths.state(p, k);
                for (Index b = 0; b < nb; ++b) mean_abs(b, k) += std::abs(battery[std::size_t(b)](s));
            }
        }
        mean_abs /= static_cast<Scalar>(m);
        for (std::size_t q = 0; q < time_offsets.size(); ++q) numer.col(Index(q)) += rw * mean_abs.col(time_offsets[q]);
        const Scalar dt = grid.step();
        for (Index k = 0; k <= steps; ++k) numer_int += rw * ((k == 0 || k == steps) ? 0.5 * dt : dt) * mean_abs.col(k);
    }
    for (Index b = 0; b < nb; ++b) require(denom[b] > 0.0, "check_norm_equivalence: test function vanishes on the domain");

    EquivalenceReport rep;
    rep.lower_bound = lower_bound;
    rep.upper_bound = upper_bound;
    for (Index k : time_offsets) rep.times.push_back(grid.time(start_index + k));
    rep.ratios = numer.array().colwise() / denom.array();
    const Scalar span = grid.horizon() - grid.time(start_index);
    rep.integrated = numer_int.array() / (denom.array() * span);
    rep.lower = std::min(rep.ratios.minCoeff(), rep.integrated.minCoeff());
    rep.upper = std::max(rep.ratios.maxCoeff(), rep.integrated.maxCoeff());
    rep.pass = rep.lower >= lower_bound && rep.upper <= upper_bound;
    return rep;
}

WeakFormReport check_weak_inequalities(const ValueField& field, const CoefficientSet& model,
                                       const BrownianEnvironment& env, const std::vector<TestFunction>& battery,
                                       const WeakOptions& options) {
    require(field.values.allFinite(), "check_weak_inequalities: field contains non-finite values");
    require(field.time == env.grid() && field.b_seed == env.b_seed(),
            "check_weak_inequalities: field and environment disagree on grid or backward path");
    require(!battery.empty(), "check_weak_inequalities: empty test battery");
    const SpaceGrid& grid = field.space;
    for (const auto& test : battery)
        if (!test.supported_inside(grid)) throw Error("check_weak_inequalities: test function support touches the domain boundary");

    const TimeGrid& tg = field.time;
    const Index steps = tg.steps();
    const Scalar dt = tg.step();
    const Vector w = grid.quadrature_weights();
    const ControlSet& controls = field.controls;
    const Index nc = controls.size();
    const Index candidates = nc + (options.feedback_candidate ? 1 : 0);

    // per candidate, per interval
    std::vector<std::vector<IntervalTerms>> terms(static_cast<std::size_t>(candidates));
    for (Index c = 0; c < candidates; ++c) {
        for (Index i = 0; i < steps; ++i) {
            const Vector db = env.db(i);
            if (c < nc) {
                terms[std::size_t(c)].push_back(
                    interval_terms(field, model, db, i, [&](Index) -> const Vector& { return controls[c]; }));
            } else {
                terms[std::size_t(c)].push_back(interval_terms(
                    field, model, db, i, [&](Index j) -> const Vector& { return controls[field.argmax(i, j)]; }));
            }
        }
    }
    Vector terminal(grid.size());
    for (Index j = 0; j < grid.size(); ++j) terminal[j] = model.terminal(grid.node(j));

    const auto gl = gauss_legendre<Scalar>(options.time_nodes, 0.0, 1.0);
    WeakFormReport rep;
    rep.epsilon = options.epsilon;
    rep.tolerance = options.tolerance;
    rep.min_supersolution_margin = rep.min_supersolution_variant = std::numeric_limits<Scalar>::infinity();
    rep.min_attainment_margin = rep.min_attainment_variant = std::numeric_limits<Scalar>::infinity();

    for (std::size_t ti = 0; ti < battery.size(); ++ti) {
        const TestFunction& test = battery[ti];
        const TestNodal tn = nodal(grid, w, test);
        Vector s(steps + 1);
        for (Index i = 0; i <= steps; ++i) s[i] = tn.phi.dot(field.values.row(i).transpose());
        Vector psi_int(steps);
        Scalar lhs = test.temporal(tg.t0()) * s[0];
        for (Index i = 0; i < steps; ++i) {
            Scalar integral = 0.0;
            for (Index q = 0; q < gl.nodes.size(); ++q) {
                const Scalar theta = gl.nodes[q];
                const Scalar r = tg.time(i) + theta * dt;
                lhs += gl.weights[q] * dt * test.temporal_derivative(r) * (s[i] + theta * (s[i + 1] - s[i]));
                integral += gl.weights[q] * dt * test.temporal(r);
            }
            psi_int[i] = integral;
        }
        const Scalar base = test.temporal(tg.horizon()) * tn.phi.dot(terminal);

        std::vector<Assembly> asm_c(static_cast<std::size_t>(candidates));
        for (Index c = 0; c < candidates; ++c) {
            Assembly a{base, base, base};
            for (Index i = 0; i < steps; ++i) {
                const IntervalTerms& it = terms[std::size_t(c)][std::size_t(i)];
                const Scalar fg = tn.phi.dot(it.f) + tn.phi.dot(it.g) / dt;
                const Scalar diffusion = (it.flux.array() * tn.grad.array()).sum();
                const Scalar consistent = -0.5 * diffusion + tn.phi.dot(it.drift);
                const Scalar variant = 0.5 * diffusion + tn.phi.dot(it.variant);
                const Scalar strong = tn.phi.dot(it.strong);
                a.rhs += psi_int[i] * (fg + consistent);
                a.rhs_variant += psi_int[i] * (fg + variant);
                a.rhs_strong += psi_int[i] * (fg + strong);
            }
            asm_c[std::size_t(c)] = a;
            rep.route_difference = std::max(rep.route_difference, std::abs(a.rhs - a.rhs_strong));
        }

        for (Index c = 0; c < nc; ++c) {
            const Assembly& a = asm_c[std::size_t(c)];
            WeakEntry e{Index(ti), c, lhs, a.rhs, lhs - a.rhs, a.rhs_variant, lhs - a.rhs_variant, a.rhs_strong};
            rep.min_supersolution_margin = std::min(rep.min_supersolution_margin, e.margin);
            rep.min_supersolution_variant = std::min(rep.min_supersolution_variant, e.margin_variant);
            rep.supersolution.push_back(e);
        }
        WeakEntry best;
        Scalar best_variant = -std::numeric_limits<Scalar>::infinity();
        for (Index c = 0; c < candidates; ++c) {
            const Assembly& a = asm_c[std::size_t(c)];
            const Scalar margin = a.rhs - lhs + options.epsilon;
            if (c == 0 || margin > best.margin)
                best = WeakEntry{Index(ti), c < nc ? c : -1, lhs, a.rhs, margin, a.rhs_variant, 0.0, a.rhs_strong};
            best_variant = std::max(best_variant, a.rhs_variant - lhs + options.epsilon);
        }
        best.margin_variant = best_variant;
        rep.min_attainment_margin = std::min(rep.min_attainment_margin, best.margin);
        rep.min_attainment_variant = std::min(rep.min_attainment_variant, best_variant);
        rep.attainment.push_back(best);
    }
    rep.pass_supersolution = rep.min_supersolution_margin >= -options.tolerance;
    rep.pass_attainment = rep.min_attainment_margin >= -options.tolerance;
    return rep;
}

WeakTolerance calibrate_weak_tolerance(const WeakFormReport& coarse, const WeakFormReport& fine, Scalar dt, Scalar h,
                                       Scalar monte_carlo_error, Scalar floor) {
    require(coarse.supersolution.size() == fine.supersolution.size() &&
                coarse.attainment.size() == fine.attainment.size(),
            "calibrate_weak_tolerance: reports cover different batteries");
    Scalar diff = 0.0;
    for (std::size_t k = 0; k < coarse.supersolution.size(); ++k)
        diff = std::max(diff, std::abs(coarse.supersolution[k].margin - fine.supersolution[k].margin));
    for (std::size_t k = 0; k < coarse.attainment.size(); ++k)
        diff = std::max(diff, std::abs(coarse.attainment[k].margin - fine.attainment[k].margin));
    // error ~ C s^p with s = dt + h^2; halving both cuts s by ~2, so the
    // coarse error is diff / (1 - 2^-p). Take the Euler strong order p = 1/2
    // as the worst case rather than trusting the observed order.
    const Scalar scale = dt + h * h;
    const Scalar worst = 1.0 - std::pow(2.0, -0.5);
    WeakTolerance tol;
    tol.c_ref = diff / (worst * scale);
    tol.monte_carlo = 3.0 * monte_carlo_error;
    tol.tolerance = tol.monte_carlo + tol.c_ref * scale + floor;
    return tol;
}

Scalar integration_by_parts_residual(const SpaceGrid& grid, const Eigen::Ref<const Vector>& u,
                                     const CoefficientSet& model, Scalar t, const Vector& v, const TestFunction& phi) {
    require(phi.supported_inside(grid), "integration_by_parts_residual: test function support touches the boundary");
    const Vector w = grid.quadrature_weights();
    const Matrix grad = grid_gradient(grid, u);
    Matrix flux(grid.size(), grid.dim());
    for (Index j = 0; j < grid.size(); ++j) {
        const Matrix a = diffusion_matrix(model, t, grid.node(j), v);
        flux.row(j) = (a * grad.row(j).transpose()).transpose();
    }
    Scalar weak = 0.0, strong = 0.0;
    for (Index j = 0; j < grid.size(); ++j) {
        const Vector x = grid.node(j);
        weak += w[j] * flux.row(j).dot(phi.gradient(x).transpose());
        Scalar div = 0.0;
        for (Index a = 0; a < grid.dim(); ++a) {
            const Index up = grid.neighbour(j, a, +1), down = grid.neighbour(j, a, -1);
            if (up >= 0 && down >= 0) div += (flux(up, a) - flux(down, a)) / (2.0 * grid.spacing(a));
        }
        strong += w[j] * div * phi.spatial(x);
    }
    return std::abs(weak + strong);
}

AdjointReport check_adjoint_identity(const ValueField& field, const CoefficientSet& model,
                                     const BrownianEnvironment& env, const std::vector<TestFunction>& battery,
                                     Scalar tolerance) {
    AdjointReport rep;
    rep.tolerance = tolerance;
    for (const auto& test : battery) {
        for (Index i = 0; i <= field.steps(); ++i) {
            for (Index c = 0; c < field.controls.size(); ++c) {
                const Scalar r = integration_by_parts_residual(field.space, field.row(i), model, field.time.time(i),
                                                               field.controls[c], test);
                rep.ibp_residual = std::max(rep.ibp_residual, r);
            }
        }
    }
    WeakOptions opts;
    opts.epsilon = 0.0;
    opts.tolerance = tolerance;
    opts.feedback_candidate = false;
    rep.route_difference = check_weak_inequalities(field, model, env, battery, opts).route_difference;
    rep.pass = rep.route_difference <= tolerance && rep.ibp_residual <= tolerance;
    return rep;
}

RepresentationReport check_supersolution_representation(const ValueField& field, const CoefficientSet& model,
                                                        const BrownianEnvironment& env, Index control,
                                                        Index t_index, const Vector& x,
                                                        const RegressionBasis& basis,
                                                        const std::vector<Scalar>& levels, Scalar tol_z) {
    require(field.time == env.grid() && field.b_seed == env.b_seed(),
            "check_supersolution_representation: field and environment disagree on grid or backward path");
    require(field.controls.valid_index(control), "check_supersolution_representation: control outside the set");
    const ControlPolicy policy = ControlPolicy::constant(field.controls, control);
    const PathEnsemble paths = simulate_forward(model, env, t_index, x, policy);
    const Obstacle obstacle = [&field](Scalar t, const Vector& y) { return field.at(field.time_index(t), y); };

    RepresentationReport rep;
    rep.tol_z = tol_z;
    for (Index p = 0; p < paths.paths() && rep.warnings.empty(); ++p)
        for (Index k = 0; k <= paths.steps(); ++k)
            if (!field.space.contains(paths.state(p, k))) {
                rep.warnings.push_back("obstacle evaluated outside the space grid (linear extrapolation)");
                break;
            }

    rep.ladder = run_penalty_ladder(model, env, paths, policy, basis, obstacle, levels);
    const BdsdeSolution& sol = rep.ladder.last;
    for (const auto& w : sol.warnings) rep.warnings.push_back(w);
    rep.field_value = field.at(t_index, x);
    rep.y0 = sol.y0();
    rep.y0_limit = rep.ladder.y0_limit;
    rep.value_gap = std::abs(rep.y0_limit - rep.field_value);

    const Index m = paths.paths();
    const Index steps = paths.steps();
    const Index d = model.dims.forward;
    Scalar path_gap = 0.0;
    for (Index p = 0; p < m; ++p) {
        Scalar worst = 0.0;
        for (Index k = 0; k <= steps; ++k)
            worst = std::max(worst, std::abs(sol.y(p, k) - field.at(t_index + k, paths.state(p, k))));
        path_gap += worst;
    }
    rep.path_gap = path_gap / Scalar(m);
    rep.k_terminal = sol.k.col(steps).mean();
    rep.k_second_moment = sol.k.col(steps).squaredNorm() / Scalar(m);

    Scalar err = 0.0, scale = 0.0;
    for (Index k = 0; k < steps; ++k) {
        const Index gi = t_index + k;
        const Matrix grad = grid_gradient(field.space, field.row(gi));
        std::vector<Vector> comps;
        for (Index a = 0; a < field.space.dim(); ++a) comps.emplace_back(grad.col(a));
        for (Index p = 0; p < m; ++p) {
            const Vector s = paths.state(p, k);
            Vector gu(field.space.dim());
            for (Index a = 0; a < field.space.dim(); ++a) gu[a] = field.space.interpolate(comps[std::size_t(a)], s);
            const Vector zeta = model.diffusion(field.time.time(gi), s, field.controls[control]).transpose() * gu;
            const Vector z = sol.z.row(p).segment(k * d, d).transpose();
            err += (z - zeta).norm();
            scale += zeta.norm();
        }
    }
    // reference: the larger of the along-path mean of |sigma* grad V| and its
    // rho-weighted RMS over the grid (the H-seminorm scale); along-path
    // values alone vanish where V is flat
    const NormReport norms = weighted_norms(field, model, gaussian_weight(field.space.dim()));
    const Scalar span = field.time.horizon() - field.time.t0();
    const Scalar samples = Scalar(std::max<Index>(1, m * steps));
    const Scalar reference = std::max(scale / samples, std::sqrt(norms.sigma_gradient / span));
    rep.z_reference = reference;
    rep.z_error = reference > 1e-12 ? err / samples / reference : err / samples;
    rep.tol_value = 3.0 * sol.y0_standard_error + 0.02 * std::max<Scalar>(1.0, std::abs(rep.field_value));
    rep.pass = rep.value_gap <= rep.tol_value && std::isfinite(rep.k_second_moment) && rep.z_error <= tol_z;
    return rep;
}

} // namespace bdsoc
