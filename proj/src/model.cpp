#include "bdsoc/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace bdsoc {

bool ValidationReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const LipschitzCheck& c) { return c.pass; });
}

Scalar ValidationReport::max_ratio(const std::string& function, const std::string& part) const {
    for (const auto& c : checks)
        if (c.function == function && c.part == part) return c.max_ratio;
    throw Error("ValidationReport: no check for " + function + "/" + part);
}

namespace {

class RatioTable {
public:
    void record(const std::string& fn, const std::string& part, Scalar ratio, Scalar declared) {
        auto& c = table_[{fn, part}];
        c.function = fn;
        c.part = part;
        c.declared = declared;
        c.max_ratio = std::max(c.max_ratio, ratio);
    }
    std::vector<LipschitzCheck> finish(Scalar slack) {
        std::vector<LipschitzCheck> out;
        for (auto& [key, c] : table_) {
            c.pass = c.max_ratio <= c.declared * slack;
            out.push_back(c);
        }
        return out;
    }

private:
    std::map<std::pair<std::string, std::string>, LipschitzCheck> table_;
};

void check_finite(bool ok, const std::string& fn) {
    if (!ok) throw Error("validate_model: non-finite output of " + fn + " at a sampled point");
}

} // namespace

ValidationReport validate_model(const CoefficientSet& model, const ControlSet& controls, Index sample_budget,
                                const ValidationOptions& options) {
    require(model.alpha > 0.0 && model.alpha < 1.0, "validate_model: alpha must lie in (0, 1)");
    require(model.lipschitz > 0.0, "validate_model: Lipschitz constant must be positive");
    require(sample_budget >= 1, "validate_model: sample budget must be positive");
    require(controls.dim() == model.dims.control, "validate_model: control dimension mismatch");
    require(model.drift && model.diffusion && model.driver && model.backward_driver && model.terminal,
            "validate_model: every coefficient must be callable");

    const Dimensions& dm = model.dims;
    const Scalar r = options.box_radius;
    const Scalar L = model.lipschitz;
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
    std::normal_distribution<Scalar> gauss(0.0, 1.0);

    auto uniform_vec = [&](Index n) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v[i] = r * (2.0 * unit(rng) - 1.0);
        return v;
    };
    auto direction = [&](Index n, Scalar length) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v[i] = gauss(rng);
        const Scalar norm = v.norm();
        if (norm == 0.0) v.setZero(), v[0] = 1.0;
        else v /= norm;
        return Vector(v * length);
    };
    auto step_length = [&] { return std::pow(10.0, -4.0 + 3.0 * unit(rng)); };

    RatioTable table;
    for (Index s = 0; s < sample_budget; ++s) {
        const Scalar t = options.t_begin + (options.t_end - options.t_begin) * unit(rng);
        const Vector x = uniform_vec(dm.state);
        const Scalar y = r * (2.0 * unit(rng) - 1.0);
        const Vector z = uniform_vec(dm.forward);
        const Index vi = static_cast<Index>(unit(rng) * static_cast<Scalar>(controls.size())) % controls.size();
        const Vector& v = controls[vi];
        const Vector dx = direction(dm.state, step_length());
        const Scalar dy = (unit(rng) < 0.5 ? -1.0 : 1.0) * step_length();
        const Vector dz = direction(dm.forward, step_length());
        const Index wi = controls.size() > 1 ? (vi + 1 + static_cast<Index>(unit(rng) * Scalar(controls.size() - 1))) % controls.size() : vi;
        const Vector& w = controls[wi];
        const Scalar dv = (w - v).norm();

        const Vector b0 = model.drift(t, x, v);
        require(b0.size() == dm.state, "validate_model: drift has wrong dimension");
        check_finite(b0.allFinite(), "b");
        const Vector bx = model.drift(t, x + dx, v);
        check_finite(bx.allFinite(), "b");
        table.record("b", "x", (bx - b0).norm() / dx.norm(), L);

        const Matrix s0 = model.diffusion(t, x, v);
        require(s0.rows() == dm.state && s0.cols() == dm.forward, "validate_model: diffusion has wrong shape");
        check_finite(s0.allFinite(), "sigma");
        const Matrix sx = model.diffusion(t, x + dx, v);
        check_finite(sx.allFinite(), "sigma");
        table.record("sigma", "x", (sx - s0).norm() / dx.norm(), L);

        const Scalar f0 = model.driver(t, x, y, z, v);
        check_finite(std::isfinite(f0), "f");
        const Scalar fx = model.driver(t, x + dx, y, z, v);
        const Scalar fy = model.driver(t, x, y + dy, z, v);
        const Scalar fz = model.driver(t, x, y, z + dz, v);
        check_finite(std::isfinite(fx) && std::isfinite(fy) && std::isfinite(fz), "f");
        table.record("f", "x", std::abs(fx - f0) / dx.norm(), L);
        table.record("f", "y", std::abs(fy - f0) / std::abs(dy), L);
        table.record("f", "z", std::abs(fz - f0) / dz.norm(), L);

        const Vector g0 = model.backward_driver(t, x, y, z);
        require(g0.size() == dm.backward, "validate_model: backward driver has wrong dimension");
        check_finite(g0.allFinite(), "g");
        const Vector gx = model.backward_driver(t, x + dx, y, z);
        const Vector gy = model.backward_driver(t, x, y + dy, z);
        const Vector gz = model.backward_driver(t, x, y, z + dz);
        check_finite(gx.allFinite() && gy.allFinite() && gz.allFinite(), "g");
        table.record("g", "x", (gx - g0).norm() / dx.norm(), L);
        table.record("g", "y", (gy - g0).squaredNorm() / (dy * dy), L);
        table.record("g", "z", (gz - g0).squaredNorm() / dz.squaredNorm(), model.alpha);

        const Scalar h0 = model.terminal(x);
        const Scalar hx = model.terminal(x + dx);
        check_finite(std::isfinite(h0) && std::isfinite(hx), "h");
        table.record("h", "x", std::abs(hx - h0) / dx.norm(), L);

        if (dv > 0.0) {
            const Vector bv = model.drift(t, x, w);
            const Matrix sv = model.diffusion(t, x, w);
            const Scalar fv = model.driver(t, x, y, z, w);
            check_finite(bv.allFinite() && sv.allFinite() && std::isfinite(fv), "b/sigma/f");
            table.record("b", "v", (bv - b0).norm() / dv, L);
            table.record("sigma", "v", (sv - s0).norm() / dv, L);
            table.record("f", "v", std::abs(fv - f0) / dv, L);
        }
    }
    ValidationReport report;
    report.slack = options.slack;
    report.checks = table.finish(options.slack);
    return report;
}

} // namespace bdsoc
