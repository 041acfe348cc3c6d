#include "bdsoc/registry.hpp"

#include <algorithm>
#include <cmath>

namespace bdsoc {

namespace {

Vector zeros(Index n) { return Vector::Zero(n); }

CoefficientSet scalar_base(const std::string& name) {
    CoefficientSet m;
    m.name = name;
    m.dims = Dimensions{1, 1, 1, 1};
    m.drift = [](Scalar, const Vector&, const Vector&) { return zeros(1); };
    m.diffusion = [](Scalar, const Vector&, const Vector&) { return Matrix::Zero(1, 1).eval(); };
    m.driver = [](Scalar, const Vector&, Scalar, const Vector&, const Vector&) { return 0.0; };
    m.backward_driver = [](Scalar, const Vector&, Scalar, const Vector&) { return zeros(1); };
    m.terminal = [](const Vector&) { return 0.0; };
    m.lipschitz = 1.0;
    m.alpha = 0.5;
    return m;
}

std::string join(const std::vector<std::string>& keys) {
    std::string out;
    for (const auto& k : keys) out += (out.empty() ? "" : ", ") + k;
    return out;
}

} // namespace

std::vector<std::string> registry_names() {
    return {"zero", "linear-bdsde", "martingale", "transport-control", "controlled-drift-lq", "degenerate-sigma"};
}

RegistryModel make_registry_model(const std::string& name, const std::map<std::string, Scalar>& overrides) {
    RegistryModel r;
    std::map<std::string, Scalar>& p = r.parameters;
    if (name == "zero") {
    } else if (name == "linear-bdsde") {
        p = {{"a", 0.5}, {"b", 0.3}, {"c", 1.0}};
    } else if (name == "martingale") {
        p = {{"sigma", 1.0}};
    } else if (name == "transport-control") {
    } else if (name == "controlled-drift-lq") {
        p = {{"sigma", 0.3}, {"gamma", 0.2}};
    } else if (name == "degenerate-sigma") {
        p = {{"sigma", 0.5}, {"gamma", 0.2}, {"kappa", 0.25}};
    } else {
        throw Error("unknown model '" + name + "'; valid keys: " + join(registry_names()));
    }
    for (const auto& [key, value] : overrides) {
        if (!p.count(key)) {
            std::vector<std::string> keys;
            for (const auto& kv : p) keys.push_back(kv.first);
            throw Error("model '" + name + "' has no parameter '" + key + "'; valid parameters: " +
                        (keys.empty() ? std::string("none") : join(keys)));
        }
        require(std::isfinite(value), "model parameter '" + key + "' must be finite");
        p[key] = value;
    }

    CoefficientSet m = scalar_base(name);
    r.start = zeros(1);
    if (name == "linear-bdsde") {
        const Scalar a = p["a"], b = p["b"], c = p["c"];
        m.driver = [a](Scalar, const Vector&, Scalar y, const Vector&, const Vector&) { return a * y; };
        m.backward_driver = [b](Scalar, const Vector&, Scalar y, const Vector&) { return Vector::Constant(1, b * y); };
        m.terminal = [c](const Vector&) { return c; };
        m.lipschitz = std::max({1.0, std::abs(a), b * b});
    } else if (name == "martingale") {
        const Scalar s = p["sigma"];
        m.diffusion = [s](Scalar, const Vector&, const Vector&) { return Matrix::Constant(1, 1, s); };
        m.terminal = [](const Vector& x) { return x[0]; };
        m.lipschitz = std::max(1.0, std::abs(s));
    } else if (name == "transport-control") {
        m.driver = [](Scalar, const Vector&, Scalar, const Vector&, const Vector& v) { return v[0]; };
        r.controls = ControlSet::scalars({-1.0, 0.0, 1.0});
    } else if (name == "controlled-drift-lq") {
        const Scalar s = p["sigma"], gamma = p["gamma"];
        m.drift = [](Scalar, const Vector&, const Vector& v) { return v; };
        m.diffusion = [s](Scalar, const Vector&, const Vector&) { return Matrix::Constant(1, 1, s); };
        m.backward_driver = [gamma](Scalar, const Vector&, Scalar, const Vector&) { return Vector::Constant(1, gamma); };
        m.terminal = [](const Vector& x) { return -x[0] * x[0]; };
        // |h'| = 2|x| on the validation box of radius 3
        m.lipschitz = std::max(6.5, std::abs(s));
        r.controls = ControlSet::scalars({-1.0, 0.0, 1.0});
    } else if (name == "degenerate-sigma") {
        const Scalar s = p["sigma"], gamma = p["gamma"], kappa = p["kappa"];
        // diffusion vanishes on x <= 0
        m.drift = [](Scalar, const Vector&, const Vector& v) { return (0.5 * v).eval(); };
        m.diffusion = [s](Scalar, const Vector& x, const Vector&) {
            return Matrix::Constant(1, 1, s * std::clamp(x[0], 0.0, 1.0));
        };
        m.driver = [kappa](Scalar, const Vector&, Scalar, const Vector&, const Vector& v) { return -kappa * v.squaredNorm(); };
        m.backward_driver = [gamma](Scalar, const Vector&, Scalar y, const Vector&) { return Vector::Constant(1, gamma * y); };
        m.terminal = [](const Vector& x) { return std::sin(x[0]); };
        m.lipschitz = std::max({1.0, std::abs(s), 2.0 * std::abs(kappa), gamma * gamma});
        r.controls = ControlSet::scalars({-1.0, -0.5, 0.0, 0.5, 1.0});
    }
    r.deterministic = name == "zero" || name == "transport-control";
    r.model = std::move(m);
    return r;
}

} // namespace bdsoc
