#pragma once

// Small builders shared by the unit suites.

#include "bdsoc/model.hpp"

#include <cmath>
#include <random>

namespace testing {

using namespace bdsoc;

/// Scalar model with everything zero; tests overwrite what they need.
inline CoefficientSet scalar_model(std::string name = "test") {
    CoefficientSet m;
    m.name = std::move(name);
    m.dims = Dimensions{1, 1, 1, 1};
    m.drift = [](Scalar, const Vector&, const Vector&) { return Vector::Zero(1).eval(); };
    m.diffusion = [](Scalar, const Vector&, const Vector&) { return Matrix::Zero(1, 1).eval(); };
    m.driver = [](Scalar, const Vector&, Scalar, const Vector&, const Vector&) { return 0.0; };
    m.backward_driver = [](Scalar, const Vector&, Scalar, const Vector&) { return Vector::Zero(1).eval(); };
    m.terminal = [](const Vector&) { return 0.0; };
    return m;
}

inline CoefficientSet brownian_model(Scalar sigma, TerminalFn h) {
    CoefficientSet m = scalar_model("brownian");
    m.diffusion = [sigma](Scalar, const Vector&, const Vector&) { return Matrix::Constant(1, 1, sigma); };
    m.terminal = std::move(h);
    m.lipschitz = std::max(1.0, sigma);
    return m;
}

inline Vector vec1(Scalar x) { return Vector::Constant(1, x); }

/// Sample variance with its standard error sqrt((m4 - s^4) / M).
struct VarianceEstimate {
    Scalar mean = 0.0, variance = 0.0, se_mean = 0.0, se_variance = 0.0;
};
inline VarianceEstimate estimate_variance(const Vector& v) {
    const Scalar n = Scalar(v.size());
    VarianceEstimate e;
    e.mean = v.mean();
    const Vector c = v.array() - e.mean;
    e.variance = c.squaredNorm() / (n - 1.0);
    const Scalar m4 = c.array().pow(4).mean();
    e.se_mean = std::sqrt(e.variance / n);
    e.se_variance = std::sqrt(std::max(m4 - e.variance * e.variance, 0.0) / n);
    return e;
}

} // namespace testing
