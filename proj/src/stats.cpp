#include "bdsoc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bdsoc {

PowerLawFit fit_power_law(const std::vector<Scalar>& x, const std::vector<Scalar>& y, Scalar zero_tol) {
    require(x.size() == y.size(), "fit_power_law: size mismatch");
    require(x.size() >= 2, "fit_power_law: need at least two points");
    std::vector<Scalar> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0.0, "fit_power_law: abscissae must be positive");
        if (y[i] > zero_tol) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    PowerLawFit fit;
    if (lx.size() < 2) {
        fit.degenerate = true;
        return fit;
    }
    const Scalar n = static_cast<Scalar>(lx.size());
    Scalar mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= n;
    my /= n;
    Scalar sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    require(sxx > 0.0, "fit_power_law: degenerate ladder (repeated abscissae)");
    fit.slope = sxy / sxx;
    fit.constant = std::exp(my - fit.slope * mx);
    return fit;
}

Scalar mean(const Eigen::Ref<const Vector>& v) { return v.size() ? v.mean() : 0.0; }

Scalar stddev(const Eigen::Ref<const Vector>& v) {
    if (v.size() < 2) return 0.0;
    const Scalar m = v.mean();
    return std::sqrt((v.array() - m).square().sum() / static_cast<Scalar>(v.size() - 1));
}

Scalar standard_error(const Eigen::Ref<const Vector>& v) {
    if (v.size() < 2) return 0.0;
    return stddev(v) / std::sqrt(static_cast<Scalar>(v.size()));
}

Scalar richardson_limit(Scalar a, Scalar b, Scalar c) {
    const Scalar d1 = b - a;
    const Scalar d2 = c - b;
    if (d1 == 0.0 || d2 == 0.0) return c;
    const Scalar rate = d2 / d1;
    if (!(rate > 0.0 && rate < 1.0)) return c;
    return c + d2 * rate / (1.0 - rate);
}

Scalar variation_factor(const std::vector<Scalar>& values) {
    Scalar lo = std::numeric_limits<Scalar>::infinity();
    Scalar hi = 0.0;
    bool any = false;
    for (Scalar v : values) {
        if (v > 0.0) {
            any = true;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!any) return 1.0;
    return hi / lo;
}

} // namespace bdsoc
