#pragma once

#include "bdsoc/core.hpp"

#include <vector>

namespace bdsoc {

struct PowerLawFit {
    Scalar slope = 0.0;     ///< exponent of y ~ C x^slope
    Scalar constant = 0.0;  ///< C
    bool degenerate = false; ///< all y vanish (or too few usable points)
};

/// Least-squares fit of log y = log C + slope log x over points with y > 0.
/// Flags a degenerate fit when every y is below `zero_tol`.
PowerLawFit fit_power_law(const std::vector<Scalar>& x, const std::vector<Scalar>& y, Scalar zero_tol = 1e-24);

Scalar mean(const Eigen::Ref<const Vector>& v);
/// Unbiased sample standard deviation (0 for fewer than two samples).
Scalar stddev(const Eigen::Ref<const Vector>& v);
Scalar standard_error(const Eigen::Ref<const Vector>& v);

/// Extrapolated limit of a sequence along a geometric ladder from its last
/// three terms (Richardson with an estimated rate); falls back to the last
/// term when the rate is not contracting.
Scalar richardson_limit(Scalar a, Scalar b, Scalar c);

/// max / min over positive entries; 1 for an all-zero input.
Scalar variation_factor(const std::vector<Scalar>& values);

} // namespace bdsoc
