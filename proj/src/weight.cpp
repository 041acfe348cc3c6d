#include "bdsoc/weight.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace bdsoc {

bool WeightFunction::certified(Scalar tol) const {
    return min_on_grid > 0.0 && std::abs(mass - 1.0) <= tol && std::isfinite(second_moment);
}

WeightFunction make_weight(std::function<Scalar(const Vector&)> rho, SpaceGrid domain) {
    WeightFunction w{std::move(rho), domain};
    const Vector q = domain.quadrature_weights();
    w.min_on_grid = std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < domain.size(); ++j) {
        const Vector x = domain.node(j);
        const Scalar r = w.rho(x);
        w.min_on_grid = std::min(w.min_on_grid, r);
        w.mass += q[j] * r;
        w.second_moment += q[j] * x.squaredNorm() * r;
    }
    return w;
}

WeightFunction gaussian_weight(Index dim, Scalar radius, Index points_per_axis) {
    const Scalar norm = std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<Scalar>(dim));
    auto rho = [norm](const Vector& x) { return norm * std::exp(-0.5 * x.squaredNorm()); };
    SpaceGrid domain(Vector::Constant(dim, -radius), Vector::Constant(dim, radius),
                     std::vector<Index>(static_cast<std::size_t>(dim), points_per_axis));
    return make_weight(rho, domain);
}

} // namespace bdsoc
