#include "bdsoc/grid.hpp"

#include <algorithm>
#include <cmath>

namespace bdsoc {

TimeGrid::TimeGrid(Scalar t0, Scalar horizon, Index n_steps)
    : t0_(t0), horizon_(horizon), n_steps_(n_steps) {
    require(std::isfinite(t0) && std::isfinite(horizon), "TimeGrid: non-finite bounds");
    require(t0 >= 0.0, "TimeGrid: t0 must be non-negative");
    require(t0 < horizon, "TimeGrid: t0 must be smaller than T");
    require(n_steps >= 1, "TimeGrid: at least one step is required");
}

Scalar TimeGrid::time(Index i) const {
    require(i >= 0 && i <= n_steps_, "TimeGrid: index out of range");
    if (i == n_steps_) return horizon_;
    return t0_ + static_cast<Scalar>(i) * step();
}

SpaceGrid::SpaceGrid(Vector lower, Vector upper, std::vector<Index> points)
    : lower_(std::move(lower)), upper_(std::move(upper)), points_(std::move(points)) {
    require(lower_.size() >= 1, "SpaceGrid: dimension must be positive");
    require(lower_.size() == upper_.size() && static_cast<std::size_t>(lower_.size()) == points_.size(),
            "SpaceGrid: inconsistent axis data");
    size_ = 1;
    strides_.resize(points_.size());
    for (std::size_t a = 0; a < points_.size(); ++a) {
        require(std::isfinite(lower_[Index(a)]) && std::isfinite(upper_[Index(a)]),
                "SpaceGrid: bounds must be finite");
        require(lower_[Index(a)] < upper_[Index(a)], "SpaceGrid: lower bound must be below upper bound");
        require(points_[a] >= 2, "SpaceGrid: at least two points per axis");
        strides_[a] = size_;
        size_ *= points_[a];
    }
}

SpaceGrid SpaceGrid::line(Scalar lower, Scalar upper, Index points) {
    return SpaceGrid(Vector::Constant(1, lower), Vector::Constant(1, upper), {points});
}

Scalar SpaceGrid::spacing(Index axis) const {
    return (upper_[axis] - lower_[axis]) / static_cast<Scalar>(points(axis) - 1);
}

Scalar SpaceGrid::max_spacing() const {
    Scalar h = 0.0;
    for (Index a = 0; a < dim(); ++a) h = std::max(h, spacing(a));
    return h;
}

Scalar SpaceGrid::coordinate(Index axis, Index i) const {
    if (i == points(axis) - 1) return upper_[axis];
    return lower_[axis] + static_cast<Scalar>(i) * spacing(axis);
}

std::vector<Index> SpaceGrid::unflatten(Index flat) const {
    std::vector<Index> multi(points_.size());
    for (std::size_t a = 0; a < points_.size(); ++a) {
        multi[a] = flat % points_[a];
        flat /= points_[a];
    }
    return multi;
}

Index SpaceGrid::flatten(const std::vector<Index>& multi) const {
    Index flat = 0;
    for (std::size_t a = 0; a < points_.size(); ++a) flat += multi[a] * strides_[a];
    return flat;
}

Vector SpaceGrid::node(Index flat) const {
    Vector x(dim());
    for (Index a = 0; a < dim(); ++a) {
        x[a] = coordinate(a, flat % points(a));
        flat /= points(a);
    }
    return x;
}

Index SpaceGrid::neighbour(Index flat, Index axis, int offset) const {
    const Index i = (flat / strides_[std::size_t(axis)]) % points(axis);
    const Index j = i + offset;
    if (j < 0 || j >= points(axis)) return -1;
    return flat + offset * strides_[std::size_t(axis)];
}

Index SpaceGrid::nearest(const Eigen::Ref<const Vector>& x) const {
    Index flat = 0;
    for (Index a = 0; a < dim(); ++a) {
        const Scalar s = (x[a] - lower_[a]) / spacing(a);
        const Index i = std::clamp<Index>(static_cast<Index>(std::lround(s)), 0, points(a) - 1);
        flat += i * strides_[std::size_t(a)];
    }
    return flat;
}

SpaceGrid::Stencil SpaceGrid::stencil(const Eigen::Ref<const Vector>& x) const {
    const Index n = dim();
    std::vector<Index> base(static_cast<std::size_t>(n));
    std::vector<Scalar> frac(static_cast<std::size_t>(n));
    for (Index a = 0; a < n; ++a) {
        const Scalar s = (x[a] - lower_[a]) / spacing(a);
        const Index i = std::clamp<Index>(static_cast<Index>(std::floor(s)), 0, points(a) - 2);
        base[std::size_t(a)] = i;
        frac[std::size_t(a)] = s - static_cast<Scalar>(i);
    }
    Stencil st;
    const Index corners = Index(1) << n;
    st.nodes.reserve(std::size_t(corners));
    st.weights.reserve(std::size_t(corners));
    for (Index c = 0; c < corners; ++c) {
        Index flat = 0;
        Scalar w = 1.0;
        for (Index a = 0; a < n; ++a) {
            const bool upper = (c >> a) & 1;
            const Scalar t = frac[std::size_t(a)];
            w *= upper ? t : (1.0 - t);
            flat += (base[std::size_t(a)] + (upper ? 1 : 0)) * strides_[std::size_t(a)];
        }
        st.nodes.push_back(flat);
        st.weights.push_back(w);
    }
    return st;
}

Scalar SpaceGrid::interpolate(const Eigen::Ref<const Vector>& values, const Eigen::Ref<const Vector>& x) const {
    if (dim() == 1) {
        // hot path of the grid backends
        const Scalar h = spacing(0);
        const Scalar s = (x[0] - lower_[0]) / h;
        const Index i = std::clamp<Index>(static_cast<Index>(std::floor(s)), 0, points_[0] - 2);
        const Scalar t = s - static_cast<Scalar>(i);
        return (1.0 - t) * values[i] + t * values[i + 1];
    }
    const Stencil st = stencil(x);
    Scalar acc = 0.0;
    for (std::size_t k = 0; k < st.nodes.size(); ++k) acc += st.weights[k] * values[st.nodes[k]];
    return acc;
}

Vector SpaceGrid::quadrature_weights() const {
    Vector w = Vector::Ones(size_);
    for (Index flat = 0; flat < size_; ++flat) {
        Index rest = flat;
        for (Index a = 0; a < dim(); ++a) {
            const Index i = rest % points(a);
            rest /= points(a);
            const bool edge = (i == 0 || i == points(a) - 1);
            w[flat] *= spacing(a) * (edge ? 0.5 : 1.0);
        }
    }
    return w;
}

SpaceGrid SpaceGrid::refined() const {
    std::vector<Index> pts(points_.size());
    for (std::size_t a = 0; a < points_.size(); ++a) pts[a] = 2 * points_[a] - 1;
    return SpaceGrid(lower_, upper_, pts);
}

bool SpaceGrid::contains(const Eigen::Ref<const Vector>& x) const {
    for (Index a = 0; a < dim(); ++a)
        if (x[a] < lower_[a] || x[a] > upper_[a]) return false;
    return true;
}

ControlSet::ControlSet(std::vector<Vector> points) : points_(std::move(points)) {
    require(!points_.empty(), "ControlSet: at least one control point is required");
    for (const auto& p : points_) {
        require(p.size() == points_.front().size(), "ControlSet: control points must share a dimension");
        require(p.allFinite(), "ControlSet: control points must be finite");
    }
}

ControlSet ControlSet::scalars(const std::vector<Scalar>& values) {
    std::vector<Vector> pts;
    pts.reserve(values.size());
    for (Scalar v : values) pts.push_back(Vector::Constant(1, v));
    return ControlSet(std::move(pts));
}

} // namespace bdsoc
