#pragma once

#include "bdsoc/core.hpp"

#include <array>
#include <vector>

namespace bdsoc {

/// Uniform time grid t_i = t0 + i * step on [t0, T].
class TimeGrid {
public:
    TimeGrid(Scalar t0, Scalar horizon, Index n_steps);

    Scalar t0() const { return t0_; }
    Scalar horizon() const { return horizon_; }
    Index steps() const { return n_steps_; }
    Scalar step() const { return (horizon_ - t0_) / static_cast<Scalar>(n_steps_); }
    Scalar time(Index i) const;

    /// Halves the step. t0 and T are kept exactly.
    TimeGrid refined() const { return TimeGrid(t0_, horizon_, 2 * n_steps_); }

    bool operator==(const TimeGrid&) const = default;

private:
    Scalar t0_;
    Scalar horizon_;
    Index n_steps_;
};

/// Tensor-product uniform grid over a box in R^n. Nodes are addressed by a
/// flat index with axis 0 varying fastest.
class SpaceGrid {
public:
    SpaceGrid(Vector lower, Vector upper, std::vector<Index> points);

    /// One-dimensional convenience constructor.
    static SpaceGrid line(Scalar lower, Scalar upper, Index points);

    Index dim() const { return lower_.size(); }
    Index size() const { return size_; }
    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }
    Index points(Index axis) const { return points_[static_cast<std::size_t>(axis)]; }
    Scalar spacing(Index axis) const;
    Scalar max_spacing() const;
    Scalar coordinate(Index axis, Index i) const;

    Vector node(Index flat) const;
    std::vector<Index> unflatten(Index flat) const;
    Index flatten(const std::vector<Index>& multi) const;
    /// Flat index of the neighbour one step along `axis` (offset +-1), or -1
    /// when it falls outside the grid.
    Index neighbour(Index flat, Index axis, int offset) const;

    /// Nearest node (used for feedback policies).
    Index nearest(const Eigen::Ref<const Vector>& x) const;

    /// Multilinear interpolation of nodal values; outside the box the
    /// boundary cell's multilinear form is extended (linear extrapolation).
    Scalar interpolate(const Eigen::Ref<const Vector>& values, const Eigen::Ref<const Vector>& x) const;

    /// The 2^n (node, weight) pairs of the multilinear stencil at x. Weights
    /// sum to one; they are negative only when x lies outside the box.
    struct Stencil {
        std::vector<Index> nodes;
        std::vector<Scalar> weights;
    };
    Stencil stencil(const Eigen::Ref<const Vector>& x) const;

    /// Trapezoid quadrature weights of the node set (product rule).
    Vector quadrature_weights() const;

    /// Same box, 2p - 1 points per axis.
    SpaceGrid refined() const;

    bool contains(const Eigen::Ref<const Vector>& x) const;

private:
    Vector lower_;
    Vector upper_;
    std::vector<Index> points_;
    std::vector<Index> strides_;
    Index size_ = 0;
};

/// Finite set of control points in R^k; the max over this set stands in for
/// the supremum over a compact control domain.
class ControlSet {
public:
    explicit ControlSet(std::vector<Vector> points);
    static ControlSet scalars(const std::vector<Scalar>& values);

    Index size() const { return static_cast<Index>(points_.size()); }
    Index dim() const { return points_.front().size(); }
    const Vector& operator[](Index i) const { return points_[static_cast<std::size_t>(i)]; }
    const std::vector<Vector>& points() const { return points_; }
    bool valid_index(Index i) const { return i >= 0 && i < size(); }

private:
    std::vector<Vector> points_;
};

} // namespace bdsoc
