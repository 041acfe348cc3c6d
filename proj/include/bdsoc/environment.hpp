#pragma once

#include "bdsoc/core.hpp"
#include "bdsoc/grid.hpp"

namespace bdsoc {

/// Seeded driving noise: M forward Brownian paths and one shared backward
/// driver path on a common time grid. Path p's increments depend only on
/// (master_seed, p), never on the number of paths or on the worker count.
///
/// Refinement draws fresh noise; there is no Brownian-bridge coupling between
/// an N-step and a 2N-step environment with the same seeds.
class BrownianEnvironment {
public:
    BrownianEnvironment(TimeGrid grid, RowMatrix w_increments, Matrix b_increments, Index forward_dim,
                        Seed master_seed, Seed b_seed);

    const TimeGrid& grid() const { return grid_; }
    Index paths() const { return w_.rows(); }
    Index forward_dim() const { return forward_dim_; }
    Index backward_dim() const { return b_.cols(); }
    Seed master_seed() const { return master_seed_; }
    Seed b_seed() const { return b_seed_; }

    /// Delta W_i of path p (length d).
    auto dw(Index p, Index i) const { return w_.row(p).segment(i * forward_dim_, forward_dim_).transpose(); }
    /// Delta B_i of the shared backward path (length l).
    auto db(Index i) const { return b_.row(i).transpose(); }

    const RowMatrix& w_increments() const { return w_; }
    const Matrix& b_increments() const { return b_; }

    /// B_{t_j} - B_{t_i} for i <= j.
    Vector b_increment_between(Index i, Index j) const;

private:
    TimeGrid grid_;
    RowMatrix w_;
    Matrix b_;
    Index forward_dim_;
    Seed master_seed_;
    Seed b_seed_;
};

/// Deterministic 64-bit mixing used to derive per-path seeds.
Seed mix_seed(Seed a, Seed b);

BrownianEnvironment build_environment(const TimeGrid& grid, Index m_paths, Index forward_dim, Index backward_dim,
                                      Seed master_seed, Seed b_seed);

/// Standard Brownian increments of one path on the grid, generated from the
/// stream (master_seed, p). Exposed so tests can check independence from M.
Matrix path_increments(const TimeGrid& grid, Index forward_dim, Seed master_seed, Index p);

} // namespace bdsoc
