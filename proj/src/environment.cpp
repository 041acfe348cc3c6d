#include "bdsoc/environment.hpp"
#include "bdsoc/parallel.hpp"

#include <cmath>
#include <random>

namespace bdsoc {

namespace {

Seed splitmix64(Seed x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr Seed kBackwardStream = 0xB0B0B0B0ULL;

} // namespace

Seed mix_seed(Seed a, Seed b) { return splitmix64(splitmix64(a) ^ (b + 0x632BE59BD9B4E019ULL)); }

BrownianEnvironment::BrownianEnvironment(TimeGrid grid, RowMatrix w_increments, Matrix b_increments,
                                         Index forward_dim, Seed master_seed, Seed b_seed)
    : grid_(grid), w_(std::move(w_increments)), b_(std::move(b_increments)), forward_dim_(forward_dim),
      master_seed_(master_seed), b_seed_(b_seed) {
    require(w_.rows() >= 1, "BrownianEnvironment: at least one path is required");
    require(w_.cols() == grid_.steps() * forward_dim_, "BrownianEnvironment: forward increment shape mismatch");
    require(b_.rows() == grid_.steps() && b_.cols() >= 1, "BrownianEnvironment: backward increment shape mismatch");
}

Vector BrownianEnvironment::b_increment_between(Index i, Index j) const {
    require(0 <= i && i <= j && j <= grid_.steps(), "b_increment_between: bad index range");
    Vector acc = Vector::Zero(backward_dim());
    for (Index k = i; k < j; ++k) acc += db(k);
    return acc;
}

Matrix path_increments(const TimeGrid& grid, Index forward_dim, Seed master_seed, Index p) {
    std::mt19937_64 rng(mix_seed(master_seed, static_cast<Seed>(p)));
    std::normal_distribution<Scalar> gauss(0.0, 1.0);
    const Scalar scale = std::sqrt(grid.step());
    Matrix out(grid.steps(), forward_dim);
    for (Index i = 0; i < grid.steps(); ++i)
        for (Index k = 0; k < forward_dim; ++k) out(i, k) = scale * gauss(rng);
    return out;
}

BrownianEnvironment build_environment(const TimeGrid& grid, Index m_paths, Index forward_dim, Index backward_dim,
                                      Seed master_seed, Seed b_seed) {
    require(m_paths >= 1, "build_environment: at least one path is required");
    require(forward_dim >= 1 && backward_dim >= 1, "build_environment: noise dimensions must be positive");
    const Index n = grid.steps();
    RowMatrix w(m_paths, n * forward_dim);
    parallel::parallel_for(static_cast<std::size_t>(m_paths), [&](std::size_t p) {
        const Matrix inc = path_increments(grid, forward_dim, master_seed, static_cast<Index>(p));
        for (Index i = 0; i < n; ++i)
            for (Index k = 0; k < forward_dim; ++k) w(Index(p), i * forward_dim + k) = inc(i, k);
    });

    std::mt19937_64 rng(mix_seed(b_seed, kBackwardStream));
    std::normal_distribution<Scalar> gauss(0.0, 1.0);
    const Scalar scale = std::sqrt(grid.step());
    Matrix b(n, backward_dim);
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < backward_dim; ++k) b(i, k) = scale * gauss(rng);
    return BrownianEnvironment(grid, std::move(w), std::move(b), forward_dim, master_seed, b_seed);
}

} // namespace bdsoc
