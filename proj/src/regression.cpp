#include "bdsoc/regression.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bdsoc {

RegressionBasis RegressionBasis::polynomial(Index degree) {
    require(degree >= 0, "RegressionBasis: negative degree");
    RegressionBasis b;
    b.kind = Kind::polynomial;
    b.degree = degree;
    return b;
}

RegressionBasis RegressionBasis::piecewise_constant(SpaceGrid grid) {
    RegressionBasis b;
    b.kind = Kind::piecewise_constant;
    b.grid = std::move(grid);
    return b;
}

RegressionBasis RegressionBasis::piecewise_linear(SpaceGrid grid) {
    RegressionBasis b;
    b.kind = Kind::piecewise_linear;
    b.grid = std::move(grid);
    return b;
}

std::string RegressionBasis::describe() const {
    std::ostringstream os;
    switch (kind) {
    case Kind::polynomial: os << "polynomial(degree=" << degree << ")"; break;
    case Kind::piecewise_constant: os << "piecewise-constant(" << (grid ? grid->size() : 0) << " nodes)"; break;
    case Kind::piecewise_linear: os << "piecewise-linear(" << (grid ? grid->size() : 0) << " nodes)"; break;
    }
    return os.str();
}

namespace {

void total_degree_exponents(Index dim, Index degree, std::vector<Index>& current, Index axis,
                            std::vector<std::vector<Index>>& out) {
    if (axis == dim) {
        out.push_back(current);
        return;
    }
    Index used = 0;
    for (Index a = 0; a < axis; ++a) used += current[std::size_t(a)];
    for (Index e = 0; e + used <= degree; ++e) {
        current[std::size_t(axis)] = e;
        total_degree_exponents(dim, degree, current, axis + 1, out);
    }
    current[std::size_t(axis)] = 0;
}

// Index of the cell (nearest lower node) containing x, clamped to the box.
Index cell_of(const SpaceGrid& g, const Eigen::Ref<const Vector>& x) {
    std::vector<Index> multi(static_cast<std::size_t>(g.dim()));
    for (Index a = 0; a < g.dim(); ++a) {
        const Scalar s = (x[a] - g.lower()[a]) / g.spacing(a);
        multi[std::size_t(a)] = std::clamp<Index>(static_cast<Index>(std::floor(s)), 0, g.points(a) - 2);
    }
    return g.flatten(multi);
}

// Multilinear stencil written into caller-provided arrays of length 2^n
// (same nodes and weights as SpaceGrid::stencil, without allocation).
template <typename Row>
void hat_stencil(const SpaceGrid& g, const Row& x, Index* nodes, Scalar* weights) {
    const Index n = g.dim();
    Index base = 0;
    Index stride = 1;
    Scalar frac[8];
    Index strides[8];
    for (Index a = 0; a < n; ++a) {
        const Scalar s = (x[a] - g.lower()[a]) / g.spacing(a);
        const Index i = std::clamp<Index>(static_cast<Index>(std::floor(s)), 0, g.points(a) - 2);
        frac[a] = s - static_cast<Scalar>(i);
        strides[a] = stride;
        base += i * stride;
        stride *= g.points(a);
    }
    for (Index c = 0; c < (Index(1) << n); ++c) {
        Index flat = base;
        Scalar w = 1.0;
        for (Index a = 0; a < n; ++a) {
            const bool up = (c >> a) & 1;
            w *= up ? frac[a] : (1.0 - frac[a]);
            flat += up ? strides[a] : 0;
        }
        nodes[c] = flat;
        weights[c] = w;
    }
}

} // namespace

Regression Regression::fit(const RegressionBasis& basis, const Matrix& states, const Matrix& targets,
                           std::vector<std::string>* warnings) {
    require(states.rows() == targets.rows(), "Regression: states and targets disagree on sample count");
    require(states.rows() >= 1, "Regression: empty sample");
    require(targets.allFinite(), "Regression: non-finite regression target");
    const Index m = states.rows();
    const Index n = states.cols();
    const Index q = targets.cols();

    Regression r;
    r.fallback_ = targets.colwise().mean().transpose();

    const Vector lo = states.colwise().minCoeff().transpose();
    const Vector hi = states.colwise().maxCoeff().transpose();
    const Scalar spread = (hi - lo).cwiseAbs().maxCoeff();
    if (spread <= 1e-12 * (1.0 + lo.cwiseAbs().maxCoeff())) {
        r.degenerate_ = true;
        r.kind_ = RegressionBasis::Kind::piecewise_constant;
        r.fitted_ = r.fallback_.transpose().replicate(m, 1);
        return r;
    }

    RegressionBasis::Kind kind = basis.kind;
    if (kind == RegressionBasis::Kind::polynomial) {
        r.kind_ = kind;
        r.degree_ = basis.degree;
        std::vector<Index> cur(static_cast<std::size_t>(n), 0);
        total_degree_exponents(n, basis.degree, cur, 0, r.exponents_);
        r.shift_ = states.colwise().mean().transpose();
        r.scale_.resize(n);
        for (Index a = 0; a < n; ++a) {
            const Scalar sd = std::sqrt((states.col(a).array() - r.shift_[a]).square().mean());
            r.scale_[a] = sd > 0.0 ? sd : 1.0;
        }
        const Matrix phi = r.design(states);
        Eigen::ColPivHouseholderQR<Matrix> qr(phi);
        const Index k = phi.cols();
        bool ok = qr.rank() == k && m >= k;
        if (ok) {
            const auto diag = qr.matrixR().diagonal().cwiseAbs();
            ok = diag.minCoeff() > 0.0 && diag.maxCoeff() / diag.minCoeff() <= std::sqrt(basis.max_condition);
        }
        if (ok) {
            r.coef_ = qr.solve(targets);
            r.fitted_ = phi * r.coef_;
            return r;
        }
        if (warnings) warnings->push_back("rank-deficient polynomial regression; fell back to piecewise constants");
        kind = RegressionBasis::Kind::piecewise_constant;
        const Index cells = n == 1 ? basis.fallback_cells
                                   : std::max<Index>(2, static_cast<Index>(std::pow(Scalar(basis.fallback_cells), 1.0 / Scalar(n))));
        r.grid_ = SpaceGrid(lo, Vector(hi.cwiseMax((lo.array() + 1e-12).matrix())), std::vector<Index>(std::size_t(n), cells + 1));
    } else {
        require(basis.grid.has_value(), "Regression: piecewise bases need a grid");
        require(basis.grid->dim() == n, "Regression: grid dimension differs from state dimension");
        require(n <= 3, "Regression: piecewise bases support at most three dimensions");
        r.grid_ = basis.grid;
    }
    r.kind_ = kind;

    if (kind == RegressionBasis::Kind::piecewise_constant) {
        const SpaceGrid& g = *r.grid_;
        Matrix sums = Matrix::Zero(g.size(), q);
        Vector counts = Vector::Zero(g.size());
        std::vector<Index> cell(static_cast<std::size_t>(m));
        for (Index p = 0; p < m; ++p) {
            const Index c = cell_of(g, states.row(p).transpose());
            cell[std::size_t(p)] = c;
            sums.row(c) += targets.row(p);
            counts[c] += 1.0;
        }
        r.coef_.resize(g.size(), q);
        for (Index c = 0; c < g.size(); ++c)
            r.coef_.row(c) = counts[c] > 0 ? Eigen::RowVectorXd(sums.row(c) / counts[c]) : Eigen::RowVectorXd(r.fallback_.transpose());
        r.fitted_.resize(m, q);
        for (Index p = 0; p < m; ++p) r.fitted_.row(p) = r.coef_.row(cell[std::size_t(p)]);
        return r;
    }

    // piecewise-linear hat functions on the grid nodes
    const SpaceGrid& g = *r.grid_;
    const Index nb = g.size();
    const Index corners = Index(1) << n;
    std::vector<Index> nodes(static_cast<std::size_t>(m * corners));
    std::vector<Scalar> weights(static_cast<std::size_t>(m * corners));
    for (Index p = 0; p < m; ++p) hat_stencil(g, states.row(p), &nodes[std::size_t(p * corners)], &weights[std::size_t(p * corners)]);

    Matrix rhs = Matrix::Zero(nb, q);
    for (Index p = 0; p < m; ++p)
        for (Index a = 0; a < corners; ++a) {
            const std::size_t ia = std::size_t(p * corners + a);
            rhs.row(nodes[ia]) += weights[ia] * targets.row(p);
        }
    // small bases: dense normal equations; otherwise sparse
    if (nb <= 256) {
        Matrix gram = Matrix::Zero(nb, nb);
        for (Index p = 0; p < m; ++p)
            for (Index a = 0; a < corners; ++a)
                for (Index b = 0; b < corners; ++b) {
                    const std::size_t ia = std::size_t(p * corners + a), ib = std::size_t(p * corners + b);
                    gram(nodes[ia], nodes[ib]) += weights[ia] * weights[ib];
                }
        const Scalar ridge = 1e-10 * std::max(gram.diagonal().mean(), 1e-300);
        gram.diagonal().array() += ridge;
        Eigen::LDLT<Matrix> solver(gram);
        require(solver.info() == Eigen::Success, "Regression: hat-basis normal equations could not be factorised");
        r.coef_ = solver.solve(rhs);
    } else {
        std::vector<Eigen::Triplet<Scalar>> trip;
        trip.reserve(std::size_t(m * corners * corners));
        for (Index p = 0; p < m; ++p)
            for (Index a = 0; a < corners; ++a)
                for (Index b = 0; b < corners; ++b) {
                    const std::size_t ia = std::size_t(p * corners + a), ib = std::size_t(p * corners + b);
                    trip.emplace_back(nodes[ia], nodes[ib], weights[ia] * weights[ib]);
                }
        Eigen::SparseMatrix<Scalar> gram(nb, nb);
        gram.setFromTriplets(trip.begin(), trip.end());
        Scalar diag_mean = 0.0;
        for (Index j = 0; j < nb; ++j) diag_mean += gram.coeff(j, j);
        diag_mean /= static_cast<Scalar>(nb);
        const Scalar ridge = 1e-10 * std::max(diag_mean, 1e-300);
        for (Index j = 0; j < nb; ++j) gram.coeffRef(j, j) += ridge;
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> solver(gram);
        require(solver.info() == Eigen::Success, "Regression: hat-basis normal equations could not be factorised");
        r.coef_ = solver.solve(rhs);
    }
    r.fitted_ = Matrix::Zero(m, q);
    for (Index p = 0; p < m; ++p)
        for (Index a = 0; a < corners; ++a) {
            const std::size_t ia = std::size_t(p * corners + a);
            r.fitted_.row(p) += weights[ia] * r.coef_.row(nodes[ia]);
        }
    return r;
}

Matrix Regression::design(const Matrix& states) const {
    const Index m = states.rows();
    Matrix phi(m, static_cast<Index>(exponents_.size()));
    for (Index p = 0; p < m; ++p) {
        for (std::size_t k = 0; k < exponents_.size(); ++k) {
            Scalar v = 1.0;
            for (Index a = 0; a < states.cols(); ++a) {
                const Scalar u = (states(p, a) - shift_[a]) / scale_[a];
                for (Index e = 0; e < exponents_[k][std::size_t(a)]; ++e) v *= u;
            }
            phi(p, Index(k)) = v;
        }
    }
    return phi;
}

Matrix Regression::evaluate(const Matrix& states) const {
    const Index m = states.rows();
    const Index q = fallback_.size();
    if (degenerate_) return fallback_.transpose().replicate(m, 1);
    if (kind_ == RegressionBasis::Kind::polynomial) return design(states) * coef_;
    Matrix out(m, q);
    const SpaceGrid& g = *grid_;
    for (Index p = 0; p < m; ++p) {
        if (kind_ == RegressionBasis::Kind::piecewise_constant) {
            out.row(p) = coef_.row(cell_of(g, states.row(p).transpose()));
        } else {
            const auto st = g.stencil(states.row(p).transpose());
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(q);
            for (std::size_t a = 0; a < st.nodes.size(); ++a) acc += st.weights[a] * coef_.row(st.nodes[a]);
            out.row(p) = acc;
        }
    }
    return out;
}

Vector Regression::evaluate_at(const Vector& x) const {
    Matrix s(1, x.size());
    s.row(0) = x.transpose();
    return evaluate(s).row(0).transpose();
}

} // namespace bdsoc
