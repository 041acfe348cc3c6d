#pragma once

#include "bdsoc/core.hpp"
#include "bdsoc/grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bdsoc {

/// Basis used to realise conditional expectations given X_i (with the
/// backward path fixed) as least-squares projections across paths.
struct RegressionBasis {
    enum class Kind { polynomial, piecewise_constant, piecewise_linear };

    Kind kind = Kind::polynomial;
    Index degree = 2;             ///< total degree of the global polynomials
    std::optional<SpaceGrid> grid; ///< cells/nodes for the piecewise kinds
    Index fallback_cells = 64;     ///< cells per axis (n = 1) of the rank-deficiency fallback
    Scalar max_condition = 1e12;

    static RegressionBasis polynomial(Index degree = 2);
    static RegressionBasis piecewise_constant(SpaceGrid grid);
    static RegressionBasis piecewise_linear(SpaceGrid grid);
    std::string describe() const;
};

/// A fitted projection: evaluates the estimated conditional expectation of
/// each target column at arbitrary states.
class Regression {
public:
    /// states: M x n, targets: M x q. Rank-deficient polynomial designs fall
    /// back to piecewise constants over the sample range and append a warning.
    /// If every state coincides the projection is the column mean.
    static Regression fit(const RegressionBasis& basis, const Matrix& states, const Matrix& targets,
                          std::vector<std::string>* warnings = nullptr);

    Matrix evaluate(const Matrix& states) const;
    Vector evaluate_at(const Vector& x) const;
    const Matrix& fitted() const { return fitted_; }
    RegressionBasis::Kind kind() const { return kind_; }
    bool degenerate() const { return degenerate_; }

private:
    Matrix design(const Matrix& states) const;

    RegressionBasis::Kind kind_ = RegressionBasis::Kind::polynomial;
    bool degenerate_ = false;
    Index degree_ = 0;
    std::vector<std::vector<Index>> exponents_;
    Vector shift_, scale_;
    std::optional<SpaceGrid> grid_;
    Matrix coef_;     ///< basis size x q
    Vector fallback_; ///< q, used for empty cells
    Matrix fitted_;
};

} // namespace bdsoc
