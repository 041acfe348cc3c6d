#include "bdsoc/quadrature.hpp"

namespace bdsoc {

TensorRule gauss_hermite_tensor(Index nodes_per_axis, Index dim) {
    require(dim >= 1, "gauss_hermite_tensor: dimension must be positive");
    const auto rule = gauss_hermite<Scalar>(nodes_per_axis);
    Index count = 1;
    for (Index a = 0; a < dim; ++a) count *= nodes_per_axis;
    TensorRule out{Matrix(dim, count), Vector(count)};
    for (Index c = 0; c < count; ++c) {
        Index rest = c;
        Scalar w = 1.0;
        for (Index a = 0; a < dim; ++a) {
            const Index k = rest % nodes_per_axis;
            rest /= nodes_per_axis;
            out.nodes(a, c) = rule.nodes[k];
            w *= rule.weights[k];
        }
        out.weights[c] = w;
    }
    return out;
}

} // namespace bdsoc
