#pragma once

#include "bdsoc/core.hpp"
#include "bdsoc/grid.hpp"
#include "bdsoc/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace bdsoc {

/// A built-in model with its control set, default start point and default
/// value-function grid.
struct RegistryModel {
    CoefficientSet model;
    ControlSet controls = ControlSet::scalars({0.0});
    Vector start;
    SpaceGrid space = SpaceGrid::line(-3.0, 3.0, 121);
    std::map<std::string, Scalar> parameters; ///< effective numeric parameters
    bool deterministic = false;               ///< sigma = 0 and g = 0
};

/// zero, linear-bdsde, martingale, transport-control, controlled-drift-lq,
/// degenerate-sigma.
std::vector<std::string> registry_names();

/// Builds a registry model, applying numeric overrides of its parameters.
/// Unknown names or parameter keys raise Error listing the valid ones.
RegistryModel make_registry_model(const std::string& name, const std::map<std::string, Scalar>& overrides = {});

} // namespace bdsoc
