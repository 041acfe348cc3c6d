#pragma once

#include "bdsoc/bdsde.hpp"
#include "bdsoc/sde.hpp"
#include "bdsoc/value.hpp"
#include "bdsoc/weak.hpp"

#include <string>

namespace bdsoc {

// CSV writers. Every file starts with '#' comment lines carrying the model
// name and seeds, then a header row. Numbers use 17 significant digits so
// identical runs give byte-identical files.

std::string format_scalar(Scalar v);

/// path,step,x0,...
std::string ensemble_csv(const PathEnsemble& ensemble);
/// path,step,y,z0,...,k (z is empty on the terminal step)
std::string solution_csv(const BdsdeSolution& solution, const std::string& model_name);
/// t_index,x0,...,u,argmax,se
std::string value_field_csv(const ValueField& field, const std::string& model_name);
/// inequality,test,control,lhs,rhs,margin,rhs_variant,margin_variant,rhs_strong
std::string weak_report_csv(const WeakFormReport& report, const std::string& model_name, Seed master, Seed b_seed);
/// t_index,x0,...,delta_steps,field,semigroup,best_control,se,residual,tolerance,pass
std::string dpp_csv(const DppReport& report, const std::string& model_name, Seed master, Seed b_seed);

/// Writes `content` to `path`; throws Error if the file cannot be written.
void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

} // namespace bdsoc
