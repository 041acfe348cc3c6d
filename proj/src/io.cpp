#include "bdsoc/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace bdsoc {

namespace {

std::string header(const std::string& model, Seed master, Seed b_seed) {
    std::ostringstream os;
    os << "# model=" << model << "\n# master_seed=" << master << "\n# b_seed=" << b_seed << "\n";
    return os.str();
}

} // namespace

std::string format_scalar(Scalar v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string ensemble_csv(const PathEnsemble& e) {
    std::ostringstream os;
    os << header(e.model_name, e.master_seed, e.b_seed) << "# policy=" << e.policy_tag << "\n# start_index=" << e.start_index
       << "\npath,step";
    for (Index c = 0; c < e.state_dim; ++c) os << ",x" << c;
    os << "\n" << std::setprecision(17);
    for (Index p = 0; p < e.paths(); ++p)
        for (Index k = 0; k <= e.steps(); ++k) {
            os << p << ',' << e.start_index + k;
            for (Index c = 0; c < e.state_dim; ++c) os << ',' << e.values(p, k * e.state_dim + c);
            os << '\n';
        }
    return os.str();
}

std::string solution_csv(const BdsdeSolution& s, const std::string& model_name) {
    std::ostringstream os;
    os << header(model_name, s.master_seed, s.b_seed) << "# penalty_level=" << format_scalar(s.penalty_level)
       << "\npath,step,y";
    for (Index c = 0; c < s.forward_dim; ++c) os << ",z" << c;
    os << ",k\n" << std::setprecision(17);
    for (Index p = 0; p < s.paths(); ++p)
        for (Index k = 0; k <= s.steps(); ++k) {
            os << p << ',' << s.start_index + k << ',' << s.y(p, k);
            for (Index c = 0; c < s.forward_dim; ++c) {
                os << ',';
                if (k < s.steps()) os << s.z(p, k * s.forward_dim + c);
            }
            os << ',' << s.k(p, k) << '\n';
        }
    return os.str();
}

std::string value_field_csv(const ValueField& f, const std::string& model_name) {
    std::ostringstream os;
    os << header(model_name, f.master_seed, f.b_seed) << "# backend=" << to_string(f.backend) << "\nt_index";
    for (Index a = 0; a < f.space.dim(); ++a) os << ",x" << a;
    os << ",u,argmax,se\n" << std::setprecision(17);
    for (Index i = 0; i <= f.steps(); ++i)
        for (Index j = 0; j < f.space.size(); ++j) {
            os << i;
            const Vector x = f.space.node(j);
            for (Index a = 0; a < x.size(); ++a) os << ',' << x[a];
            os << ',' << f.values(i, j) << ',' << f.argmax(i, j) << ',' << f.standard_error(i, j) << '\n';
        }
    return os.str();
}

std::string weak_report_csv(const WeakFormReport& r, const std::string& model_name, Seed master, Seed b_seed) {
    std::ostringstream os;
    os << header(model_name, master, b_seed) << "# epsilon=" << format_scalar(r.epsilon)
       << "\n# tolerance=" << format_scalar(r.tolerance)
       << "\ninequality,test,control,lhs,rhs,margin,rhs_variant,margin_variant,rhs_strong\n" << std::setprecision(17);
    auto rows = [&os](const char* tag, const std::vector<WeakEntry>& entries) {
        for (const auto& e : entries)
            os << tag << ',' << e.test << ',' << e.control << ',' << e.lhs << ',' << e.rhs << ',' << e.margin << ','
               << e.rhs_variant << ',' << e.margin_variant << ',' << e.rhs_strong << '\n';
    };
    rows("supersolution", r.supersolution);
    rows("attainment", r.attainment);
    return os.str();
}

std::string dpp_csv(const DppReport& r, const std::string& model_name, Seed master, Seed b_seed) {
    std::ostringstream os;
    os << header(model_name, master, b_seed) << "# one_step_error=" << format_scalar(r.one_step_error) << "\nt_index";
    const Index n = r.entries.empty() ? 1 : r.entries.front().x.size();
    for (Index a = 0; a < n; ++a) os << ",x" << a;
    os << ",delta_steps,field,semigroup,best_control,se,residual,tolerance,pass\n" << std::setprecision(17);
    for (const auto& e : r.entries) {
        os << e.t_index;
        for (Index a = 0; a < e.x.size(); ++a) os << ',' << e.x[a];
        os << ',' << e.delta_steps << ',' << e.field_value << ',' << e.semigroup_value << ',' << e.best_control << ','
           << e.standard_error << ',' << e.residual << ',' << e.tolerance << ',' << (e.pass ? 1 : 0) << '\n';
    }
    return os.str();
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path + "'");
    out << content;
    if (!out) throw Error("failed writing '" + path + "'");
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace bdsoc
