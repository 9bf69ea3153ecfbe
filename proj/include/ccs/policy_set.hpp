#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ccs/model.hpp"
#include "ccs/smolyak.hpp"

namespace ccs {

// Fitted equilibrium functions for one (t, z). Indexed by agent class;
// savings only for trading classes.
struct PolicySlice {
    std::vector<Interpolant> value;
    std::vector<Interpolant> consumption;
    std::vector<Interpolant> savings;
    Interpolant abatement;
};

struct PeriodReport {
    int t = 0;
    double euler_at_nodes = 0.0;     // max |1 - beta E[R' u'(c')] / u'(c)| at grid nodes
    double euler_off_grid = 0.0;     // same at random interior points, interpolated policies
    double gradient_gap = 0.0;       // max relative gap, analytic vs finite-difference value gradient
    double max_abatement = 0.0;
    std::size_t nodes = 0;
};

struct SolveReport {
    std::vector<PeriodReport> periods;
    int passes = 0;
    double seconds = 0.0;
    long extrapolations = 0;

    double max_euler() const;
};

struct ValuePolicySet {
    Model model;
    Regime regime;
    std::vector<GridSpec> grids;                   // per period
    std::vector<std::vector<PolicySlice>> slices;  // [t][z]
    SolveReport report;

    int horizon() const { return model.horizon(); }
    int num_shocks() const { return model.num_shocks(); }
};

void write_policy_set(std::ostream& os, const ValuePolicySet& set);
ValuePolicySet read_policy_set(std::istream& is);

void save_policy_set(const std::string& path, const ValuePolicySet& set);
ValuePolicySet load_policy_set(const std::string& path);

} // namespace ccs
