#pragma once

#include <cstdint>
#include <vector>

#include "ccs/node.hpp"
#include "ccs/oracle.hpp"
#include "ccs/policy_set.hpp"
#include "ccs/solve.hpp"

namespace ccs {

// solve_regime against brute_force_tree at every date event of a short horizon.
struct OracleCheck {
    Policy policy = Policy::OT;
    double mu_gap = 0.0;           // max |mu_solver - mu_oracle|
    double consumption_gap = 0.0;  // max |c_solver - c_oracle|
    double oracle_residual = 0.0;
    double euler = 0.0;            // solver's Euler report
    double seconds = 0.0;
};
OracleCheck compare_with_oracle(const Calibration& cal, Policy policy, int level, int z0 = 0);

// d Q_h / d mu at the solved abatement with the cost shares and every agent's
// savings held fixed, relative to u'(c_h) Y. Zero when all agents agree on mu.
std::vector<double> unanimity_gaps(const Model& model, const NodeSolution& sol, const Continuation& next);

// Theorem 1 at nodes reached along random paths of the fitted policies.
struct TheoremOneCheck {
    int nodes = 0;
    double worst_gain = 0.0;     // min over nodes and agents of Q(mu*, theta*) - Q(0, 0)
    bool strict = false;         // some agent strictly gains somewhere
    double transfer_sum = 0.0;   // max |sum_h theta_h| relative to output
    double unanimity = 0.0;      // max unanimity gap
};
TheoremOneCheck theorem_one_suite(const ValuePolicySet& ot, int samples, std::uint64_t seed);

} // namespace ccs
