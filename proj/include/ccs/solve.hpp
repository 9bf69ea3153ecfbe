#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ccs/node.hpp"
#include "ccs/policy_set.hpp"

namespace ccs {

struct SolveOptions {
    int level = 3;
    std::vector<int> levels;          // per-dimension override of `level`
    bool adaptive_bounds = true;      // re-solve on bounds taken from simulated paths
    int bound_paths = 200;            // random shock paths used to size the bounds
    int off_grid_points = 60;         // random points per period for the Euler check
    std::uint64_t seed = 20240601;
    std::vector<GridSpec> fixed_grids;  // one per period 0..T; disables adaptation
    SolverOptions node;
    std::function<void(const std::string&)> log;
};

// Worker threads: CCS_THREADS if set, else the OpenMP default.
int solver_threads();

// Equilibrium functions of period t + 1 as seen from period t.
std::unique_ptr<Continuation> continuation_after(const ValuePolicySet& set, int t);

// Period-T slices fitted on `spec`: consume everything, no abatement.
std::vector<PolicySlice> solve_terminal(const Model& model, const GridSpec& spec);

// Generous first-pass bounds for every period 0..T.
std::vector<GridSpec> initial_bounds(const Model& model, const std::vector<int>& levels);

// Bounds covering 1.5 times the envelope of states visited along simulated paths.
std::vector<GridSpec> simulated_bounds(const ValuePolicySet& set, const std::vector<int>& levels,
                                       int paths, std::uint64_t seed);

// Backward induction on set.grids (periods 0..T), replacing set.slices.
void solve_on_grids(ValuePolicySet& set, const SolveOptions& opt);

ValuePolicySet solve_regime(const Model& model, const Regime& regime, const SolveOptions& opt = {});

// Next-period state from the fitted policies at (t, z, x), without a node solve.
std::vector<double> interpolated_next_state(const ValuePolicySet& set, int t, int z,
                                           std::span<const double> x);

// Euler error max_h |1 - beta E[R' u'(c')] / u'(c)| of the interpolated policies at (t, z, x).
double interpolated_euler_error(const ValuePolicySet& set, int t, int z, std::span<const double> x);

} // namespace ccs
