#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ccs/node.hpp"
#include "ccs/policy_set.hpp"

namespace ccs {

// One period of a simulated path. Per-agent vectors follow the calibration's agents.
struct PanelRow {
    int t = 0;
    int z = 0;
    double temperature = 0.0;
    double abatement_pct = 0.0;
    double tax = 0.0;
    double emissions = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    double capital = 0.0;
    double output = 0.0;        // potential output
    double net_output = 0.0;    // after abatement cost
    double abatement_cost = 0.0;
    double gross_return = 0.0;
    double wage = 0.0;
    std::vector<double> consumption;
    std::vector<double> savings;
    std::vector<double> transfers;
    std::vector<double> shares;
    std::vector<double> damage;
};

struct SimulationPanel {
    Regime regime;
    std::vector<int> shocks;
    std::vector<PanelRow> rows;
    int extrapolated_steps = 0;   // periods whose state left the fitted box
    double max_excursion = 0.0;   // worst distance outside the box, relative to its width
};

// Shock path of `length` periods drawn from the ECS chain.
std::vector<int> random_shock_path(const Calibration& cal, int length, std::uint64_t seed);

// Follows the equilibrium from the initial state along `shocks` (length <= horizon + 1),
// re-solving every node against the fitted next-period functions. Throws if the
// state leaves a period's box by more than 10 percent of its width.
SimulationPanel simulate(const ValuePolicySet& set, std::span<const int> shocks,
                         const SolverOptions& opt = {});

// Expected lifetime utility E sum beta^t c^(1-sigma) / (1-sigma) per agent of the
// calibration (one entry for the complete-markets planner), over z_0 drawn from the
// initial distribution, from node values at t = 0.
std::vector<double> expected_utility(const ValuePolicySet& set, const SolverOptions& opt = {});

// Same expectation by forward recursion over every shock history. Cost grows as
// Z^T; meant for small trees.
std::vector<double> expected_utility_tree(const ValuePolicySet& set, const SolverOptions& opt = {});

// Consumption-equivalent gains (fractions) of `alt` over `base`.
std::vector<double> welfare_ce(std::span<const double> base, std::span<const double> alt, double sigma);

// Complete markets give every agent a constant share of aggregate consumption.
// Shares that hold agent 0 at its `base` welfare and give all others the same
// gain; `aggregate` is the planner's expected utility.
struct CompleteMarketsComparison {
    std::vector<double> shares;
    double gain = 0.0;  // common gain of agents 1.. (fraction)
};
CompleteMarketsComparison complete_markets_gain(std::span<const double> base, double aggregate,
                                                double sigma);

// --- tables ------------------------------------------------------------------

// Table 1 date events: z_0 = 3, z_1 = 3, z_2 = 6 (1-based), then every z_3.
extern const std::vector<int> table_history;

struct AbatementRow {
    std::string label;
    std::vector<double> values;  // percent; table_history events then z_3 = 1..Z
};

struct CostShareRow {
    int z3 = 0;                  // 1-based
    double relative_cost = 0.0;  // abatement cost relative to z_3 = 1
    double temperature = 0.0;
    std::vector<int> shares;     // percent per agent, summing to 100
};

AbatementRow abatement_row(const ValuePolicySet& set, const std::string& label,
                           const SolverOptions& opt = {});
std::vector<CostShareRow> cost_share_rows(const ValuePolicySet& set, const SolverOptions& opt = {});

// Rounds percentages to integers summing to 100 (largest remainder).
std::vector<int> round_shares(std::span<const double> percent);

// Solved regimes keyed by name ("OT", "CM", "NT", "OT-IM", "OT-AC", "OT-d1", "OT-d2", "CM-d1").
using SolutionMap = std::map<std::string, const ValuePolicySet*>;

struct Tables {
    std::vector<AbatementRow> table1;   // CM, OT, NT
    std::vector<CostShareRow> table1b;  // OT
    std::vector<AbatementRow> table2;   // BM, IM, AC
    std::vector<AbatementRow> table3;   // 1 OT, 2 OT, 1 CM (from z_1 on)
};

// Builds every table whose regimes are present; throws if a requested one is missing.
Tables make_tables(const SolutionMap& solutions, bool require_all, const SolverOptions& opt = {});

void write_abatement_csv(std::ostream& os, const std::vector<AbatementRow>& rows, int first_event = 0);
void write_cost_share_csv(std::ostream& os, const std::vector<CostShareRow>& rows);
void write_panel_csv(std::ostream& os, const SimulationPanel& panel);

} // namespace ccs
