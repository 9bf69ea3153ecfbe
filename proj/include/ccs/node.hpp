#pragma once

#include <span>
#include <vector>

#include "ccs/model.hpp"
#include "ccs/policy_set.hpp"

namespace ccs {

// Next-period equilibrium objects at one shock, per agent class.
struct NextPoint {
    std::vector<double> value;
    std::vector<double> dvalue_ds1;
    std::vector<double> dvalue_ds2;
    std::vector<double> consumption;
    double abatement = 0.0;
};

// Equilibrium functions of period t + 1, evaluated at a next-period state for every shock.
class Continuation {
public:
    virtual ~Continuation() = default;
    virtual void evaluate(std::span<const double> state, std::vector<NextPoint>& out) const = 0;
    // Box on which the functions were fitted, if any.
    virtual const GridSpec* domain() const { return nullptr; }
};

// Final period: agents consume everything, no abatement, no transfers.
class TerminalContinuation final : public Continuation {
public:
    explicit TerminalContinuation(const Model& model) : model_(model) {}
    void evaluate(std::span<const double> state, std::vector<NextPoint>& out) const override;

private:
    const Model& model_;
};

// Interpolated value and policy functions of one period.
class SliceContinuation final : public Continuation {
public:
    SliceContinuation(const Model& model, const std::vector<PolicySlice>& slices);
    void evaluate(std::span<const double> state, std::vector<NextPoint>& out) const override;
    const GridSpec* domain() const override;

private:
    const Model& model_;
    const std::vector<PolicySlice>& slices_;
};

struct SolverOptions {
    double newton_step_tol = 1e-10;
    double foc_tol = 1e-10;
    int max_newton = 60;
    int scan_points = 32;       // sign scan of the abatement condition on [0, 1]
    bool sign_scan = true;
};

struct NodeSolution {
    int t = 0;
    int z = 0;
    double mu = 0.0;
    double tax = 0.0;
    double temperature = 0.0;
    double capital = 0.0;
    double labor = 0.0;
    double output = 0.0;             // potential output
    double net_output = 0.0;         // A(mu) Y
    double abatement_cost = 0.0;     // (1 - A(mu)) Y
    double emissions = 0.0;
    Prices prices;                   // post-abatement market prices
    ClimateState climate;
    ClimateState next_climate;
    // Per agent class (per member):
    std::vector<double> holdings;
    std::vector<double> savings;
    std::vector<double> consumption;
    std::vector<double> transfers;         // net tax paid
    std::vector<double> shares;            // share of abatement cost
    std::vector<double> marginal_benefit;  // future marginal benefit of abatement, utils
    std::vector<double> value;
    std::vector<double> damage;
    std::vector<double> euler_residual;    // zero for hand-to-mouth classes
    std::vector<double> next_state;        // state vector of the next period
};

// Equilibrium at one node given the next period's equilibrium functions.
// `next` may be null only at the final period. `guess` holds savings per trading class.
NodeSolution node_equilibrium(const Model& model, const Regime& regime, int t, int z,
                              std::span<const double> state, const Continuation* next,
                              const SolverOptions& opt = {},
                              std::span<const double> guess = {});

// Same node with abatement fixed at `mu`: savings solve the Euler equations,
// transfers follow the regime's rule at that abatement level.
NodeSolution node_at_abatement(const Model& model, const Regime& regime, int t, int z,
                               std::span<const double> state, const Continuation& next, double mu,
                               const SolverOptions& opt = {}, std::span<const double> guess = {});

// Period-T allocation (consume everything).
NodeSolution terminal_node(const Model& model, int t, int z, std::span<const double> state);

// Marginal future benefit of abatement for every class, given savings and mu:
// beta E[dV/dS1' dS1'/dmu + dV/dS2' dS2'/dmu].
std::vector<double> marginal_q(const Model& model, int t, int z, std::span<const double> state,
                               double mu, std::span<const double> savings, const Continuation& next);

// Cost shares c_h = x_h - s_h * cost with s_h proportional to count-weighted
// q_h / u'(c_h). Returns false if no positive-consumption solution exists.
bool solve_cost_shares(std::span<const double> resources, std::span<const double> q,
                       std::span<const int> counts, double cost, double sigma,
                       std::span<double> consumption, std::span<double> shares);

} // namespace ccs
