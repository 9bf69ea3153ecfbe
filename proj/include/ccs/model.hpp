#pragma once

#include <span>
#include <string>
#include <vector>

#include "ccs/economy.hpp"

namespace ccs {

// OT: constrained optimal abatement with linear cost shares and factor-income compensation.
// NT: constrained efficient abatement without transfers.
// CM: complete-markets planner (representative household).
// LF: laissez-faire, no abatement.
enum class Policy { OT, NT, CM, LF };

std::string to_string(Policy p);
Policy policy_from_string(const std::string& s);

struct Regime {
    Policy policy = Policy::OT;
    int delay = 0;  // abatement forced to zero for t < delay

    bool abates(int t) const { return policy != Policy::LF && t >= delay; }
    bool transfers(int t) const { return policy == Policy::OT && t >= delay; }
    std::string tag() const;

    bool operator==(const Regime&) const = default;
};

// Agents with identical profiles who start with identical holdings behave
// identically and are merged into one class.
struct AgentClass {
    AgentProfile profile;
    int count = 1;
    std::vector<int> members;  // agent indices in the calibration
    double initial_holding = 0.0;  // per member
};

// Per-node quantities that depend only on the beginning-of-period state.
struct NodeContext {
    int t = 0;
    int z = 0;
    double temperature = 0.0;
    double labor = 0.0;
    double capital = 0.0;
    double output = 0.0;            // potential output Y
    double mpk = 0.0;               // marginal products before abatement
    double mpl = 0.0;
    double intensity = 0.0;
    ClimateState climate;
    std::vector<double> holdings;   // per class, per member
    std::vector<double> damage;     // per class
    std::vector<double> eff_labor;  // per class, per member
};

// The economy as the solver sees it. State vector layout:
// [holding of each trading class..., S1, S2].
class Model {
public:
    Model() = default;
    Model(Calibration cal, Policy policy);

    const Calibration& cal() const { return cal_; }
    bool representative() const { return representative_; }
    const std::vector<AgentClass>& classes() const { return classes_; }
    int num_classes() const { return static_cast<int>(classes_.size()); }
    const std::vector<int>& traders() const { return traders_; }  // class indices
    int num_traders() const { return static_cast<int>(traders_.size()); }
    int state_dimension() const { return num_traders() + 2; }
    int num_agents() const { return static_cast<int>(cal_.agents.size()); }
    int num_shocks() const { return cal_.ecs.size(); }
    int horizon() const { return cal_.horizon; }

    // Class index of trader slot i, and trader slot of class c (-1 if hand-to-mouth).
    int trader_class(int i) const { return traders_[i]; }
    int trader_slot(int c) const { return slot_[c]; }

    std::vector<double> initial_state() const;

    NodeContext context(int t, int z, std::span<const double> state) const;

    // Aggregate effective labor at a temperature.
    double labor_at(double temperature) const;

private:
    Calibration cal_;
    bool representative_ = false;
    std::vector<AgentClass> classes_;
    std::vector<int> traders_;
    std::vector<int> slot_;
};

} // namespace ccs
