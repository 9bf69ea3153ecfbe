#pragma once

#include <string>
#include <vector>

#include "ccs/climate.hpp"

namespace ccs {

enum class MarketAccess { full, none };

struct AgentProfile {
    double labor_endowment = 0.0;   // efficiency units without climate change
    double damage_weight = 1.0;     // multiplier on zeta in the agent's damage function
    MarketAccess access = MarketAccess::full;

    bool trades() const { return access == MarketAccess::full; }
    bool operator==(const AgentProfile&) const = default;
};

struct Prices {
    double gross_return = 0.0;  // 1 + r
    double wage = 0.0;
};

enum class Variant { BM, AC, IM };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct Calibration {
    double alpha = 0.33;
    double delta_k = 0.57;
    double beta = 0.74;
    double sigma = 5.0;
    double phi1 = 0.25;
    double phi2 = 2.0;
    double zeta = 0.007;
    int horizon = 30;

    // e_t, emissions (GtC) per unit of potential output; length horizon + 1.
    std::vector<double> emission_intensity;

    CarbonParams carbon;
    EcsProcess ecs;
    std::vector<AgentProfile> agents;

    ClimateState initial_climate{118.0, 684.0};

    // Split of initial aggregate capital across trading agents, one entry per
    // agent (zero for hand-to-mouth agents). Empty means proportional to labor.
    std::vector<double> initial_wealth_share;

    void validate() const;

    // K* solving beta (alpha K^(alpha-1) + 1 - delta_k) = 1 with unit labor.
    double steady_state_capital() const;
    double steady_state_output() const;

    // Initial capital holdings per agent.
    std::vector<double> initial_holdings() const;

    double emission_intensity_at(int t) const;
};

// Benchmark parameters for a calibration variant. The emission series is
// supplied separately (see load_emissions).
Calibration make_calibration(Variant v, std::vector<double> emission_intensity);

// One trading agent with unit labor and unit damage weight: the complete-markets
// representative household.
Calibration representative_calibration(const Calibration& cal);

double potential_output(double capital, double labor, double alpha);

double abatement_factor(double mu, double phi1, double phi2);
double abatement_marginal(double mu, double phi1, double phi2);

Prices factor_prices(double capital, double labor, double mu, const Calibration& cal);

// Labor-efficiency factor D_h(T).
double agent_damage(const AgentProfile& profile, double temperature, double zeta);
double agent_damage_slope(const AgentProfile& profile, double temperature, double zeta);

// Sum over agents of D_h(T) * labor endowment.
double effective_labor(const std::vector<AgentProfile>& agents, double temperature, double zeta);

double emissions(double mu, double output, double intensity);

// Carbon tax that implements abatement mu, and its inverse.
double tax_from_abatement(double mu, double intensity, double phi1, double phi2);
double abatement_from_tax(double tax, double intensity, double phi1, double phi2);

double crra_utility(double c, double sigma);
double marginal_utility(double c, double sigma);

} // namespace ccs
