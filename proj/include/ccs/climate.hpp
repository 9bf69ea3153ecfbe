#pragma once

#include <functional>
#include <vector>

namespace ccs {

// Atmospheric carbon split into a slow (permanent) and a fast reservoir, in GtC.
struct ClimateState {
    double s1 = 0.0;
    double s2 = 0.0;

    double total() const { return s1 + s2; }
};

// Two-reservoir carbon cycle.
//
// delta_s1 and delta_s2 are per-period *retention* multipliers: the share of
// last period's reservoir that is carried over. delta_s1 = 1 makes the slow
// reservoir permanent.
struct CarbonParams {
    double xi1 = 0.4;           // share of emissions that enters the atmosphere
    double xi2 = 0.5;           // share of atmospheric uptake going to the slow reservoir
    double delta_s1 = 1.0;      // slow-reservoir retention
    double delta_s2 = 0.97;     // fast-reservoir retention
    double s_bar = 581.0;       // pre-industrial stock

    void validate() const;
};

ClimateState carbon_step(const ClimateState& state, double emissions, const CarbonParams& params);

// Warming above pre-industrial for climate sensitivity `lambda` (degrees per doubling).
double temperature(const ClimateState& state, double lambda, const CarbonParams& params);

// d temperature / d s1 (equal to d / d s2).
double temperature_slope(const ClimateState& state, double lambda);

// Markov chain over climate-sensitivity states with time-varying persistence.
//
// row(t, z) is the distribution of z_{t+1} given z_t = z. Shocks are 0-based.
class EcsProcess {
public:
    using StayRule = std::function<double(int)>;

    EcsProcess() = default;
    EcsProcess(std::vector<double> values, int horizon, StayRule stay);

    // Six sensitivities, uniform for t = 0, 1 and stay probability 1 - 0.5^((t+1)/3) afterwards.
    static EcsProcess standard(int horizon);
    static double standard_stay_probability(int t, int num_states);

    int size() const { return static_cast<int>(values_.size()); }
    int horizon() const { return horizon_; }
    double value(int z) const;
    const std::vector<double>& values() const { return values_; }

    double stay_probability(int t) const;
    std::vector<double> row(int t, int z) const;
    double probability(int t, int z, int z_next) const;

    // Distribution of z_0.
    std::vector<double> initial_distribution() const;

private:
    std::vector<double> values_;
    int horizon_ = 0;
    StayRule stay_;
};

} // namespace ccs
