#include "ccs/climate.hpp"

#include <cmath>
#include <string>

#include "ccs/errors.hpp"

namespace ccs {

void CarbonParams::validate() const
{
    if (!(xi1 >= 0.0 && xi1 <= 1.0) || !(xi2 >= 0.0 && xi2 <= 1.0))
        throw DomainError("carbon uptake fractions must lie in [0, 1]");
    if (!(delta_s2 < delta_s1 && delta_s1 <= 1.0) || delta_s2 < 0.0)
        throw DomainError("carbon retention must satisfy 0 <= delta_s2 < delta_s1 <= 1");
    if (!(s_bar > 0.0))
        throw DomainError("pre-industrial carbon stock must be positive");
}

ClimateState carbon_step(const ClimateState& state, double emissions, const CarbonParams& p)
{
    if (!(emissions >= 0.0))
        throw DomainError("emissions must be nonnegative, got " + std::to_string(emissions));
    return {p.xi1 * p.xi2 * emissions + p.delta_s1 * state.s1,
            p.xi1 * (1.0 - p.xi2) * emissions + p.delta_s2 * state.s2};
}

double temperature(const ClimateState& state, double lambda, const CarbonParams& p)
{
    const double total = state.total();
    if (!(total > 0.0))
        throw DomainError("temperature needs a positive carbon stock");
    return lambda * std::log(total / p.s_bar) / std::log(2.0);
}

double temperature_slope(const ClimateState& state, double lambda)
{
    return lambda / (state.total() * std::log(2.0));
}

EcsProcess::EcsProcess(std::vector<double> values, int horizon, StayRule stay)
    : values_(std::move(values)), horizon_(horizon), stay_(std::move(stay))
{
    if (values_.empty())
        throw DomainError("ECS process needs at least one state");
    if (horizon_ < 0)
        throw DomainError("ECS horizon must be nonnegative");
}

EcsProcess EcsProcess::standard(int horizon)
{
    std::vector<double> v{1.1, 2.6, 3.1, 3.6, 4.1, 5.6};
    const int n = static_cast<int>(v.size());
    return EcsProcess(std::move(v), horizon,
                      [n](int t) { return standard_stay_probability(t, n); });
}

double EcsProcess::standard_stay_probability(int t, int num_states)
{
    if (t < 2)
        return 1.0 / num_states;
    return 1.0 - std::pow(0.5, (t + 1) / 3.0);
}

double EcsProcess::value(int z) const
{
    if (z < 0 || z >= size())
        throw DomainError("shock index out of range: " + std::to_string(z));
    return values_[z];
}

double EcsProcess::stay_probability(int t) const
{
    if (t < 0 || t > horizon_)
        throw DomainError("period out of range: " + std::to_string(t));
    if (size() == 1)
        return 1.0;
    return stay_(t);
}

std::vector<double> EcsProcess::row(int t, int z) const
{
    if (z < 0 || z >= size())
        throw DomainError("shock index out of range: " + std::to_string(z));
    const double p = stay_probability(t);
    const int n = size();
    std::vector<double> r(n, n > 1 ? (1.0 - p) / (n - 1) : 0.0);
    r[z] = p;
    return r;
}

double EcsProcess::probability(int t, int z, int z_next) const
{
    return row(t, z)[z_next];
}

std::vector<double> EcsProcess::initial_distribution() const
{
    return std::vector<double>(size(), 1.0 / size());
}

} // namespace ccs
