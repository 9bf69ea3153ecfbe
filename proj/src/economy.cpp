#include "ccs/economy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ccs/errors.hpp"

namespace ccs {

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::BM: return "BM";
    case Variant::AC: return "AC";
    case Variant::IM: return "IM";
    }
    return "?";
}

Variant variant_from_string(const std::string& s)
{
    if (s == "BM") return Variant::BM;
    if (s == "AC") return Variant::AC;
    if (s == "IM") return Variant::IM;
    throw ConfigError("unknown calibration variant '" + s + "' (expected BM, AC or IM)");
}

void Calibration::validate() const
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta must lie in (0, 1)");
    if (!(delta_k >= 0.0 && delta_k <= 1.0)) throw DomainError("delta_k must lie in [0, 1]");
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    if (!(phi1 >= 0.0)) throw DomainError("phi1 must be nonnegative");
    if (!(phi2 > 1.0)) throw DomainError("phi2 must exceed 1");
    if (!(zeta >= 0.0)) throw DomainError("zeta must be nonnegative");
    if (horizon < 0) throw DomainError("horizon must be nonnegative");
    if (static_cast<int>(emission_intensity.size()) < horizon + 1)
        throw DomainError("emission intensity series shorter than horizon + 1");
    for (double e : emission_intensity)
        if (!(e >= 0.0)) throw DomainError("emission intensity must be nonnegative");
    carbon.validate();
    if (ecs.size() == 0) throw DomainError("ECS process is empty");
    if (ecs.horizon() < horizon) throw DomainError("ECS process shorter than the horizon");
    if (agents.empty()) throw DomainError("calibration needs at least one agent");

    double labor = 0.0, weighted = 0.0;
    bool any_trader = false;
    for (const auto& a : agents) {
        if (!(a.labor_endowment > 0.0)) throw DomainError("labor endowments must be positive");
        if (!(a.damage_weight >= 0.0)) throw DomainError("damage weights must be nonnegative");
        labor += a.labor_endowment;
        weighted += a.labor_endowment * a.damage_weight;
        any_trader = any_trader || a.trades();
    }
    if (std::abs(labor - 1.0) > 1e-12) throw DomainError("labor endowments must sum to 1");
    if (std::abs(weighted - 1.0) > 1e-12)
        throw DomainError("damage weights must aggregate to the aggregate damage function");
    if (!any_trader) throw DomainError("at least one agent must trade capital");

    if (!initial_wealth_share.empty()) {
        if (initial_wealth_share.size() != agents.size())
            throw DomainError("initial wealth share needs one entry per agent");
        double s = 0.0;
        for (std::size_t h = 0; h < agents.size(); ++h) {
            const double w = initial_wealth_share[h];
            if (!(w >= 0.0)) throw DomainError("initial wealth shares must be nonnegative");
            if (!agents[h].trades() && w != 0.0)
                throw DomainError("hand-to-mouth agents cannot hold initial capital");
            s += w;
        }
        if (std::abs(s - 1.0) > 1e-12) throw DomainError("initial wealth shares must sum to 1");
    }
    if (initial_climate.s1 < 0.0 || initial_climate.s2 < 0.0)
        throw DomainError("initial carbon stocks must be nonnegative");
}

double Calibration::steady_state_capital() const
{
    const double mpk = 1.0 / beta - 1.0 + delta_k;
    return std::pow(alpha / mpk, 1.0 / (1.0 - alpha));
}

double Calibration::steady_state_output() const
{
    return potential_output(steady_state_capital(), 1.0, alpha);
}

std::vector<double> Calibration::initial_holdings() const
{
    const double k = steady_state_capital();
    std::vector<double> a(agents.size(), 0.0);
    if (!initial_wealth_share.empty()) {
        for (std::size_t h = 0; h < agents.size(); ++h)
            a[h] = k * initial_wealth_share[h];
        return a;
    }
    double traded_labor = 0.0;
    for (const auto& p : agents)
        if (p.trades()) traded_labor += p.labor_endowment;
    for (std::size_t h = 0; h < agents.size(); ++h)
        if (agents[h].trades()) a[h] = k * agents[h].labor_endowment / traded_labor;
    return a;
}

double Calibration::emission_intensity_at(int t) const
{
    if (t < 0 || t >= static_cast<int>(emission_intensity.size()))
        throw DomainError("no emission intensity for period " + std::to_string(t));
    return emission_intensity[t];
}

Calibration make_calibration(Variant v, std::vector<double> emission_intensity)
{
    Calibration cal;
    cal.emission_intensity = std::move(emission_intensity);
    cal.ecs = EcsProcess::standard(cal.horizon);
    switch (v) {
    case Variant::BM:
        cal.agents = {{0.75, 0.5, MarketAccess::full},
                      {0.125, 1.0, MarketAccess::full},
                      {0.125, 4.0, MarketAccess::none}};
        break;
    case Variant::AC:
        cal.agents = {{0.75, 0.5, MarketAccess::full},
                      {0.125, 4.0, MarketAccess::full},
                      {0.125, 1.0, MarketAccess::none}};
        break;
    case Variant::IM:
        cal.agents = {{0.4, 0.25, MarketAccess::full},
                      {0.4, 0.25, MarketAccess::full},
                      {0.2, 4.0, MarketAccess::full}};
        break;
    }
    return cal;
}

Calibration representative_calibration(const Calibration& cal)
{
    Calibration rep = cal;
    rep.agents = {{1.0, 1.0, MarketAccess::full}};
    rep.initial_wealth_share.clear();
    return rep;
}

double potential_output(double capital, double labor, double alpha)
{
    if (!(capital > 0.0) || !(labor > 0.0))
        throw DomainError("potential output needs positive capital and labor");
    return std::pow(capital, alpha) * std::pow(labor, 1.0 - alpha);
}

static void check_abatement(double mu)
{
    if (!(mu >= 0.0 && mu <= 1.0))
        throw DomainError("abatement must lie in [0, 1], got " + std::to_string(mu));
}

double abatement_factor(double mu, double phi1, double phi2)
{
    check_abatement(mu);
    return 1.0 - phi1 * std::pow(mu, phi2);
}

double abatement_marginal(double mu, double phi1, double phi2)
{
    check_abatement(mu);
    return -phi1 * phi2 * std::pow(mu, phi2 - 1.0);
}

Prices factor_prices(double capital, double labor, double mu, const Calibration& cal)
{
    if (!(capital > 0.0) || !(labor > 0.0))
        throw DomainError("factor prices need positive capital and labor");
    const double a = abatement_factor(mu, cal.phi1, cal.phi2);
    const double ka = std::pow(capital, cal.alpha);
    const double la = std::pow(labor, -cal.alpha);
    return {a * cal.alpha * ka / capital * la * labor + (1.0 - cal.delta_k),
            (1.0 - cal.alpha) * a * ka * la};
}

double agent_damage(const AgentProfile& profile, double temperature, double zeta)
{
    return std::max(0.0, 1.0 - profile.damage_weight * zeta * temperature * temperature);
}

double agent_damage_slope(const AgentProfile& profile, double temperature, double zeta)
{
    if (agent_damage(profile, temperature, zeta) <= 0.0)
        return 0.0;
    return -2.0 * profile.damage_weight * zeta * temperature;
}

double effective_labor(const std::vector<AgentProfile>& agents, double temperature, double zeta)
{
    double l = 0.0;
    for (const auto& a : agents)
        l += agent_damage(a, temperature, zeta) * a.labor_endowment;
    return l;
}

double emissions(double mu, double output, double intensity)
{
    check_abatement(mu);
    return (1.0 - mu) * intensity * output;
}

double tax_from_abatement(double mu, double intensity, double phi1, double phi2)
{
    const double slope = -abatement_marginal(mu, phi1, phi2);
    if (slope == 0.0)
        return 0.0;
    if (!(intensity > 0.0))
        throw DomainError("tax is undefined for zero emission intensity");
    return slope / intensity;
}

double abatement_from_tax(double tax, double intensity, double phi1, double phi2)
{
    if (!(tax >= 0.0))
        throw DomainError("carbon tax must be nonnegative");
    if (tax == 0.0)
        return 0.0;
    if (!(intensity > 0.0))
        throw DomainError("no finite abatement implements a positive tax at zero intensity");
    if (phi1 == 0.0)
        return 1.0;
    const double mu = std::pow(tax * intensity / (phi1 * phi2), 1.0 / (phi2 - 1.0));
    return std::min(mu, 1.0);
}

double crra_utility(double c, double sigma)
{
    if (!(c > 0.0))
        throw DomainError("utility needs positive consumption, got " + std::to_string(c));
    if (sigma == 1.0)
        return std::log(c);
    return (std::pow(c, 1.0 - sigma) - 1.0) / (1.0 - sigma);
}

double marginal_utility(double c, double sigma)
{
    if (!(c > 0.0))
        throw DomainError("marginal utility needs positive consumption, got " + std::to_string(c));
    return std::pow(c, -sigma);
}

} // namespace ccs
