#include "ccs/model.hpp"

#include <cmath>

#include "ccs/errors.hpp"

namespace ccs {

std::string to_string(Policy p)
{
    switch (p) {
    case Policy::OT: return "OT";
    case Policy::NT: return "NT";
    case Policy::CM: return "CM";
    case Policy::LF: return "LF";
    }
    return "?";
}

Policy policy_from_string(const std::string& s)
{
    if (s == "OT") return Policy::OT;
    if (s == "NT") return Policy::NT;
    if (s == "CM") return Policy::CM;
    if (s == "LF") return Policy::LF;
    throw ConfigError("unknown regime '" + s + "' (expected OT, NT, CM or LF)");
}

std::string Regime::tag() const
{
    std::string s = to_string(policy);
    if (delay > 0) s += "_delay" + std::to_string(delay);
    return s;
}

Model::Model(Calibration cal, Policy policy) : cal_(std::move(cal))
{
    cal_.validate();
    if (policy == Policy::CM && cal_.agents.size() > 1) {
        cal_ = representative_calibration(cal_);
        representative_ = true;
    }
    const auto holdings = cal_.initial_holdings();
    for (int h = 0; h < static_cast<int>(cal_.agents.size()); ++h) {
        const auto& p = cal_.agents[h];
        bool merged = false;
        for (auto& c : classes_) {
            if (c.profile == p && std::abs(c.initial_holding - holdings[h]) <= 1e-15 * (1.0 + holdings[h])) {
                c.count += 1;
                c.members.push_back(h);
                merged = true;
                break;
            }
        }
        if (!merged)
            classes_.push_back({p, 1, {h}, holdings[h]});
    }
    slot_.assign(classes_.size(), -1);
    for (int c = 0; c < num_classes(); ++c) {
        if (classes_[c].profile.trades()) {
            slot_[c] = static_cast<int>(traders_.size());
            traders_.push_back(c);
        }
    }
}

std::vector<double> Model::initial_state() const
{
    std::vector<double> x;
    for (int c : traders_) x.push_back(classes_[c].initial_holding);
    x.push_back(cal_.initial_climate.s1);
    x.push_back(cal_.initial_climate.s2);
    return x;
}

double Model::labor_at(double temperature) const
{
    double l = 0.0;
    for (const auto& c : classes_)
        l += c.count * agent_damage(c.profile, temperature, cal_.zeta) * c.profile.labor_endowment;
    return l;
}

NodeContext Model::context(int t, int z, std::span<const double> state) const
{
    if (static_cast<int>(state.size()) != state_dimension())
        throw DomainError("state has the wrong dimension");
    NodeContext n;
    n.t = t;
    n.z = z;
    const int p = num_traders();
    n.climate = {state[p], state[p + 1]};
    n.temperature = temperature(n.climate, cal_.ecs.value(z), cal_.carbon);
    n.holdings.assign(classes_.size(), 0.0);
    n.damage.resize(classes_.size());
    n.eff_labor.resize(classes_.size());
    for (int i = 0; i < p; ++i) n.holdings[traders_[i]] = state[i];
    for (int c = 0; c < num_classes(); ++c) {
        const auto& cl = classes_[c];
        n.capital += cl.count * n.holdings[c];
        n.damage[c] = agent_damage(cl.profile, n.temperature, cal_.zeta);
        n.eff_labor[c] = n.damage[c] * cl.profile.labor_endowment;
        n.labor += cl.count * n.eff_labor[c];
    }
    if (!(n.capital > 0.0))
        throw SolverError("aggregate capital must be positive at t=" + std::to_string(t));
    if (!(n.labor > 0.0))
        throw SolverError("climate damages wiped out all labor at t=" + std::to_string(t));
    n.output = potential_output(n.capital, n.labor, cal_.alpha);
    n.mpk = cal_.alpha * n.output / n.capital;
    n.mpl = (1.0 - cal_.alpha) * n.output / n.labor;
    n.intensity = cal_.emission_intensity_at(t);
    return n;
}

} // namespace ccs
