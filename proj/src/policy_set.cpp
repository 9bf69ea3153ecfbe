#include "ccs/policy_set.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <memory>
#include <ostream>

#include "ccs/errors.hpp"

namespace ccs {

double SolveReport::max_euler() const
{
    double m = 0.0;
    for (const auto& p : periods) m = std::max({m, p.euler_at_nodes, p.euler_off_grid});
    return m;
}

namespace {

void expect(std::istream& is, const std::string& word)
{
    std::string w;
    if (!(is >> w) || w != word)
        throw DataError("policy file: expected '" + word + "', found '" + w + "'");
}

template <class T>
T take(std::istream& is, const char* what)
{
    T v{};
    if (!(is >> v)) throw DataError(std::string("policy file: bad value for ") + what);
    return v;
}

void write_calibration(std::ostream& os, const Calibration& c)
{
    os << "alpha " << c.alpha << "\ndelta_k " << c.delta_k << "\nbeta " << c.beta << "\nsigma "
       << c.sigma << "\nphi " << c.phi1 << ' ' << c.phi2 << "\nzeta " << c.zeta << "\nhorizon "
       << c.horizon << "\n";
    os << "carbon " << c.carbon.xi1 << ' ' << c.carbon.xi2 << ' ' << c.carbon.delta_s1 << ' '
       << c.carbon.delta_s2 << ' ' << c.carbon.s_bar << "\n";
    os << "initial_climate " << c.initial_climate.s1 << ' ' << c.initial_climate.s2 << "\n";
    os << "emission_intensity " << c.emission_intensity.size();
    for (double e : c.emission_intensity) os << ' ' << e;
    os << "\necs_values " << c.ecs.size();
    for (double v : c.ecs.values()) os << ' ' << v;
    os << "\necs_stay " << c.ecs.horizon() + 1;
    for (int t = 0; t <= c.ecs.horizon(); ++t) os << ' ' << c.ecs.stay_probability(t);
    os << "\nagents " << c.agents.size() << "\n";
    for (const auto& a : c.agents)
        os << a.labor_endowment << ' ' << a.damage_weight << ' '
           << (a.trades() ? "full" : "none") << "\n";
    os << "wealth_share " << c.initial_wealth_share.size();
    for (double w : c.initial_wealth_share) os << ' ' << w;
    os << "\n";
}

Calibration read_calibration(std::istream& is)
{
    Calibration c;
    expect(is, "alpha");
    c.alpha = take<double>(is, "alpha");
    expect(is, "delta_k");
    c.delta_k = take<double>(is, "delta_k");
    expect(is, "beta");
    c.beta = take<double>(is, "beta");
    expect(is, "sigma");
    c.sigma = take<double>(is, "sigma");
    expect(is, "phi");
    c.phi1 = take<double>(is, "phi1");
    c.phi2 = take<double>(is, "phi2");
    expect(is, "zeta");
    c.zeta = take<double>(is, "zeta");
    expect(is, "horizon");
    c.horizon = take<int>(is, "horizon");
    expect(is, "carbon");
    c.carbon.xi1 = take<double>(is, "xi1");
    c.carbon.xi2 = take<double>(is, "xi2");
    c.carbon.delta_s1 = take<double>(is, "delta_s1");
    c.carbon.delta_s2 = take<double>(is, "delta_s2");
    c.carbon.s_bar = take<double>(is, "s_bar");
    expect(is, "initial_climate");
    c.initial_climate.s1 = take<double>(is, "s1");
    c.initial_climate.s2 = take<double>(is, "s2");
    expect(is, "emission_intensity");
    c.emission_intensity.resize(take<std::size_t>(is, "count"));
    for (auto& e : c.emission_intensity) e = take<double>(is, "intensity");
    expect(is, "ecs_values");
    std::vector<double> values(take<std::size_t>(is, "count"));
    for (auto& v : values) v = take<double>(is, "ecs value");
    expect(is, "ecs_stay");
    auto stay = std::make_shared<std::vector<double>>(take<std::size_t>(is, "count"));
    for (auto& p : *stay) p = take<double>(is, "stay probability");
    if (stay->empty()) throw DataError("policy file: empty ECS persistence table");
    const int horizon = static_cast<int>(stay->size()) - 1;
    c.ecs = EcsProcess(std::move(values), horizon, [stay](int t) { return (*stay)[t]; });
    expect(is, "agents");
    c.agents.resize(take<std::size_t>(is, "count"));
    for (auto& a : c.agents) {
        a.labor_endowment = take<double>(is, "labor");
        a.damage_weight = take<double>(is, "weight");
        const auto access = take<std::string>(is, "access");
        if (access == "full") a.access = MarketAccess::full;
        else if (access == "none") a.access = MarketAccess::none;
        else throw DataError("policy file: bad market access '" + access + "'");
    }
    expect(is, "wealth_share");
    c.initial_wealth_share.resize(take<std::size_t>(is, "count"));
    for (auto& w : c.initial_wealth_share) w = take<double>(is, "wealth share");
    return c;
}

// Functions of one period live on one grid object so that a single basis
// evaluation serves all of them.
Interpolant share_grid(const Interpolant& raw, std::shared_ptr<const SmolyakGrid>& grid)
{
    if (!grid || !(grid->spec() == raw.spec())) grid = raw.grid_ptr();
    return Interpolant(grid, raw.coefficients());
}

} // namespace

void write_policy_set(std::ostream& os, const ValuePolicySet& set)
{
    os << std::setprecision(17);
    os << "ccs-policy-set 1\n";
    os << "regime " << to_string(set.regime.policy) << ' ' << set.regime.delay << "\n";
    write_calibration(os, set.model.cal());
    os << "periods " << set.slices.size() << "\n";
    for (std::size_t t = 0; t < set.slices.size(); ++t) {
        os << "period " << t << ' ' << set.slices[t].size() << "\n";
        for (const auto& s : set.slices[t]) {
            os << "slice " << s.value.size() << ' ' << s.consumption.size() << ' ' << s.savings.size()
               << "\n";
            for (const auto& f : s.value) f.write(os);
            for (const auto& f : s.consumption) f.write(os);
            for (const auto& f : s.savings) f.write(os);
            s.abatement.write(os);
        }
    }
    const auto& r = set.report;
    os << "report " << r.periods.size() << ' ' << r.passes << ' ' << r.extrapolations << "\n";
    for (const auto& p : r.periods)
        os << p.t << ' ' << p.euler_at_nodes << ' ' << p.euler_off_grid << ' ' << p.gradient_gap
           << ' ' << p.max_abatement << ' ' << p.nodes << "\n";
    os << "end\n";
}

ValuePolicySet read_policy_set(std::istream& is)
{
    expect(is, "ccs-policy-set");
    if (take<int>(is, "version") != 1) throw DataError("policy file: unsupported version");
    expect(is, "regime");
    Regime regime;
    regime.policy = policy_from_string(take<std::string>(is, "regime"));
    regime.delay = take<int>(is, "delay");
    Calibration cal = read_calibration(is);
    ValuePolicySet set{Model(std::move(cal), regime.policy), regime, {}, {}, {}};

    expect(is, "periods");
    set.slices.resize(take<std::size_t>(is, "count"));
    for (std::size_t t = 0; t < set.slices.size(); ++t) {
        expect(is, "period");
        if (take<std::size_t>(is, "period") != t) throw DataError("policy file: periods out of order");
        set.slices[t].resize(take<std::size_t>(is, "count"));
        std::shared_ptr<const SmolyakGrid> grid;
        for (auto& s : set.slices[t]) {
            expect(is, "slice");
            s.value.resize(take<std::size_t>(is, "count"));
            s.consumption.resize(take<std::size_t>(is, "count"));
            s.savings.resize(take<std::size_t>(is, "count"));
            for (auto& f : s.value) f = share_grid(Interpolant::read(is), grid);
            for (auto& f : s.consumption) f = share_grid(Interpolant::read(is), grid);
            for (auto& f : s.savings) f = share_grid(Interpolant::read(is), grid);
            s.abatement = share_grid(Interpolant::read(is), grid);
        }
    }
    expect(is, "report");
    for (const auto& period : set.slices)
        set.grids.push_back(period.at(0).abatement.spec());
    auto& r = set.report;
    r.periods.resize(take<std::size_t>(is, "count"));
    r.passes = take<int>(is, "passes");
    r.extrapolations = take<long>(is, "extrapolations");
    for (auto& p : r.periods) {
        p.t = take<int>(is, "t");
        p.euler_at_nodes = take<double>(is, "euler");
        p.euler_off_grid = take<double>(is, "euler");
        p.gradient_gap = take<double>(is, "gap");
        p.max_abatement = take<double>(is, "abatement");
        p.nodes = take<std::size_t>(is, "nodes");
    }
    expect(is, "end");
    return set;
}

void save_policy_set(const std::string& path, const ValuePolicySet& set)
{
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    write_policy_set(os, set);
    if (!os) throw DataError("failed writing " + path);
}

ValuePolicySet load_policy_set(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw DataError("missing artifact: cannot read " + path);
    return read_policy_set(is);
}

} // namespace ccs
