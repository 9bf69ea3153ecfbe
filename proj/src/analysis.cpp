#include "ccs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "ccs/errors.hpp"
#include "ccs/solve.hpp"

namespace ccs {

const std::vector<int> table_history{2, 2, 5};

namespace {

// Per-class values spread over the calibration's agents.
std::vector<double> per_agent(const Model& m, const std::vector<double>& by_class)
{
    std::vector<double> out(m.num_agents(), 0.0);
    for (int c = 0; c < m.num_classes(); ++c)
        for (int h : m.classes()[c].members) out[h] = by_class[c];
    return out;
}

// Sum of beta^s for the periods t .. T; converts values with the -1/(1-sigma)
// utility constant to the constant-free aggregate.
double utility_constant(const Calibration& cal, int t)
{
    double k = 0.0;
    for (int s = 0; s <= cal.horizon - t; ++s) k += std::pow(cal.beta, s);
    return k / (1.0 - cal.sigma);
}

double excursion(const GridSpec& box, std::span<const double> x)
{
    double worst = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double w = box.hi[k] - box.lo[k];
        const double out = std::max({box.lo[k] - x[k], x[k] - box.hi[k], 0.0});
        worst = std::max(worst, out / w);
    }
    return worst;
}

NodeSolution solve_at(const ValuePolicySet& set, int t, int z, std::span<const double> x,
                      const SolverOptions& opt)
{
    const Model& m = set.model;
    if (t == m.horizon()) return terminal_node(m, t, z, x);
    std::vector<double> guess;
    for (const auto& f : set.slices[t][z].savings) guess.push_back(f.eval(x));
    const auto cont = continuation_after(set, t);
    return node_equilibrium(m, set.regime, t, z, x, cont.get(), opt, guess);
}

} // namespace

std::vector<int> random_shock_path(const Calibration& cal, int length, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    auto draw = [&](const std::vector<double>& p) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        double acc = 0.0;
        for (std::size_t z = 0; z < p.size(); ++z) {
            acc += p[z];
            if (u < acc) return static_cast<int>(z);
        }
        return static_cast<int>(p.size()) - 1;
    };
    std::vector<int> path;
    if (length <= 0) return path;
    path.push_back(draw(cal.ecs.initial_distribution()));
    for (int t = 0; t + 1 < length; ++t) path.push_back(draw(cal.ecs.row(t, path.back())));
    return path;
}

SimulationPanel simulate(const ValuePolicySet& set, std::span<const int> shocks, const SolverOptions& opt)
{
    const Model& m = set.model;
    if (static_cast<int>(shocks.size()) > m.horizon() + 1)
        throw DomainError("shock path longer than the horizon");
    SimulationPanel panel;
    panel.regime = set.regime;
    panel.shocks.assign(shocks.begin(), shocks.end());
    std::vector<double> x = m.initial_state();
    for (int t = 0; t < static_cast<int>(shocks.size()); ++t) {
        const int z = shocks[t];
        if (z < 0 || z >= m.num_shocks()) throw DomainError("shock index out of range");
        const double out = excursion(set.grids[t], x);
        if (out > 0.0) {
            ++panel.extrapolated_steps;
            panel.max_excursion = std::max(panel.max_excursion, out);
        }
        if (out > 0.1) {
            std::ostringstream os;
            os << "simulated state leaves the period-" << t << " box by " << 100.0 * out
               << " percent of its width";
            throw SolverError(os.str());
        }
        const NodeSolution s = solve_at(set, t, z, x, opt);
        PanelRow r;
        r.t = t;
        r.z = z;
        r.temperature = s.temperature;
        r.abatement_pct = 100.0 * s.mu;
        r.tax = s.tax;
        r.emissions = s.emissions;
        r.s1 = s.climate.s1;
        r.s2 = s.climate.s2;
        r.capital = s.capital;
        r.output = s.output;
        r.net_output = s.net_output;
        r.abatement_cost = s.abatement_cost;
        r.gross_return = s.prices.gross_return;
        r.wage = s.prices.wage;
        r.consumption = per_agent(m, s.consumption);
        r.savings = per_agent(m, s.savings);
        r.transfers = per_agent(m, s.transfers);
        r.shares = per_agent(m, s.shares);
        r.damage = per_agent(m, s.damage);
        panel.rows.push_back(std::move(r));
        x = s.next_state;
    }
    return panel;
}

std::vector<double> expected_utility(const ValuePolicySet& set, const SolverOptions& opt)
{
    const Model& m = set.model;
    const auto x0 = m.initial_state();
    const auto p0 = m.cal().ecs.initial_distribution();
    std::vector<double> eu(m.num_agents(), 0.0);
    const double k = utility_constant(m.cal(), 0);
    for (int z = 0; z < m.num_shocks(); ++z) {
        const auto v = per_agent(m, solve_at(set, 0, z, x0, opt).value);
        for (int h = 0; h < m.num_agents(); ++h) eu[h] += p0[z] * (v[h] + k);
    }
    return eu;
}

std::vector<double> expected_utility_tree(const ValuePolicySet& set, const SolverOptions& opt)
{
    const Model& m = set.model;
    const auto& cal = m.cal();
    const int nc = m.num_classes();
    std::function<std::vector<double>(int, int, const std::vector<double>&)> rec =
        [&](int t, int z, const std::vector<double>& x) {
            const NodeSolution s = solve_at(set, t, z, x, opt);
            std::vector<double> u(nc);
            for (int c = 0; c < nc; ++c)
                u[c] = std::pow(s.consumption[c], 1.0 - cal.sigma) / (1.0 - cal.sigma);
            if (t == m.horizon()) return u;
            const auto row = cal.ecs.row(t, z);
            for (int zn = 0; zn < m.num_shocks(); ++zn) {
                if (row[zn] == 0.0) continue;
                const auto next = rec(t + 1, zn, s.next_state);
                for (int c = 0; c < nc; ++c) u[c] += cal.beta * row[zn] * next[c];
            }
            return u;
        };
    const auto p0 = cal.ecs.initial_distribution();
    std::vector<double> eu(nc, 0.0);
    for (int z = 0; z < m.num_shocks(); ++z) {
        const auto u = rec(0, z, m.initial_state());
        for (int c = 0; c < nc; ++c) eu[c] += p0[z] * u[c];
    }
    return per_agent(m, eu);
}

std::vector<double> welfare_ce(std::span<const double> base, std::span<const double> alt, double sigma)
{
    if (base.size() != alt.size()) throw DomainError("welfare comparison needs matching agents");
    if (sigma == 1.0) throw DomainError("consumption equivalents need sigma != 1");
    std::vector<double> g(base.size());
    for (std::size_t h = 0; h < base.size(); ++h) {
        if (!(base[h] * alt[h] > 0.0))
            throw DomainError("lifetime utilities of mixed sign cannot be compared");
        g[h] = std::pow(alt[h] / base[h], 1.0 / (1.0 - sigma)) - 1.0;
    }
    return g;
}

CompleteMarketsComparison complete_markets_gain(std::span<const double> base, double aggregate,
                                                double sigma)
{
    if (base.size() < 2) throw DomainError("complete-markets comparison needs two or more agents");
    // Share of aggregate consumption that reproduces each agent's base welfare.
    std::vector<double> r(base.size());
    for (std::size_t h = 0; h < base.size(); ++h) {
        if (!(base[h] * aggregate > 0.0))
            throw DomainError("lifetime utilities of mixed sign cannot be compared");
        r[h] = std::pow(base[h] / aggregate, 1.0 / (1.0 - sigma));
    }
    const double rest = std::accumulate(r.begin() + 1, r.end(), 0.0);
    CompleteMarketsComparison out;
    out.gain = (1.0 - r[0]) / rest - 1.0;
    out.shares = r;
    for (std::size_t h = 1; h < r.size(); ++h) out.shares[h] *= 1.0 + out.gain;
    return out;
}

// --- tables ------------------------------------------------------------------

AbatementRow abatement_row(const ValuePolicySet& set, const std::string& label, const SolverOptions& opt)
{
    AbatementRow row{label, {}};
    for (int z3 = 0; z3 < set.num_shocks(); ++z3) {
        std::vector<int> path = table_history;
        path.push_back(z3);
        const auto panel = simulate(set, path, opt);
        if (z3 == 0)
            for (int t = 0; t < 3; ++t) row.values.push_back(panel.rows[t].abatement_pct);
        row.values.push_back(panel.rows[3].abatement_pct);
    }
    return row;
}

std::vector<int> round_shares(std::span<const double> percent)
{
    const int n = static_cast<int>(percent.size());
    std::vector<int> out(n);
    std::vector<std::pair<double, int>> rem;
    int total = 0;
    for (int i = 0; i < n; ++i) {
        out[i] = static_cast<int>(std::floor(percent[i]));
        total += out[i];
        rem.emplace_back(percent[i] - out[i], i);
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int k = 0; k < 100 - total && k < n; ++k) ++out[rem[k].second];
    return out;
}

std::vector<CostShareRow> cost_share_rows(const ValuePolicySet& set, const SolverOptions& opt)
{
    std::vector<CostShareRow> rows;
    double base = 0.0;
    for (int z3 = 0; z3 < set.num_shocks(); ++z3) {
        std::vector<int> path = table_history;
        path.push_back(z3);
        const auto panel = simulate(set, path, opt);
        const auto& r = panel.rows[3];
        if (z3 == 0) base = r.abatement_cost;
        std::vector<double> pct;
        for (double s : r.shares) pct.push_back(100.0 * s);
        rows.push_back({z3 + 1, base > 0.0 ? r.abatement_cost / base : 0.0, r.temperature, round_shares(pct)});
    }
    return rows;
}

Tables make_tables(const SolutionMap& solutions, bool require_all, const SolverOptions& opt)
{
    auto find = [&](const std::string& key) -> const ValuePolicySet* {
        const auto it = solutions.find(key);
        if (it != solutions.end() && it->second) return it->second;
        if (require_all) throw DataError("missing artifact: no solution for regime " + key);
        return nullptr;
    };
    Tables t;
    for (const char* key : {"CM", "OT", "NT"})
        if (const auto* s = find(key)) t.table1.push_back(abatement_row(*s, key, opt));
    if (const auto* s = find("OT")) t.table1b = cost_share_rows(*s, opt);
    for (const auto& [key, label] : {std::pair{"OT", "BM"}, {"OT-IM", "IM"}, {"OT-AC", "AC"}})
        if (const auto* s = find(key)) t.table2.push_back(abatement_row(*s, label, opt));
    for (const auto& [key, label] : {std::pair{"OT-d1", "1, OT"}, {"OT-d2", "2, OT"}, {"CM-d1", "1, CM"}})
        if (const auto* s = find(key)) {
            auto row = abatement_row(*s, label, opt);
            row.values.erase(row.values.begin());
            t.table3.push_back(row);
        }
    return t;
}

void write_abatement_csv(std::ostream& os, const std::vector<AbatementRow>& rows, int first_event)
{
    const char* events[] = {"z0=3", "z1=3", "z2=6"};
    os << "row";
    for (int k = first_event; k < 3; ++k) os << ',' << events[k];
    const std::size_t n = rows.empty() ? 0 : rows.front().values.size() - (3 - first_event);
    for (std::size_t z = 0; z < n; ++z) os << ",z3=" << z + 1;
    os << '\n' << std::fixed << std::setprecision(2);
    for (const auto& r : rows) {
        os << '"' << r.label << '"';
        for (double v : r.values) os << ',' << v;
        os << '\n';
    }
    os.unsetf(std::ios::fixed);
}

void write_cost_share_csv(std::ostream& os, const std::vector<CostShareRow>& rows)
{
    os << "z3,relative_cost,temperature";
    const std::size_t n = rows.empty() ? 0 : rows.front().shares.size();
    for (std::size_t h = 0; h < n; ++h) os << ",share_" << h + 1;
    os << '\n' << std::fixed;
    for (const auto& r : rows) {
        os << r.z3 << ',' << std::setprecision(2) << r.relative_cost << ',' << r.temperature;
        for (int s : r.shares) os << ',' << s;
        os << '\n';
    }
    os.unsetf(std::ios::fixed);
}

void write_panel_csv(std::ostream& os, const SimulationPanel& panel)
{
    os << "regime,t,z,variable,agent,value\n" << std::setprecision(12);
    const std::string tag = panel.regime.tag();
    for (const auto& r : panel.rows) {
        auto put = [&](const char* name, double v) {
            os << tag << ',' << r.t << ',' << r.z + 1 << ',' << name << ",," << v << '\n';
        };
        auto put_agents = [&](const char* name, const std::vector<double>& v) {
            for (std::size_t h = 0; h < v.size(); ++h)
                os << tag << ',' << r.t << ',' << r.z + 1 << ',' << name << ',' << h + 1 << ',' << v[h] << '\n';
        };
        put("temperature", r.temperature);
        put("abatement_pct", r.abatement_pct);
        put("tax", r.tax);
        put("emissions", r.emissions);
        put("s1", r.s1);
        put("s2", r.s2);
        put("capital", r.capital);
        put("output", r.output);
        put("net_output", r.net_output);
        put("abatement_cost", r.abatement_cost);
        put("gross_return", r.gross_return);
        put("wage", r.wage);
        put_agents("consumption", r.consumption);
        put_agents("savings", r.savings);
        put_agents("transfer", r.transfers);
        put_agents("cost_share", r.shares);
        put_agents("damage", r.damage);
    }
}

} // namespace ccs
