#include "ccs/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "ccs/analysis.hpp"
#include "ccs/errors.hpp"

namespace ccs {

OracleCheck compare_with_oracle(const Calibration& cal, Policy policy, int level, int z0)
{
    const auto start = std::chrono::steady_clock::now();
    const Regime regime{policy, 0};
    const TreeSolution tree = brute_force_tree(cal, regime, z0);
    const Model m(cal, policy);
    SolveOptions opt;
    opt.level = level;
    const ValuePolicySet set = solve_regime(m, regime, opt);

    OracleCheck out;
    out.policy = policy;
    out.oracle_residual = tree.max_residual;
    out.euler = set.report.max_euler();
    for (const auto& n : tree.nodes) {
        const int t = static_cast<int>(n.history.size()) - 1;
        std::vector<double> x;
        for (int i = 0; i < m.num_traders(); ++i)
            x.push_back(n.holdings[m.classes()[m.trader_class(i)].members.front()]);
        x.push_back(n.climate.s1);
        x.push_back(n.climate.s2);
        const auto cont = continuation_after(set, t);
        const NodeSolution s = node_equilibrium(m, regime, t, n.history.back(), x, cont.get());
        out.mu_gap = std::max(out.mu_gap, std::abs(s.mu - n.mu));
        for (int c = 0; c < m.num_classes(); ++c)
            for (int h : m.classes()[c].members)
                out.consumption_gap = std::max(out.consumption_gap, std::abs(s.consumption[c] - n.consumption[h]));
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::vector<double> unanimity_gaps(const Model& m, const NodeSolution& sol, const Continuation& next)
{
    const auto& cal = m.cal();
    const int nc = m.num_classes();
    const int p = m.num_traders();
    const auto row = cal.ecs.row(sol.t, sol.z);
    const double k = sol.capital;
    const double mpk = cal.alpha * sol.output / k;
    const double mpl = (1.0 - cal.alpha) * sol.output / sol.labor;
    const double intensity = cal.emission_intensity_at(sol.t);

    // Q_h(mu) with shares, compensation and savings frozen at the solution.
    std::vector<NextPoint> pts;
    auto q = [&](double mu, int c) {
        const double cost = (1.0 - abatement_factor(mu, cal.phi1, cal.phi2)) * sol.output;
        const double income = (1.0 - cal.delta_k + mpk) * sol.holdings[c] +
                              mpl * sol.damage[c] * m.classes()[c].profile.labor_endowment;
        const double cons = income - sol.savings[c] - sol.shares[c] * cost;
        const ClimateState nx = carbon_step(sol.climate, emissions(mu, sol.output, intensity), cal.carbon);
        std::vector<double> x;
        for (int i = 0; i < p; ++i) x.push_back(sol.savings[m.trader_class(i)]);
        x.push_back(nx.s1);
        x.push_back(nx.s2);
        next.evaluate(x, pts);
        double ev = 0.0;
        for (std::size_t zn = 0; zn < row.size(); ++zn)
            if (row[zn] > 0.0) ev += row[zn] * pts[zn].value[c];
        return crra_utility(cons, cal.sigma) + cal.beta * ev;
    };
    std::vector<double> gaps(nc, 0.0);
    const double h = 1e-5;
    for (int c = 0; c < nc; ++c) {
        const double d = (q(sol.mu + h, c) - q(sol.mu - h, c)) / (2.0 * h);
        gaps[c] = std::abs(d) / (marginal_utility(sol.consumption[c], cal.sigma) * sol.output);
    }
    return gaps;
}

TheoremOneCheck theorem_one_suite(const ValuePolicySet& set, int samples, std::uint64_t seed)
{
    const Model& m = set.model;
    if (set.regime.policy != Policy::OT) throw DomainError("Theorem 1 concerns the OT regime");
    std::mt19937_64 rng(seed);
    TheoremOneCheck out;
    out.worst_gain = std::numeric_limits<double>::infinity();
    const int first = set.regime.delay;
    for (int k = 0; k < samples; ++k) {
        const int t = first + static_cast<int>(rng() % static_cast<std::uint64_t>(m.horizon() - first));
        const auto path = random_shock_path(m.cal(), t + 1, rng());
        std::vector<double> x = m.initial_state();
        for (int s = 0; s < t; ++s) x = interpolated_next_state(set, s, path[s], x);
        const int z = path[t];
        std::vector<double> guess;
        for (const auto& f : set.slices[t][z].savings) guess.push_back(f.eval(x));

        const auto cont = continuation_after(set, t);
        const NodeSolution opt = node_equilibrium(m, set.regime, t, z, x, cont.get(), {}, guess);
        const NodeSolution lf = node_at_abatement(m, set.regime, t, z, x, *cont, 0.0, {}, guess);
        for (int c = 0; c < m.num_classes(); ++c) {
            const double gain = opt.value[c] - lf.value[c];
            out.worst_gain = std::min(out.worst_gain, gain);
            if (gain > 1e-12) out.strict = true;
        }
        double sum = 0.0;
        for (int c = 0; c < m.num_classes(); ++c) sum += m.classes()[c].count * opt.transfers[c];
        out.transfer_sum = std::max(out.transfer_sum, std::abs(sum) / opt.output);
        if (opt.mu > 0.0)
            for (double g : unanimity_gaps(m, opt, *cont)) out.unanimity = std::max(out.unanimity, g);
        ++out.nodes;
    }
    return out;
}

} // namespace ccs
