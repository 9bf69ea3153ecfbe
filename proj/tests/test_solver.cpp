#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ccs/errors.hpp"
#include "ccs/oracle.hpp"
#include "ccs/solve.hpp"
#include "ccs/verify.hpp"

using namespace ccs;

namespace {

Calibration no_damage()
{
    Calibration cal = tiny_calibration();
    cal.zeta = 0.0;
    return cal;
}

// Goods market: sum of consumption and savings equals A(mu) Y + (1 - delta_k) K.
double market_gap(const Model& m, const NodeSolution& s)
{
    double uses = 0.0;
    for (int c = 0; c < m.num_classes(); ++c)
        uses += m.classes()[c].count * (s.consumption[c] + s.savings[c]);
    return std::abs(uses - s.net_output - (1.0 - m.cal().delta_k) * s.capital);
}

// Abatement along the path that stays in shock z.
std::vector<double> simulate_mu(const ValuePolicySet& set, int z)
{
    std::vector<double> mu;
    std::vector<double> x = set.model.initial_state();
    for (int t = 0; t < set.horizon(); ++t) {
        const auto cont = continuation_after(set, t);
        const NodeSolution s = node_equilibrium(set.model, set.regime, t, z, x, cont.get());
        mu.push_back(s.mu);
        x = s.next_state;
    }
    return mu;
}

} // namespace

TEST_CASE("terminal node")
{
    const Model m(tiny_calibration(), Policy::OT);
    const auto x = m.initial_state();
    const NodeSolution s = terminal_node(m, 2, 1, x);
    CHECK(s.mu == 0.0);
    const int htm = m.num_classes() - 1;
    REQUIRE(m.trader_slot(htm) == -1);
    const auto& p = m.classes()[htm].profile;
    CHECK(s.consumption[htm] == doctest::Approx(s.prices.wage * s.damage[htm] * p.labor_endowment).epsilon(1e-14));
    CHECK(market_gap(m, s) < 1e-12);
}

TEST_CASE("cost shares")
{
    const std::vector<double> x{1.0, 0.6, 0.3};
    const std::vector<double> q{0.2, 0.05, 0.9};
    const std::vector<int> n{1, 2, 1};
    std::vector<double> c(3), s(3);
    REQUIRE(solve_cost_shares(x, q, n, 0.05, 5.0, c, s));
    double total = 0.0;
    for (int h = 0; h < 3; ++h) {
        total += n[h] * s[h];
        CHECK(c[h] == doctest::Approx(x[h] - s[h] * 0.05).epsilon(1e-14));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    // Shares proportional to q / u'(c).
    for (int h = 1; h < 3; ++h)
        CHECK(s[h] / s[0] == doctest::Approx(q[h] * std::pow(c[h], 5.0) / (q[0] * std::pow(c[0], 5.0))).epsilon(1e-10));
    // Infeasible: cost exceeds resources.
    CHECK_FALSE(solve_cost_shares(x, q, n, 5.0, 5.0, c, s));
}

TEST_CASE("marginal benefit matches a one-step finite difference")
{
    const Model m(tiny_calibration(), Policy::OT);
    const TerminalContinuation next(m);
    const auto x = m.initial_state();
    const int t = 1, z = 1;
    const NodeContext ctx = m.context(t, z, x);
    const std::vector<double> savings{ctx.holdings[0] * 0.9, ctx.holdings[1] * 1.1};
    const double mu = 0.1;
    const auto q = marginal_q(m, t, z, x, mu, savings, next);

    auto expected_value = [&](double a, int c) {
        const ClimateState nc =
            carbon_step(ctx.climate, emissions(a, ctx.output, m.cal().emission_intensity_at(t)), m.cal().carbon);
        std::vector<double> nx(savings);
        nx.push_back(nc.s1);
        nx.push_back(nc.s2);
        double ev = 0.0;
        const auto row = m.cal().ecs.row(t, z);
        for (int zn = 0; zn < m.num_shocks(); ++zn) ev += row[zn] * terminal_node(m, t + 1, zn, nx).value[c];
        return m.cal().beta * ev;
    };
    const double h = 1e-5;
    for (int c = 0; c < m.num_classes(); ++c) {
        const double fd = (expected_value(mu + h, c) - expected_value(mu - h, c)) / (2.0 * h);
        CHECK(q[c] == doctest::Approx(fd).epsilon(1e-7));
        CHECK(q[c] > 0.0);
    }
}

TEST_CASE("node invariants")
{
    const Model m(tiny_calibration(), Policy::OT);
    const TerminalContinuation next(m);
    const auto x = m.initial_state();
    for (Policy p : {Policy::OT, Policy::NT, Policy::LF}) {
        const Model mp(tiny_calibration(), p);
        const NodeSolution s = node_equilibrium(mp, {p, 0}, 1, 0, x, &next);
        CAPTURE(to_string(p));
        CHECK(market_gap(mp, s) < 1e-10);
        CHECK(s.emissions == doctest::Approx((1.0 - s.mu) * mp.cal().emission_intensity_at(1) * s.output));
        double transfers = 0.0;
        for (int c = 0; c < mp.num_classes(); ++c) transfers += mp.classes()[c].count * s.transfers[c];
        CHECK(std::abs(transfers) < 1e-12);
        if (p == Policy::LF) CHECK(s.mu == 0.0);
        else CHECK(s.mu > 0.0);
        for (double r : s.euler_residual) CHECK(std::abs(r) < 1e-9);
    }
}

TEST_CASE("no damages: no abatement, regimes coincide")
{
    SolveOptions opt;
    opt.level = 2;
    std::vector<ValuePolicySet> sets;
    for (Policy p : {Policy::LF, Policy::NT, Policy::OT}) sets.push_back(solve_regime(Model(no_damage(), p), {p, 0}, opt));
    const Model& m = sets[0].model;
    const auto x = m.initial_state();
    for (const auto& set : sets)
        for (int t = 0; t < m.horizon(); ++t)
            for (int z = 0; z < m.num_shocks(); ++z) {
                const auto cont = continuation_after(set, t);
                const NodeSolution s = node_equilibrium(set.model, set.regime, t, z, x, cont.get());
                CHECK(s.mu == 0.0);
                for (double th : s.transfers) CHECK(std::abs(th) < 1e-14);
                const auto ref = node_equilibrium(m, sets[0].regime, t, z, x, continuation_after(sets[0], t).get());
                for (int c = 0; c < m.num_classes(); ++c)
                    CHECK(s.consumption[c] == doctest::Approx(ref.consumption[c]).epsilon(1e-12));
            }
}

TEST_CASE("solver matches the brute-force tree")
{
    for (Policy p : {Policy::LF, Policy::NT, Policy::OT, Policy::CM}) {
        CAPTURE(to_string(p));
        const OracleCheck c = compare_with_oracle(tiny_calibration(), p, 3);
        CHECK(c.oracle_residual < 1e-10);
        CHECK(c.mu_gap < 1e-6);
        CHECK(c.consumption_gap < 1e-6);
        CHECK(c.euler < 1e-3);
    }
}

TEST_CASE("oracle tree properties")
{
    const Calibration cal = tiny_calibration();
    const TreeSolution lf = brute_force_tree(cal, {Policy::LF, 0}, 1);
    const TreeSolution ot = brute_force_tree(cal, {Policy::OT, 0}, 1);
    REQUIRE(lf.nodes.size() == 3);  // t = 0 and both t = 1 events
    for (const auto& n : lf.nodes) CHECK(n.mu == 0.0);
    // OT improves on laissez-faire for every agent at the root.
    const std::vector<int> root{1};
    for (std::size_t h = 0; h < cal.agents.size(); ++h) CHECK(ot.at(root).value[h] > lf.at(root).value[h]);
    CHECK_THROWS_AS(brute_force_tree(make_calibration(Variant::BM, std::vector<double>(31, 0.3)), {Policy::OT, 0}, 0),
                    DomainError);
}

TEST_CASE("Theorem 1 at sampled nodes")
{
    SolveOptions opt;
    const ValuePolicySet ot = solve_regime(Model(tiny_calibration(), Policy::OT), {Policy::OT, 0}, opt);
    const TheoremOneCheck th = theorem_one_suite(ot, 100, 5);
    CHECK(th.nodes == 100);
    CHECK(th.worst_gain >= -1e-8);
    CHECK(th.strict);
    CHECK(th.transfer_sum < 1e-10);
    CHECK(th.unanimity < 1e-6);
}

TEST_CASE("delayed abatement")
{
    SolveOptions opt;
    opt.level = 2;
    const ValuePolicySet d = solve_regime(Model(tiny_calibration(), Policy::OT), {Policy::OT, 1}, opt);
    const auto x = d.model.initial_state();
    const auto cont = continuation_after(d, 0);
    CHECK(node_equilibrium(d.model, d.regime, 0, 0, x, cont.get()).mu == 0.0);
}

TEST_CASE("policy set text round trip")
{
    SolveOptions opt;
    opt.level = 2;
    const ValuePolicySet s = solve_regime(Model(tiny_calibration(), Policy::NT), {Policy::NT, 0}, opt);
    std::stringstream ss;
    write_policy_set(ss, s);
    const ValuePolicySet r = read_policy_set(ss);
    CHECK(r.regime == s.regime);
    const auto x = s.model.initial_state();
    for (int t = 0; t < s.horizon(); ++t)
        for (int z = 0; z < s.num_shocks(); ++z)
            CHECK(r.slices[t][z].abatement.eval(x) == s.slices[t][z].abatement.eval(x));
}

TEST_CASE("complete-markets abatement does not depend on the wealth split")
{
    Calibration a = tiny_calibration(), b = tiny_calibration();
    a.initial_wealth_share = {0.9, 0.1, 0.0};
    b.initial_wealth_share = {0.3, 0.7, 0.0};
    SolveOptions opt;
    opt.level = 2;
    const ValuePolicySet sa = solve_regime(Model(a, Policy::CM), {Policy::CM, 0}, opt);
    const ValuePolicySet sb = solve_regime(Model(b, Policy::CM), {Policy::CM, 0}, opt);
    for (int z = 0; z < 2; ++z) {
        const auto pa = simulate_mu(sa, z), pb = simulate_mu(sb, z);
        CHECK(pa == pb);
    }
}
