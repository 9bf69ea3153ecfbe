#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ccs/economy.hpp"

using namespace ccs;

TEST_CASE("production and prices")
{
    CHECK(potential_output(1.0, 1.0, 0.33) == 1.0);
    CHECK(potential_output(8.0, 1.0, 1.0 / 3.0) == doctest::Approx(2.0));
    CHECK(potential_output(0.216, 1.0, 0.33) == doctest::Approx(0.603073).epsilon(1e-6));

    Calibration cal = make_calibration(Variant::BM, std::vector<double>(31, 0.3));
    const Prices p = factor_prices(1.0, 1.0, 0.0, cal);
    CHECK(p.wage == doctest::Approx(0.67));
    CHECK(p.gross_return == doctest::Approx(0.76));
    CHECK(factor_prices(1.0, 1.0, 1.0, cal).wage == doctest::Approx(0.5025));
    const double mu = 0.2;
    CHECK(factor_prices(1.0, 1.0, mu, cal).wage == doctest::Approx(0.99 * 0.67));
}

TEST_CASE("abatement technology")
{
    CHECK(abatement_factor(0.0, 0.25, 2.0) == 1.0);
    CHECK(abatement_factor(0.2, 0.25, 2.0) == doctest::Approx(0.99).epsilon(1e-14));
    CHECK(abatement_factor(0.5, 0.25, 2.0) == doctest::Approx(0.9375));
    CHECK(emissions(1.0, 2.0, 0.3) == 0.0);
    CHECK(emissions(0.0, 1.0, 0.3) == doctest::Approx(0.3));
    CHECK(emissions(0.1112, 1.0, 0.3) == doctest::Approx(0.26664));
    CHECK(tax_from_abatement(0.0, 0.3, 0.25, 2.0) == 0.0);
    CHECK(tax_from_abatement(0.2, 0.3, 0.25, 2.0) == doctest::Approx(0.1 / 0.3));
    for (double mu : {0.01, 0.1, 0.37, 0.8, 0.99})
        CHECK(abatement_from_tax(tax_from_abatement(mu, 0.3, 0.25, 2.0), 0.3, 0.25, 2.0) ==
              doctest::Approx(mu).epsilon(1e-12));
}

TEST_CASE("utility")
{
    CHECK(crra_utility(1.0, 5.0) == 0.0);
    CHECK(crra_utility(2.0, 5.0) == doctest::Approx(0.234375));
    CHECK(marginal_utility(0.5, 5.0) == doctest::Approx(32.0));
}

TEST_CASE("calibration sanity")
{
    const Calibration cal = make_calibration(Variant::BM, std::vector<double>(31, 0.3));
    CHECK(abatement_factor(0.2, cal.phi1, cal.phi2) == doctest::Approx(0.99).epsilon(1e-14));

    // Agent 3 at 3 degrees and the aggregate output loss.
    CHECK(agent_damage(cal.agents[2], 3.0, cal.zeta) == doctest::Approx(0.748));
    for (const auto& a : cal.agents) CHECK(agent_damage(a, 0.0, cal.zeta) == 1.0);
    const double labor = effective_labor(cal.agents, 3.0, cal.zeta);
    CHECK(labor == doctest::Approx(0.937).epsilon(1e-12));
    // 4.27 percent: the text rounds this to "4.2 percent".
    const double loss = 1.0 - std::pow(labor, 1.0 - cal.alpha);
    CHECK(std::abs(loss - (1.0 - std::pow(0.937, 0.67))) < 1e-12);
    CHECK(loss == doctest::Approx(0.042662).epsilon(1e-4));

    double l = 0.0, lw = 0.0;
    for (const auto& a : cal.agents) {
        l += a.labor_endowment;
        lw += a.labor_endowment * a.damage_weight;
    }
    CHECK(l == doctest::Approx(1.0));
    CHECK(lw == doctest::Approx(1.0));

    const double stay = EcsProcess::standard_stay_probability(30, 6);
    CHECK(stay >= 0.9990);
    CHECK(stay <= 0.9995);

    // Decadal parameters from annual ones: beta = 0.97^10, delta_k = 1 - 0.92^10.
    CHECK(std::abs(cal.beta - std::pow(0.97, 10)) < 0.005);
    CHECK(std::abs(cal.delta_k - (1.0 - std::pow(0.92, 10))) < 0.005);

    // Steady state: beta (mpk + 1 - delta_k) = 1.
    const double k = cal.steady_state_capital();
    CHECK(cal.beta * (cal.alpha * std::pow(k, cal.alpha - 1.0) + 1.0 - cal.delta_k) == doctest::Approx(1.0));
}

TEST_CASE("calibration variants")
{
    const auto e = std::vector<double>(31, 0.3);
    const Calibration bm = make_calibration(Variant::BM, e);
    const Calibration ac = make_calibration(Variant::AC, e);
    const Calibration im = make_calibration(Variant::IM, e);
    CHECK(ac.agents[1].damage_weight == bm.agents[2].damage_weight);
    CHECK(ac.agents[2].damage_weight == bm.agents[1].damage_weight);
    CHECK(ac.agents[2].access == MarketAccess::none);
    CHECK(im.agents[0].labor_endowment == doctest::Approx(0.4));
    CHECK(im.agents[2].labor_endowment == doctest::Approx(0.2));
    CHECK(im.agents[2].damage_weight == 4.0);
    for (const auto& a : im.agents) CHECK(a.trades());

    const Calibration rep = representative_calibration(bm);
    REQUIRE(rep.agents.size() == 1);
    CHECK(rep.agents[0].labor_endowment == 1.0);
    CHECK(rep.agents[0].damage_weight == 1.0);
}
