#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ccs/climate.hpp"
#include "ccs/errors.hpp"

using namespace ccs;

TEST_CASE("carbon step")
{
    CarbonParams p;
    const ClimateState a = carbon_step({118.0, 684.0}, 0.0, p);
    CHECK(a.s1 == doctest::Approx(118.0).epsilon(1e-14));
    CHECK(a.s2 == doctest::Approx(663.48).epsilon(1e-14));

    const ClimateState b = carbon_step({0.0, 0.0}, 100.0, p);
    CHECK(b.s1 == doctest::Approx(20.0));
    CHECK(b.s2 == doctest::Approx(20.0));

    p.delta_s2 = 1.0;
    const ClimateState c = carbon_step({118.0, 684.0}, 0.0, p);
    CHECK(c.s1 == 118.0);
    CHECK(c.s2 == 684.0);
}

TEST_CASE("carbon step is linear in emissions and stocks")
{
    const CarbonParams p;
    for (double e : {0.0, 3.5, 40.0}) {
        const ClimateState x{200.0, 700.0}, y{50.0, 10.0};
        const ClimateState lhs = carbon_step({x.s1 + y.s1, x.s2 + y.s2}, e, p);
        const ClimateState r1 = carbon_step(x, e, p), r2 = carbon_step(y, 0.0, p);
        CHECK(lhs.s1 == doctest::Approx(r1.s1 + r2.s1).epsilon(1e-14));
        CHECK(lhs.s2 == doctest::Approx(r1.s2 + r2.s2).epsilon(1e-14));
    }
}

TEST_CASE("temperature")
{
    const CarbonParams p;
    CHECK(temperature({300.0, 281.0}, 4.0, p) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(temperature({600.0, 562.0}, 3.1, p) == doctest::Approx(3.1));
    CHECK(temperature({1000.0, 1324.0}, 1.1, p) == doctest::Approx(2.2));
    CHECK_THROWS_AS(temperature({0.0, 0.0}, 3.0, p), DomainError);

    const ClimateState s{150.0, 700.0};
    const double h = 1e-4;
    const double fd = (temperature({s.s1 + h, s.s2}, 3.0, p) - temperature({s.s1 - h, s.s2}, 3.0, p)) / (2 * h);
    CHECK(temperature_slope(s, 3.0) == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("ECS transition rows")
{
    const EcsProcess ecs = EcsProcess::standard(30);
    REQUIRE(ecs.size() == 6);
    for (int z = 0; z < 6; ++z)
        for (double q : ecs.row(0, z)) CHECK(q == doctest::Approx(1.0 / 6.0));

    const auto r2 = ecs.row(2, 0);
    CHECK(r2[0] == doctest::Approx(0.5));
    for (int k = 1; k < 6; ++k) CHECK(r2[k] == doctest::Approx(0.1));

    const auto r30 = ecs.row(30, 2);
    CHECK(r30[2] == doctest::Approx(0.999225).epsilon(1e-6));
    CHECK(r30[0] == doctest::Approx(1.551e-4).epsilon(1e-3));

    for (int t = 0; t <= 30; ++t)
        for (int z = 0; z < 6; ++z) {
            const auto row = ecs.row(t, z);
            CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
            for (double q : row) CHECK(q >= 0.0);
        }
    // Persistence rises over time.
    for (int t = 2; t < 30; ++t) CHECK(ecs.stay_probability(t + 1) > ecs.stay_probability(t));
}
