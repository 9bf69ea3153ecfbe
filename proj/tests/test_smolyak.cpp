#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "ccs/smolyak.hpp"

using namespace ccs;

namespace {

// Independent node count: union of the tensor grids of nested Chebyshev extrema
// over all multi-indices with |i| <= d + level (i_k >= 1).
std::size_t union_count(int d, int level)
{
    auto points = [](int i) {
        std::vector<double> p;
        if (i == 1) return std::vector<double>{0.0};
        const int m = (1 << (i - 1)) + 1;
        for (int j = 0; j < m; ++j) p.push_back(-std::cos(M_PI * j / (m - 1)));
        return p;
    };
    std::set<std::vector<long long>> seen;
    std::vector<int> idx(d, 1);
    while (true) {
        int sum = 0;
        for (int v : idx) sum += v;
        if (sum <= d + level) {
            std::vector<std::vector<double>> axes;
            for (int v : idx) axes.push_back(points(v));
            std::vector<std::size_t> pos(d, 0);
            while (true) {
                std::vector<long long> key;
                for (int k = 0; k < d; ++k) key.push_back(std::llround(axes[k][pos[k]] * 1e9));
                seen.insert(key);
                int k = 0;
                while (k < d && ++pos[k] == axes[k].size()) pos[k++] = 0;
                if (k == d) break;
            }
        }
        int k = 0;
        while (k < d && ++idx[k] > level + 1) idx[k++] = 1;
        if (k == d) break;
    }
    return seen.size();
}

std::vector<double> random_point(const GridSpec& s, std::mt19937_64& rng, double shrink = 1.0)
{
    std::vector<double> x;
    for (int k = 0; k < s.dimension(); ++k) {
        const double mid = 0.5 * (s.lo[k] + s.hi[k]), half = 0.5 * (s.hi[k] - s.lo[k]) * shrink;
        x.push_back(std::uniform_real_distribution<double>(mid - half, mid + half)(rng));
    }
    return x;
}

Interpolant fit_function(const GridSpec& spec, const std::function<double(const std::vector<double>&)>& f)
{
    const SmolyakGrid grid(spec);
    std::vector<double> v;
    for (const auto& x : grid.nodes()) v.push_back(f(x));
    return fit(spec, v);
}

} // namespace

TEST_CASE("node counts")
{
    const SmolyakGrid g1(GridSpec::isotropic({-1.0}, {1.0}, 1));
    REQUIRE(g1.size() == 3);
    std::multiset<double> nodes;
    for (const auto& x : g1.nodes()) nodes.insert(std::round(x[0] * 1e12) / 1e12);
    CHECK(nodes == std::multiset<double>{-1.0, 0.0, 1.0});

    CHECK(union_count(2, 2) == 13);
    CHECK(union_count(4, 2) == 41);
    for (int d = 1; d <= 5; ++d)
        for (int level = 1; level <= 4; ++level) {
            CAPTURE(d);
            CAPTURE(level);
            CHECK(SmolyakBasis::count(std::vector<int>(d, level)) == union_count(d, level));
            if (SmolyakBasis::count(std::vector<int>(d, level)) < 2000)
                CHECK(SmolyakGrid(GridSpec::isotropic(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0), level)).size() ==
                      union_count(d, level));
        }
}

TEST_CASE("interpolation property")
{
    const GridSpec spec = GridSpec::isotropic({0.5, -3.0, 100.0}, {2.0, 4.0, 900.0}, 3);
    auto f = [](const std::vector<double>& x) { return std::exp(0.3 * x[0]) * std::sin(x[1]) + std::log(x[2]); };
    const Interpolant p = fit_function(spec, f);
    double worst = 0.0;
    for (const auto& x : p.grid().nodes()) worst = std::max(worst, std::abs(p.eval(x) - f(x)));
    CHECK(worst < 1e-10);
}

TEST_CASE("basis exactness")
{
    const GridSpec spec = GridSpec::isotropic({-2.0, 1.0}, {3.0, 5.0}, 2);
    std::mt19937_64 rng(7);

    const Interpolant c = fit_function(spec, [](const auto&) { return 4.25; });
    const Interpolant lin = fit_function(spec, [](const auto& x) { return 3.0 * x[0] + 2.0 * x[1]; });
    auto poly = [](const std::vector<double>& x) { return 1.0 + x[0] - 2.0 * x[1] + 0.5 * x[0] * x[0] * x[1]; };
    const Interpolant q = fit_function(spec, poly);
    for (int i = 0; i < 100; ++i) {
        const auto x = random_point(spec, rng);
        CHECK(c.eval(x) == doctest::Approx(4.25).epsilon(1e-12));
        CHECK(lin.eval(x) == doctest::Approx(3.0 * x[0] + 2.0 * x[1]).epsilon(1e-12));
        CHECK(q.eval(x) == doctest::Approx(poly(x)).epsilon(1e-10));
        const auto gc = c.gradient(x);
        CHECK(std::abs(gc[0]) < 1e-12);
        CHECK(std::abs(gc[1]) < 1e-12);
        const auto gl = lin.gradient(x);
        CHECK(gl[0] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(gl[1] == doctest::Approx(2.0).epsilon(1e-12));
    }
}

TEST_CASE("smooth function accuracy")
{
    const GridSpec spec = GridSpec::isotropic({-1.0, -1.0}, {1.0, 1.0}, 4);
    auto f = [](const std::vector<double>& x) { return std::sin(x[0]) * std::cos(x[1]); };
    const Interpolant p = fit_function(spec, f);
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = random_point(spec, rng);
        worst = std::max(worst, std::abs(p.eval(x) - f(x)));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("analytic gradient against central differences")
{
    const GridSpec spec = GridSpec::isotropic({0.1, 0.2, 50.0, 600.0}, {0.6, 0.9, 400.0, 1500.0}, 3);
    auto f = [](const std::vector<double>& x) {
        return std::pow(x[0] + x[1], 0.3) - 1e-6 * x[2] * x[3] + std::sin(x[3] / 300.0);
    };
    const Interpolant p = fit_function(spec, f);
    std::mt19937_64 rng(13);
    const double h = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto x = random_point(spec, rng, 0.9);
        const auto g = p.gradient(x);
        for (int k = 0; k < 4; ++k) {
            auto a = x, b = x;
            const double step = h * (spec.hi[k] - spec.lo[k]);
            a[k] += step;
            b[k] -= step;
            const double fd = (p.eval(a) - p.eval(b)) / (2.0 * step);
            worst = std::max(worst, std::abs(g[k] - fd) / std::max(1.0, std::abs(g[k])));
        }
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("anisotropic grid and text round trip")
{
    GridSpec spec{{0.0, 0.0, 0.0}, {1.0, 2.0, 3.0}, {3, 1, 2}};
    auto f = [](const std::vector<double>& x) { return std::exp(x[0]) + x[1] + x[2] * x[2]; };
    const Interpolant p = fit_function(spec, f);
    std::stringstream ss;
    p.write(ss);
    const Interpolant r = Interpolant::read(ss);
    CHECK(r.spec() == p.spec());
    std::mt19937_64 rng(17);
    for (int i = 0; i < 20; ++i) {
        const auto x = random_point(spec, rng);
        CHECK(r.eval(x) == p.eval(x));
    }
}
