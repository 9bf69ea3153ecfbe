#include "ccs/solve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <random>
#include <sstream>

#include <omp.h>

#include "ccs/errors.hpp"

namespace ccs {

int solver_threads()
{
    if (const char* env = std::getenv("CCS_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return omp_get_max_threads();
}

std::unique_ptr<Continuation> continuation_after(const ValuePolicySet& set, int t)
{
    if (t + 1 >= set.horizon()) return std::make_unique<TerminalContinuation>(set.model);
    return std::make_unique<SliceContinuation>(set.model, set.slices.at(t + 1));
}

namespace {

void say(const SolveOptions& opt, const std::string& msg)
{
    if (opt.log) opt.log(msg);
}

std::vector<int> levels_for(const Model& m, const SolveOptions& opt)
{
    if (!opt.levels.empty()) {
        if (static_cast<int>(opt.levels.size()) != m.state_dimension())
            throw ConfigError("per-dimension levels must match the state dimension");
        return opt.levels;
    }
    return std::vector<int>(m.state_dimension(), opt.level);
}

// Deterministic uniform draw in [0, 1).
double uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int draw_shock(std::mt19937_64& rng, const std::vector<double>& p)
{
    const double u = uniform(rng);
    double acc = 0.0;
    for (std::size_t z = 0; z < p.size(); ++z) {
        acc += p[z];
        if (u < acc) return static_cast<int>(z);
    }
    return static_cast<int>(p.size()) - 1;
}

double next_gross_return(const Model& m, const Regime& r, int t_next, double capital,
                         const ClimateState& climate, int z_next, double mu_next)
{
    const auto& cal = m.cal();
    const double temp = temperature(climate, cal.ecs.value(z_next), cal.carbon);
    const double labor = m.labor_at(temp);
    const double mpk = cal.alpha * std::pow(capital, cal.alpha - 1.0) * std::pow(labor, 1.0 - cal.alpha);
    const bool compensated = r.transfers(t_next) || !r.abates(t_next);
    const double a = compensated ? 1.0 : abatement_factor(mu_next, cal.phi1, cal.phi2);
    return 1.0 - cal.delta_k + a * mpk;
}

struct InterpolatedStep {
    double mu = 0.0;
    std::vector<double> next_state;
};

// One step of the interpolated policies, used for bounds and diagnostics.
InterpolatedStep interpolated_step(const ValuePolicySet& set, int t, int z, std::span<const double> x)
{
    const Model& m = set.model;
    const auto& cal = m.cal();
    const auto& slice = set.slices[t][z];
    const NodeContext ctx = m.context(t, z, x);
    InterpolatedStep s;
    s.mu = set.regime.abates(t) ? std::clamp(slice.abatement.eval(x), 0.0, 1.0) : 0.0;
    for (int i = 0; i < m.num_traders(); ++i)
        s.next_state.push_back(slice.savings[i].eval(x));
    const ClimateState next =
        carbon_step(ctx.climate, emissions(s.mu, ctx.output, ctx.intensity), cal.carbon);
    s.next_state.push_back(next.s1);
    s.next_state.push_back(next.s2);
    return s;
}

GridSpec box_around(const std::vector<double>& lo, const std::vector<double>& hi,
                    const std::vector<int>& levels)
{
    GridSpec g{lo, hi, levels};
    g.validate();
    return g;
}

} // namespace

std::vector<PolicySlice> solve_terminal(const Model& m, const GridSpec& spec)
{
    auto grid = std::make_shared<const SmolyakGrid>(spec);
    const auto nodes = grid->nodes();
    const int nc = m.num_classes();
    const int t = m.horizon();
    std::vector<PolicySlice> out(m.num_shocks());
    for (int z = 0; z < m.num_shocks(); ++z) {
        std::vector<std::vector<double>> v(nc), c(nc);
        for (const auto& x : nodes) {
            const NodeSolution s = terminal_node(m, t, z, x);
            for (int h = 0; h < nc; ++h) {
                v[h].push_back(s.value[h]);
                c[h].push_back(s.consumption[h]);
            }
        }
        auto& slice = out[z];
        for (int h = 0; h < nc; ++h) {
            slice.value.push_back(fit(grid, v[h]));
            slice.consumption.push_back(fit(grid, c[h]));
        }
        const std::vector<double> zero(nodes.size(), 0.0);
        for (int i = 0; i < m.num_traders(); ++i) slice.savings.push_back(fit(grid, zero));
        slice.abatement = fit(grid, zero);
    }
    return out;
}

std::vector<GridSpec> initial_bounds(const Model& m, const std::vector<int>& levels)
{
    const auto& cal = m.cal();
    const int p = m.num_traders();
    const auto x0 = m.initial_state();
    const double y_star = cal.steady_state_output();

    // Carbon envelopes from deterministic paths with extreme output and abatement.
    std::vector<ClimateState> hi_path{cal.initial_climate}, lo_path{cal.initial_climate};
    for (int t = 0; t < cal.horizon; ++t) {
        const double e = cal.emission_intensity_at(t);
        hi_path.push_back(carbon_step(hi_path.back(), emissions(0.0, 1.15 * y_star, e), cal.carbon));
        lo_path.push_back(carbon_step(lo_path.back(), emissions(0.7, 0.8 * y_star, e), cal.carbon));
    }

    std::vector<GridSpec> grids;
    for (int t = 0; t <= cal.horizon; ++t) {
        std::vector<double> lo(p + 2), hi(p + 2);
        for (int i = 0; i < p; ++i) {
            lo[i] = x0[i] * (t == 0 ? 0.97 : 0.5);
            hi[i] = x0[i] * (t == 0 ? 1.03 : 1.7);
        }
        const double pad = t == 0 ? 0.01 : 0.02;
        lo[p] = lo_path[t].s1 * (1.0 - pad);
        hi[p] = hi_path[t].s1 * (1.0 + pad);
        lo[p + 1] = lo_path[t].s2 * (1.0 - pad);
        hi[p + 1] = hi_path[t].s2 * (1.0 + pad);
        grids.push_back(box_around(lo, hi, levels));
    }
    return grids;
}

std::vector<GridSpec> simulated_bounds(const ValuePolicySet& set, const std::vector<int>& levels,
                                       int paths, std::uint64_t seed)
{
    const Model& m = set.model;
    const auto& cal = m.cal();
    const int horizon = m.horizon();
    const int d = m.state_dimension();
    const int p = m.num_traders();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> lo(horizon + 1, std::vector<double>(d, inf));
    std::vector<std::vector<double>> hi(horizon + 1, std::vector<double>(d, -inf));

    auto record = [&](int t, const std::vector<double>& x) {
        for (int k = 0; k < d; ++k) {
            lo[t][k] = std::min(lo[t][k], x[k]);
            hi[t][k] = std::max(hi[t][k], x[k]);
        }
    };
    auto run = [&](const std::vector<int>& shocks) {
        std::vector<double> x = m.initial_state();
        record(0, x);
        for (int t = 0; t < horizon; ++t) {
            x = interpolated_step(set, t, shocks[t], x).next_state;
            record(t + 1, x);
        }
    };

    for (int z = 0; z < m.num_shocks(); ++z) run(std::vector<int>(horizon + 1, z));
    std::mt19937_64 rng(seed);
    for (int k = 0; k < paths; ++k) {
        std::vector<int> shocks{draw_shock(rng, cal.ecs.initial_distribution())};
        for (int t = 0; t < horizon; ++t) shocks.push_back(draw_shock(rng, cal.ecs.row(t, shocks.back())));
        run(shocks);
    }

    const double y_star = cal.steady_state_output();
    std::vector<GridSpec> grids;
    for (int t = 0; t <= horizon; ++t) {
        std::vector<double> a(d), b(d);
        for (int k = 0; k < d; ++k) {
            const double center = 0.5 * (lo[t][k] + hi[t][k]);
            double floor;
            if (k < p)
                floor = (t == 0 ? 0.03 : 0.04) * center;
            else if (t == 0)
                floor = 0.01 * center;
            else
                floor = std::max(0.01 * center, 0.3 * cal.carbon.xi1 *
                                                    (k == p ? cal.carbon.xi2 : 1.0 - cal.carbon.xi2) *
                                                    cal.emission_intensity_at(t - 1) * y_star);
            const double half = std::max(0.75 * (hi[t][k] - lo[t][k]), floor);
            a[k] = center - half;
            b[k] = center + half;
        }
        for (int i = 0; i < p; ++i) a[i] = std::max(a[i], 1e-3 * b[i]);
        grids.push_back(box_around(a, b, levels));
    }

    // Each box must contain where the nodes of the previous box go, or the
    // solver would lean on extrapolated continuations.
    auto include = [d](GridSpec& box, const std::vector<double>& x) {
        for (int k = 0; k < d; ++k) {
            const double margin = 0.02 * (box.hi[k] - box.lo[k]);
            box.lo[k] = std::min(box.lo[k], x[k] - margin);
            box.hi[k] = std::max(box.hi[k], x[k] + margin);
        }
    };
    std::vector<std::unique_ptr<Continuation>> cont(horizon);
    for (int t = 0; t < horizon; ++t) cont[t] = continuation_after(set, t);
    for (int t = 0; t < horizon; ++t) {
        const auto& g = grids[t];
        auto& next = grids[t + 1];
        std::vector<double> corner(d);
        for (int mask = 0; mask < (1 << d); ++mask) {
            for (int k = 0; k < d; ++k) corner[k] = (mask >> k) & 1 ? g.hi[k] : g.lo[k];
            for (int z = 0; z < m.num_shocks(); ++z) {
                const auto step = interpolated_step(set, t, z, corner);
                include(next, step.next_state);
                // The abatement search starts from mu = 0, so its savings must be covered too.
                if (set.regime.abates(t) && cont[t]) {
                    std::vector<double> guess(step.next_state.begin(), step.next_state.begin() + p);
                    try {
                        include(next, node_at_abatement(m, set.regime, t, z, corner, *cont[t], 0.0, {}, guess)
                                          .next_state);
                    } catch (const SolverError&) {
                    }
                }
            }
        }
        for (int i = 0; i < p; ++i) next.lo[i] = std::max(next.lo[i], 1e-3 * next.hi[i]);
    }
    return grids;
}

std::vector<double> interpolated_next_state(const ValuePolicySet& set, int t, int z,
                                           std::span<const double> x)
{
    return interpolated_step(set, t, z, x).next_state;
}

double interpolated_euler_error(const ValuePolicySet& set, int t, int z, std::span<const double> x)
{
    const Model& m = set.model;
    const auto& cal = m.cal();
    if (t >= m.horizon() || m.num_traders() == 0) return 0.0;
    const auto& slice = set.slices[t][z];
    const InterpolatedStep step = interpolated_step(set, t, z, x);
    const int p = m.num_traders();
    double capital = 0.0;
    for (int i = 0; i < p; ++i) capital += m.classes()[m.trader_class(i)].count * step.next_state[i];
    const ClimateState next{step.next_state[p], step.next_state[p + 1]};
    std::vector<NextPoint> pts;
    continuation_after(set, t)->evaluate(step.next_state, pts);
    const auto row = cal.ecs.row(t, z);
    double worst = 0.0;
    for (int i = 0; i < p; ++i) {
        const int c = m.trader_class(i);
        const double cons = slice.consumption[c].eval(x);
        double rhs = 0.0;
        for (int zn = 0; zn < m.num_shocks(); ++zn) {
            if (row[zn] == 0.0) continue;
            rhs += row[zn] *
                   next_gross_return(m, set.regime, t + 1, capital, next, zn, pts[zn].abatement) *
                   std::pow(pts[zn].consumption[c], -cal.sigma);
        }
        const double err = std::abs(1.0 - cal.beta * rhs * std::pow(cons, cal.sigma));
        worst = std::max(worst, std::isfinite(err) ? err : 1e300);
    }
    return worst;
}

namespace {

// Newton start for the savings at a node, kept inside the next period's box: far
// outside it the extrapolated continuation can have spurious Euler roots.
std::vector<double> savings_guess(const ValuePolicySet& set,
                                  const std::vector<std::vector<PolicySlice>>& previous, int t,
                                  int z, std::span<const double> x)
{
    const Model& m = set.model;
    std::vector<double> g(m.num_traders());
    for (int i = 0; i < m.num_traders(); ++i) {
        g[i] = previous.empty() ? x[i] : previous[t][z].savings[i].eval(x);
        if (t + 1 < m.horizon()) {
            const auto& box = set.grids[t + 1];
            const double margin = 0.05 * (box.hi[i] - box.lo[i]);
            g[i] = std::clamp(g[i], box.lo[i] + margin, box.hi[i] - margin);
        }
        if (!(g[i] > 0.0)) g[i] = x[i];
    }
    return g;
}

} // namespace

void solve_on_grids(ValuePolicySet& set, const SolveOptions& opt)
{
    const Model& m = set.model;
    const int horizon = m.horizon();
    const int nz = m.num_shocks();
    const int nc = m.num_classes();
    const int p = m.num_traders();
    // A previous solve (on other bounds) supplies starting points for Newton.
    std::vector<std::vector<PolicySlice>> previous;
    if (static_cast<int>(set.slices.size()) == horizon + 1) previous = std::move(set.slices);
    set.slices.assign(horizon + 1, {});
    set.report.periods.assign(horizon + 1, {});
    set.slices[horizon] = solve_terminal(m, set.grids[horizon]);
    set.report.periods[horizon].t = horizon;
    set.report.periods[horizon].nodes = set.grids[horizon].dimension() > 0
                                            ? SmolyakBasis::count(set.grids[horizon].levels) * nz
                                            : 0;
    omp_set_num_threads(solver_threads());

    for (int t = horizon - 1; t >= 0; --t) {
        auto grid = std::make_shared<const SmolyakGrid>(set.grids[t]);
        const auto nodes = grid->nodes();
        const std::size_t nn = nodes.size();
        const auto cont = continuation_after(set, t);
        std::vector<NodeSolution> sol(nz * nn);
        std::vector<std::exception_ptr> errors(nz * nn);

#pragma omp parallel for schedule(dynamic, 1)
        for (long k = 0; k < static_cast<long>(nz * nn); ++k) {
            const int z = static_cast<int>(k / nn);
            const std::size_t n = k % nn;
            try {
                const auto guess = savings_guess(set, previous, t, z, nodes[n]);
                sol[k] = node_equilibrium(m, set.regime, t, z, nodes[n], cont.get(), opt.node, guess);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
        for (std::size_t k = 0; k < errors.size(); ++k) {
            if (!errors[k]) continue;
            try {
                std::rethrow_exception(errors[k]);
            } catch (const SolverError& e) {
                std::ostringstream os;
                os << e.what() << " [" << set.regime.tag() << ", node " << k % nn << " of " << nn << "]";
                throw SolverError(os.str());
            }
        }

        auto& period = set.report.periods[t];
        period.t = t;
        period.nodes = nz * nn;
        auto& slices = set.slices[t];
        slices.assign(nz, {});
        for (int z = 0; z < nz; ++z) {
            std::vector<double> buf(nn);
            auto column = [&](auto get) {
                for (std::size_t n = 0; n < nn; ++n) buf[n] = get(sol[z * nn + n]);
                return fit(grid, buf);
            };
            auto& s = slices[z];
            for (int c = 0; c < nc; ++c) {
                s.value.push_back(column([c](const NodeSolution& x) { return x.value[c]; }));
                s.consumption.push_back(column([c](const NodeSolution& x) { return x.consumption[c]; }));
            }
            for (int i = 0; i < p; ++i) {
                const int c = m.trader_class(i);
                s.savings.push_back(column([c](const NodeSolution& x) { return x.savings[c]; }));
            }
            s.abatement = column([](const NodeSolution& x) { return x.mu; });
            for (std::size_t n = 0; n < nn; ++n) {
                const auto& x = sol[z * nn + n];
                for (double r : x.euler_residual) period.euler_at_nodes = std::max(period.euler_at_nodes, r);
                period.max_abatement = std::max(period.max_abatement, x.mu);
            }
        }
        say(opt, set.regime.tag() + " t=" + std::to_string(t) + " nodes=" + std::to_string(nz * nn) +
                     " max mu=" + std::to_string(period.max_abatement));
    }
}

namespace {

// Off-grid Euler errors and analytic-versus-difference value gradients.
void diagnose(ValuePolicySet& set, const SolveOptions& opt)
{
    const Model& m = set.model;
    std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
    for (int t = 0; t < m.horizon(); ++t) {
        const auto& g = set.grids[t];
        const int d = g.dimension();
        auto& period = set.report.periods[t];
        for (int k = 0; k < opt.off_grid_points; ++k) {
            std::vector<double> x(d);
            for (int j = 0; j < d; ++j) x[j] = g.lo[j] + (g.hi[j] - g.lo[j]) * uniform(rng);
            const int z = static_cast<int>(uniform(rng) * m.num_shocks());
            period.euler_off_grid = std::max(period.euler_off_grid, interpolated_euler_error(set, t, z, x));

            if (k % 10 == 0) {
                const auto& f = set.slices[t][z].value[0];
                const auto grad = f.gradient(x);
                for (int j = 0; j < d; ++j) {
                    const double h = 1e-5 * (g.hi[j] - g.lo[j]);
                    auto xp = x, xm = x;
                    xp[j] += h;
                    xm[j] -= h;
                    const double fd = (f.eval(xp) - f.eval(xm)) / (2.0 * h);
                    const double scale = std::max(std::abs(grad[j]), 1e-8);
                    period.gradient_gap = std::max(period.gradient_gap, std::abs(fd - grad[j]) / scale);
                }
            }
        }
    }
}

} // namespace

ValuePolicySet solve_regime(const Model& model, const Regime& regime, const SolveOptions& opt)
{
    if (regime.delay < 0) throw ConfigError("delay must be nonnegative");
    const auto start = std::chrono::steady_clock::now();
    const long extrap0 = extrapolation_count();
    const auto levels = levels_for(model, opt);

    ValuePolicySet set{model, regime, {}, {}, {}};
    if (!opt.fixed_grids.empty()) {
        if (static_cast<int>(opt.fixed_grids.size()) != model.horizon() + 1)
            throw ConfigError("fixed grids must cover periods 0..T");
        set.grids = opt.fixed_grids;
        solve_on_grids(set, opt);
        set.report.passes = 1;
    } else {
        std::vector<int> coarse = levels;
        if (opt.adaptive_bounds)
            for (auto& l : coarse) l = std::max(2, l - 1);
        set.grids = initial_bounds(model, coarse);
        solve_on_grids(set, opt);
        set.report.passes = 1;
        if (opt.adaptive_bounds) {
            say(opt, regime.tag() + ": refining bounds from simulated paths");
            set.grids = simulated_bounds(set, levels, opt.bound_paths, opt.seed);
            solve_on_grids(set, opt);
            set.report.passes = 2;
        }
    }
    diagnose(set, opt);
    set.report.extrapolations = extrapolation_count() - extrap0;
    set.report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return set;
}

} // namespace ccs
