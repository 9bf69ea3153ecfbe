#include "ccs/node.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include "ccs/errors.hpp"

namespace ccs {

// --- continuations ---------------------------------------------------------

void TerminalContinuation::evaluate(std::span<const double> state, std::vector<NextPoint>& out) const
{
    const auto& cal = model_.cal();
    const int nz = model_.num_shocks();
    const int nc = model_.num_classes();
    const int p = model_.num_traders();
    const ClimateState climate{state[p], state[p + 1]};
    out.resize(nz);

    std::vector<double> a(nc, 0.0);
    double capital = 0.0;
    for (int i = 0; i < p; ++i) a[model_.trader_class(i)] = state[i];
    for (int c = 0; c < nc; ++c) capital += model_.classes()[c].count * a[c];

    for (int z = 0; z < nz; ++z) {
        auto& pt = out[z];
        pt.value.resize(nc);
        pt.dvalue_ds1.resize(nc);
        pt.dvalue_ds2.resize(nc);
        pt.consumption.resize(nc);
        pt.abatement = 0.0;

        const double lambda = cal.ecs.value(z);
        const double temp = temperature(climate, lambda, cal.carbon);
        const double dtemp = temperature_slope(climate, lambda);
        double labor = 0.0, dlabor = 0.0;
        for (const auto& cl : model_.classes()) {
            labor += cl.count * agent_damage(cl.profile, temp, cal.zeta) * cl.profile.labor_endowment;
            dlabor += cl.count * agent_damage_slope(cl.profile, temp, cal.zeta) * cl.profile.labor_endowment;
        }
        if (!(capital > 0.0) || !(labor > 0.0)) {
            for (int c = 0; c < nc; ++c) pt.consumption[c] = -1.0;
            continue;
        }
        const double y = potential_output(capital, labor, cal.alpha);
        const double mpk = cal.alpha * y / capital;
        const double mpl = (1.0 - cal.alpha) * y / labor;
        const double dmpk = (1.0 - cal.alpha) * mpk / labor * dlabor;
        const double dmpl = -cal.alpha * mpl / labor * dlabor;
        for (int c = 0; c < nc; ++c) {
            const auto& prof = model_.classes()[c].profile;
            const double d = agent_damage(prof, temp, cal.zeta);
            const double l = d * prof.labor_endowment;
            const double cons = (1.0 - cal.delta_k + mpk) * a[c] + mpl * l;
            pt.consumption[c] = cons;
            if (cons <= 0.0) {
                pt.value[c] = -std::numeric_limits<double>::infinity();
                pt.dvalue_ds1[c] = pt.dvalue_ds2[c] = 0.0;
                continue;
            }
            const double dcons = a[c] * dmpk + l * dmpl +
                                 mpl * agent_damage_slope(prof, temp, cal.zeta) * prof.labor_endowment;
            pt.value[c] = crra_utility(cons, cal.sigma);
            const double dv = marginal_utility(cons, cal.sigma) * dcons * dtemp;
            pt.dvalue_ds1[c] = dv;
            pt.dvalue_ds2[c] = dv;
        }
    }
}

const GridSpec* SliceContinuation::domain() const
{
    return &slices_[0].abatement.spec();
}

SliceContinuation::SliceContinuation(const Model& model, const std::vector<PolicySlice>& slices)
    : model_(model), slices_(slices)
{
    if (static_cast<int>(slices_.size()) != model_.num_shocks())
        throw SolverError("continuation needs one slice per shock");
}

void SliceContinuation::evaluate(std::span<const double> state, std::vector<NextPoint>& out) const
{
    const int nz = model_.num_shocks();
    const int nc = model_.num_classes();
    const int p = model_.num_traders();
    const int dims[2] = {p, p + 1};
    thread_local BasisPoint bp;
    slices_[0].abatement.grid().evaluate(state, dims, bp);
    out.resize(nz);
    for (int z = 0; z < nz; ++z) {
        const auto& s = slices_[z];
        auto& pt = out[z];
        pt.value.resize(nc);
        pt.dvalue_ds1.resize(nc);
        pt.dvalue_ds2.resize(nc);
        pt.consumption.resize(nc);
        for (int c = 0; c < nc; ++c) {
            pt.value[c] = s.value[c].eval(bp);
            pt.dvalue_ds1[c] = s.value[c].partial(bp, 0);
            pt.dvalue_ds2[c] = s.value[c].partial(bp, 1);
            pt.consumption[c] = s.consumption[c].eval(bp);
        }
        pt.abatement = std::clamp(s.abatement.eval(bp), 0.0, 1.0);
    }
}

// --- cost shares -----------------------------------------------------------

bool solve_cost_shares(std::span<const double> resources, std::span<const double> q,
                       std::span<const int> counts, double cost, double sigma,
                       std::span<double> consumption, std::span<double> shares)
{
    const std::size_t n = resources.size();
    double qsum = 0.0;
    for (std::size_t c = 0; c < n; ++c) qsum += counts[c] * std::abs(q[c]);
    if (cost == 0.0 || qsum == 0.0) {
        for (std::size_t c = 0; c < n; ++c) {
            consumption[c] = resources[c];
            shares[c] = 0.0;
            if (!(resources[c] > 0.0)) return false;
        }
        return true;
    }
    for (std::size_t c = 0; c < n; ++c)
        if (!(resources[c] > 0.0)) return false;

    // Fast path: Newton on c_h - x_h + cost * w_h / M = 0 with w_h = q_h c_h^sigma and
    // M = sum_j n_j w_j.
    std::vector<double> cons(resources.begin(), resources.end());
    bool ok = false;
    if (n <= 8) {
        Eigen::MatrixXd jac(n, n);
        Eigen::VectorXd g(n), w(n);
        for (int it = 0; it < 40 && !ok; ++it) {
            double m = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                w[c] = q[c] * std::pow(cons[c], sigma);
                m += counts[c] * w[c];
            }
            if (!(m > 0.0)) break;
            for (std::size_t c = 0; c < n; ++c) {
                g[c] = cons[c] - resources[c] + cost * w[c] / m;
                for (std::size_t j = 0; j < n; ++j)
                    jac(c, j) = -cost * w[c] * counts[j] * sigma * w[j] / (cons[j] * m * m);
                jac(c, c) += 1.0 + cost * sigma * w[c] / (cons[c] * m);
            }
            const Eigen::VectorXd step = jac.partialPivLu().solve(-g);
            if (!step.allFinite()) break;
            double lambda = 1.0;
            for (std::size_t c = 0; c < n; ++c)
                if (cons[c] + step[c] <= 0.0) lambda = std::min(lambda, -0.5 * cons[c] / step[c]);
            double change = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                cons[c] += lambda * step[c];
                change = std::max(change, std::abs(lambda * step[c]) / resources[c]);
            }
            if (change < 1e-14) ok = true;
        }
    }

    if (!ok) {
        // Robust path (q >= 0): with M = sum_j n_j q_j c_j^sigma fixed, each c_h solves
        // c + (q_h cost / M) c^sigma = x_h; the implied share total decreases in M.
        for (std::size_t c = 0; c < n; ++c)
            if (q[c] < 0.0) return false;
        double total = 0.0;
        for (std::size_t c = 0; c < n; ++c) total += counts[c] * resources[c];
        if (!(total > cost)) return false;

        auto cons_at = [&](double m, std::size_t c) {
            if (q[c] == 0.0) return resources[c];
            const double k = q[c] * cost / m;
            double x = resources[c];
            for (int it = 0; it < 200; ++it) {
                const double g = x + k * std::pow(x, sigma) - resources[c];
                const double dg = 1.0 + k * sigma * std::pow(x, sigma - 1.0);
                const double nx = x - g / dg;
                if (!(nx > 0.0)) {
                    x *= 0.5;
                    continue;
                }
                if (std::abs(nx - x) <= 1e-16 * resources[c]) {
                    x = nx;
                    break;
                }
                x = nx;
            }
            return x;
        };
        auto excess = [&](double logm) {
            const double m = std::exp(logm);
            double s = 0.0;
            for (std::size_t c = 0; c < n; ++c) s += counts[c] * (resources[c] - cons_at(m, c));
            return s / cost - 1.0;
        };
        double mmax = 0.0;
        for (std::size_t c = 0; c < n; ++c) mmax += counts[c] * q[c] * std::pow(resources[c], sigma);
        double hi = std::log(mmax) + 1.0;
        double lo = hi - 2.0;
        while (excess(lo) < 0.0) {
            lo -= 2.0;
            if (lo < hi - 200.0) return false;
        }
        std::uintmax_t iters = 200;
        auto tol = boost::math::tools::eps_tolerance<double>(50);
        auto [a, b] = boost::math::tools::toms748_solve(excess, lo, hi, tol, iters);
        const double m = std::exp(0.5 * (a + b));
        for (std::size_t c = 0; c < n; ++c) cons[c] = cons_at(m, c);
    }

    double m = 0.0;
    for (std::size_t c = 0; c < n; ++c) m += counts[c] * q[c] * std::pow(cons[c], sigma);
    for (std::size_t c = 0; c < n; ++c) {
        consumption[c] = cons[c];
        shares[c] = q[c] * std::pow(cons[c], sigma) / m;
        if (!(cons[c] > 0.0)) return false;
    }
    return true;
}

// --- node problem ------------------------------------------------------------

namespace {

struct Trial {
    bool feasible = false;
    double mu = 0.0;
    std::vector<double> savings;      // per trading class
    std::vector<double> consumption;  // per class
    std::vector<double> shares;
    std::vector<double> q;
    std::vector<double> residual;     // Euler, consumption units, per trading class
    std::vector<double> euler;        // normalized Euler error per class
    std::vector<double> value;
    double foc = 0.0;
    bool inside = true;  // next state within the continuation's box
    ClimateState next_climate;
};

class NodeProblem {
public:
    NodeProblem(const Model& m, const Regime& r, int t, int z, std::span<const double> state,
                const Continuation& next, const SolverOptions& opt)
        : m_(m), r_(r), next_(next), opt_(opt), ctx_(m.context(t, z, state)),
          row_(m.cal().ecs.row(t, z))
    {
        const auto& cal = m_.cal();
        const int nc = m_.num_classes();
        income0_.resize(nc);
        counts_.resize(nc);
        for (int c = 0; c < nc; ++c) {
            income0_[c] = (1.0 - cal.delta_k + ctx_.mpk) * ctx_.holdings[c] + ctx_.mpl * ctx_.eff_labor[c];
            counts_[c] = m_.classes()[c].count;
        }
        dS1_ = -cal.carbon.xi1 * cal.carbon.xi2 * ctx_.intensity * ctx_.output;
        dS2_ = -cal.carbon.xi1 * (1.0 - cal.carbon.xi2) * ctx_.intensity * ctx_.output;
    }

    const NodeContext& context() const { return ctx_; }

    bool evaluate(double mu, std::span<const double> savings, Trial& out) const
    {
        const auto& cal = m_.cal();
        const int nc = m_.num_classes();
        const int p = m_.num_traders();
        out.feasible = false;
        out.mu = mu;
        out.savings.assign(savings.begin(), savings.end());
        out.consumption.assign(nc, 0.0);
        out.shares.assign(nc, 0.0);
        out.q.assign(nc, 0.0);
        out.residual.assign(p, 0.0);
        out.euler.assign(nc, 0.0);
        out.value.assign(nc, 0.0);

        const double a = abatement_factor(mu, cal.phi1, cal.phi2);
        const double da = abatement_marginal(mu, cal.phi1, cal.phi2);
        const double cost = (1.0 - a) * ctx_.output;
        const double e = emissions(mu, ctx_.output, ctx_.intensity);
        out.next_climate = carbon_step(ctx_.climate, e, cal.carbon);

        double next_capital = 0.0;
        std::vector<double> next_state(p + 2);
        for (int i = 0; i < p; ++i) {
            next_state[i] = savings[i];
            next_capital += counts_[m_.trader_class(i)] * savings[i];
        }
        next_state[p] = out.next_climate.s1;
        next_state[p + 1] = out.next_climate.s2;
        out.inside = true;
        if (const GridSpec* box = next_.domain()) {
            // Far outside the next period's box the continuation is unreliable.
            for (int i = 0; i < p + 2; ++i) {
                const double w = box->hi[i] - box->lo[i];
                if (next_state[i] < box->lo[i] - 0.5 * w || next_state[i] > box->hi[i] + 0.5 * w)
                    return false;
                if (next_state[i] < box->lo[i] - 0.05 * w || next_state[i] > box->hi[i] + 0.05 * w)
                    out.inside = false;
            }
        }
        if (!(next_capital > 0.0) || !std::isfinite(next_capital)) return false;

        next_.evaluate(next_state, pts_);

        for (int c = 0; c < nc; ++c) {
            double s = 0.0;
            for (int zn = 0; zn < m_.num_shocks(); ++zn) {
                if (row_[zn] == 0.0) continue;
                s += row_[zn] * (pts_[zn].dvalue_ds1[c] * dS1_ + pts_[zn].dvalue_ds2[c] * dS2_);
            }
            out.q[c] = cal.beta * s;
        }

        std::vector<double> resources(nc);
        for (int c = 0; c < nc; ++c) {
            const int slot = m_.trader_slot(c);
            const double saving = slot >= 0 ? savings[slot] : 0.0;
            if (r_.transfers(ctx_.t))
                resources[c] = income0_[c] - saving;
            else
                resources[c] = (1.0 - cal.delta_k + a * ctx_.mpk) * ctx_.holdings[c] +
                               a * ctx_.mpl * ctx_.eff_labor[c] - saving;
        }
        if (r_.transfers(ctx_.t)) {
            if (!solve_cost_shares(resources, out.q, counts_, cost, cal.sigma, out.consumption,
                                   out.shares))
                return false;
        } else {
            for (int c = 0; c < nc; ++c) {
                if (!(resources[c] > 0.0)) return false;
                out.consumption[c] = resources[c];
            }
        }

        // Next-period gross returns by shock.
        const bool precompensated = r_.transfers(ctx_.t + 1) || !r_.abates(ctx_.t + 1);
        for (int i = 0; i < p; ++i) {
            const int c = m_.trader_class(i);
            double rhs = 0.0;
            for (int zn = 0; zn < m_.num_shocks(); ++zn) {
                if (row_[zn] == 0.0) continue;
                const double cn = pts_[zn].consumption[c];
                if (!(cn > 0.0) || !std::isfinite(cn)) return false;
                rhs += row_[zn] * gross_return(zn, next_capital, out.next_climate,
                                               precompensated ? 0.0 : pts_[zn].abatement) *
                       std::pow(cn, -cal.sigma);
            }
            rhs *= cal.beta;
            const double cc = out.consumption[c];
            out.residual[i] = cc - std::pow(rhs, -1.0 / cal.sigma);
            out.euler[c] = std::abs(1.0 - rhs * std::pow(cc, cal.sigma));
        }

        double benefit = 0.0;
        for (int c = 0; c < nc; ++c)
            benefit += counts_[c] * out.q[c] * std::pow(out.consumption[c], cal.sigma);
        out.foc = benefit + da * ctx_.output;

        for (int c = 0; c < nc; ++c) {
            double ev = 0.0;
            for (int zn = 0; zn < m_.num_shocks(); ++zn)
                if (row_[zn] != 0.0) ev += row_[zn] * pts_[zn].value[c];
            out.value[c] = crra_utility(out.consumption[c], cal.sigma) + cal.beta * ev;
        }
        out.feasible = true;
        return true;
    }

    // Damped Newton on the Euler equations of the trading classes for fixed mu.
    bool solve_savings(double mu, std::vector<double>& savings, Trial& out) const
    {
        const int p = m_.num_traders();
        if (!evaluate(mu, savings, out)) {
            if (!recover_start(mu, savings, out)) return false;
        }
        Trial probe;
        Eigen::MatrixXd jac(p, p);
        Eigen::VectorXd r(p), step(p);
        for (int it = 0; it < opt_.max_newton; ++it) {
            const double norm = residual_norm(out);
            if (norm < 1e-15) return true;
            for (int i = 0; i < p; ++i) r[i] = out.residual[i];
            for (int j = 0; j < p; ++j) {
                std::vector<double> s = savings;
                const double h = 1e-7 * std::max(std::abs(s[j]), 1e-4);
                s[j] += h;
                if (!evaluate(mu, s, probe)) {
                    s[j] = savings[j] - h;
                    if (!evaluate(mu, s, probe)) return false;
                    for (int i = 0; i < p; ++i) jac(i, j) = (r[i] - probe.residual[i]) / h;
                } else {
                    for (int i = 0; i < p; ++i) jac(i, j) = (probe.residual[i] - r[i]) / h;
                }
            }
            step = jac.partialPivLu().solve(-r);
            if (!step.allFinite()) return false;

            double lambda = 1.0;
            if (const GridSpec* box = next_.domain())
                for (int i = 0; i < p; ++i)
                    lambda = std::min(lambda, 0.25 * (box->hi[i] - box->lo[i]) / std::abs(step[i]));
            bool accepted = false;
            std::vector<double> trial(p);
            while (lambda > 1e-8) {
                for (int i = 0; i < p; ++i) trial[i] = savings[i] + lambda * step[i];
                if (evaluate(mu, trial, probe) && residual_norm(probe) < (1.0 - 1e-4 * lambda) * norm) {
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if (!accepted)
                return norm < 1e-11 * scale();
            savings = trial;
            std::swap(out, probe);
            double size = 0.0, mag = 0.0;
            for (int i = 0; i < p; ++i) {
                size = std::max(size, std::abs(lambda * step[i]));
                mag = std::max(mag, std::abs(savings[i]));
            }
            if (size < opt_.newton_step_tol * 1e-2 * (1.0 + mag)) return true;
        }
        return residual_norm(out) < 1e-10 * scale();
    }

    std::vector<double> default_guess() const
    {
        std::vector<double> g(m_.num_traders());
        for (int i = 0; i < m_.num_traders(); ++i) {
            const double h = ctx_.holdings[m_.trader_class(i)];
            g[i] = h > 0.0 ? h : 0.05 * income0_[m_.trader_class(i)];
            if (const GridSpec* box = next_.domain()) {
                const double w = box->hi[i] - box->lo[i];
                g[i] = std::clamp(g[i], box->lo[i] + 0.05 * w, box->hi[i] - 0.05 * w);
            }
        }
        return g;
    }

private:
    double gross_return(int zn, double next_capital, const ClimateState& climate, double next_mu) const
    {
        const auto& cal = m_.cal();
        const double temp = temperature(climate, cal.ecs.value(zn), cal.carbon);
        const double labor = m_.labor_at(temp);
        const double mpk = cal.alpha * std::pow(next_capital, cal.alpha - 1.0) *
                           std::pow(labor, 1.0 - cal.alpha);
        const double a = next_mu > 0.0 ? abatement_factor(next_mu, cal.phi1, cal.phi2) : 1.0;
        return 1.0 - cal.delta_k + a * mpk;
    }

    double residual_norm(const Trial& t) const
    {
        double n = 0.0;
        for (double r : t.residual) n = std::max(n, std::abs(r));
        return n;
    }

    double scale() const
    {
        double s = 0.0;
        for (double x : income0_) s = std::max(s, std::abs(x));
        return s;
    }

    bool recover_start(double mu, std::vector<double>& savings, Trial& out) const
    {
        const std::vector<double> base = default_guess();
        for (double f : {1.0, 0.7, 1.3, 0.5, 0.3, 0.15}) {
            std::vector<double> s(base.size());
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = f * base[i];
            if (evaluate(mu, s, out)) {
                savings = s;
                return true;
            }
        }
        return false;
    }

    const Model& m_;
    const Regime& r_;
    const Continuation& next_;
    SolverOptions opt_;
    NodeContext ctx_;
    std::vector<double> row_;
    std::vector<double> income0_;
    std::vector<int> counts_;
    double dS1_ = 0.0;
    double dS2_ = 0.0;
    mutable std::vector<NextPoint> pts_;
};

std::string node_label(int t, int z, std::span<const double> state)
{
    std::ostringstream os;
    os << "(t=" << t << ", z=" << z + 1 << ", state=[";
    for (std::size_t i = 0; i < state.size(); ++i) os << (i ? ", " : "") << state[i];
    os << "])";
    return os.str();
}

NodeSolution assemble(const Model& m, const Regime& r, const NodeContext& ctx, const Trial& tr)
{
    const auto& cal = m.cal();
    const int nc = m.num_classes();
    NodeSolution s;
    s.t = ctx.t;
    s.z = ctx.z;
    s.mu = tr.mu;
    s.tax = ctx.intensity > 0.0 ? tax_from_abatement(tr.mu, ctx.intensity, cal.phi1, cal.phi2) : 0.0;
    s.temperature = ctx.temperature;
    s.capital = ctx.capital;
    s.labor = ctx.labor;
    s.output = ctx.output;
    const double a = abatement_factor(tr.mu, cal.phi1, cal.phi2);
    s.net_output = a * ctx.output;
    s.abatement_cost = (1.0 - a) * ctx.output;
    s.emissions = emissions(tr.mu, ctx.output, ctx.intensity);
    s.prices = {1.0 - cal.delta_k + a * ctx.mpk, a * ctx.mpl};
    s.climate = ctx.climate;
    s.next_climate = tr.next_climate;
    s.holdings = ctx.holdings;
    s.damage = ctx.damage;
    s.savings.assign(nc, 0.0);
    for (int i = 0; i < m.num_traders(); ++i) {
        s.savings[m.trader_class(i)] = tr.savings[i];
        s.next_state.push_back(tr.savings[i]);
    }
    s.next_state.push_back(tr.next_climate.s1);
    s.next_state.push_back(tr.next_climate.s2);
    s.consumption = tr.consumption;
    s.shares = tr.shares;
    s.marginal_benefit = tr.q;
    s.value = tr.value;
    s.euler_residual = tr.euler;
    s.transfers.assign(nc, 0.0);
    if (r.transfers(ctx.t)) {
        for (int c = 0; c < nc; ++c)
            s.transfers[c] = tr.shares[c] * s.abatement_cost -
                             (1.0 - a) * (ctx.eff_labor[c] * ctx.mpl + ctx.holdings[c] * ctx.mpk);
    }
    return s;
}

} // namespace

NodeSolution terminal_node(const Model& m, int t, int z, std::span<const double> state)
{
    const auto& cal = m.cal();
    const NodeContext ctx = m.context(t, z, state);
    Trial tr;
    const int nc = m.num_classes();
    tr.mu = 0.0;
    tr.savings.assign(m.num_traders(), 0.0);
    tr.consumption.resize(nc);
    tr.shares.assign(nc, 0.0);
    tr.q.assign(nc, 0.0);
    tr.euler.assign(nc, 0.0);
    tr.value.resize(nc);
    for (int c = 0; c < nc; ++c) {
        tr.consumption[c] = (1.0 - cal.delta_k + ctx.mpk) * ctx.holdings[c] + ctx.mpl * ctx.eff_labor[c];
        if (!(tr.consumption[c] > 0.0))
            throw SolverError("nonpositive terminal consumption at " + node_label(t, z, state));
        tr.value[c] = crra_utility(tr.consumption[c], cal.sigma);
    }
    tr.next_climate = carbon_step(ctx.climate, emissions(0.0, ctx.output, ctx.intensity), cal.carbon);
    return assemble(m, Regime{Policy::LF, 0}, ctx, tr);
}

NodeSolution node_at_abatement(const Model& m, const Regime& r, int t, int z,
                               std::span<const double> state, const Continuation& next, double mu,
                               const SolverOptions& opt, std::span<const double> guess)
{
    NodeProblem prob(m, r, t, z, state, next, opt);
    std::vector<double> savings = guess.empty() ? prob.default_guess()
                                                : std::vector<double>(guess.begin(), guess.end());
    Trial tr;
    if (!prob.solve_savings(mu, savings, tr))
        throw SolverError("no interior savings solution at mu=" + std::to_string(mu) + " " +
                          node_label(t, z, state));
    return assemble(m, r, prob.context(), tr);
}

NodeSolution node_equilibrium(const Model& m, const Regime& r, int t, int z,
                              std::span<const double> state, const Continuation* next,
                              const SolverOptions& opt, std::span<const double> guess)
{
    if (t == m.horizon())
        return terminal_node(m, t, z, state);
    if (t > m.horizon() || t < 0)
        throw DomainError("period out of range");
    if (!next)
        throw SolverError("missing continuation before the final period");

    NodeProblem prob(m, r, t, z, state, *next, opt);
    std::vector<double> savings = guess.empty() ? prob.default_guess()
                                                : std::vector<double>(guess.begin(), guess.end());
    Trial tr;
    auto fail = [&](const std::string& what) {
        return SolverError(what + " " + node_label(t, z, state));
    };

    if (!prob.solve_savings(0.0, savings, tr))
        throw fail("no interior savings solution at mu=0");
    if (!r.abates(t) || tr.foc <= 0.0)
        return assemble(m, r, prob.context(), tr);

    // F(mu) = sum_h n_h Q~_h / u'(c_h) + A'(mu) Y, positive at mu = 0.
    std::vector<double> warm = savings;
    double last_mu = 0.0;
    bool last_inside = true;
    auto foc = [&](double mu) {
        last_inside = false;
        Trial t1;
        std::vector<double> s = warm;
        if (!prob.solve_savings(mu, s, t1)) {
            // The last iterate may sit where the continuation is extrapolated; restart
            // from the savings at mu = 0.
            s = savings;
            if (!prob.solve_savings(mu, s, t1))
                return std::numeric_limits<double>::quiet_NaN();
        }
        warm = s;
        last_mu = mu;
        last_inside = t1.inside;
        return t1.foc;
    };

    double lo = 0.0, hi = 1.0, flo = tr.foc, fhi = 0.0;
    bool bracketed = false;
    if (opt.sign_scan) {
        const int n = std::max(opt.scan_points, 2);
        // Uniqueness is judged on scan points whose next state lies in the fitted
        // box; elsewhere F rests on extrapolated continuations.
        int changes = 0;
        std::ostringstream where;
        double prev_mu = 0.0, prev_f = tr.foc;
        bool have_in = tr.inside;
        double in_mu = 0.0, in_f = tr.foc;
        for (int k = 1; k < n; ++k) {
            const double mu = static_cast<double>(k) / (n - 1);
            double f = foc(mu);
            if (std::isnan(f)) f = -std::numeric_limits<double>::infinity();
            if (last_inside) {
                if (have_in && (in_f > 0.0) != (f > 0.0)) {
                    ++changes;
                    where << " [" << in_mu << ", " << mu << "]";
                }
                have_in = true;
                in_mu = mu;
                in_f = f;
            }
            if ((prev_f > 0.0) != (f > 0.0)) {
                if (!bracketed) {
                    lo = prev_mu;
                    flo = prev_f;
                    hi = mu;
                    fhi = f;
                    bracketed = true;
                }
            }
            prev_mu = mu;
            prev_f = f;
            if (std::isinf(f)) break;  // infeasible beyond this point
        }
        if (changes > 1)
            throw fail("abatement condition has multiple roots on [0, 1], sign changes in" + where.str());
    } else {
        double mu = 0.02;
        while (true) {
            double f = foc(mu);
            if (std::isnan(f)) f = -std::numeric_limits<double>::infinity();
            if (f <= 0.0) {
                hi = mu;
                fhi = f;
                bracketed = true;
                break;
            }
            lo = mu;
            flo = f;
            if (mu >= 1.0) break;
            mu = std::min(1.0, 2.0 * mu);
        }
    }

    double mu_star = 1.0;
    if (bracketed) {
        // Infeasible upper ends are replaced by bisection until F is finite.
        while (!std::isfinite(fhi)) {
            const double mid = 0.5 * (lo + hi);
            double f = foc(mid);
            if (std::isnan(f)) f = -std::numeric_limits<double>::infinity();
            if (f > 0.0) {
                lo = mid;
                flo = f;
            } else {
                hi = mid;
                fhi = f;
            }
            if (hi - lo < opt.foc_tol) break;
        }
        if (std::isfinite(fhi) && fhi != 0.0) {
            std::uintmax_t iters = 200;
            auto tol = [&](double a, double b) { return std::abs(b - a) <= opt.foc_tol * 1e-2; };
            auto checked = [&](double mu) {
                const double f = foc(mu);
                if (std::isnan(f)) throw fail("savings solve failed inside abatement bracket");
                return f;
            };
            auto [a, b] = boost::math::tools::toms748_solve(checked, lo, hi, flo, fhi, tol, iters);
            mu_star = 0.5 * (a + b);
        } else {
            mu_star = hi;
        }
    }

    // Warm start from the savings at the closest evaluated abatement.
    std::vector<double> s = std::abs(last_mu - mu_star) < 0.1 ? warm : savings;
    if (!prob.solve_savings(mu_star, s, tr))
        throw fail("no interior savings solution at the optimal abatement");
    return assemble(m, r, prob.context(), tr);
}

std::vector<double> marginal_q(const Model& m, int t, int z, std::span<const double> state,
                               double mu, std::span<const double> savings, const Continuation& next)
{
    const auto& cal = m.cal();
    const NodeContext ctx = m.context(t, z, state);
    const int p = m.num_traders();
    const double e = emissions(mu, ctx.output, ctx.intensity);
    const ClimateState nc = carbon_step(ctx.climate, e, cal.carbon);
    std::vector<double> x(savings.begin(), savings.end());
    x.resize(p);
    x.push_back(nc.s1);
    x.push_back(nc.s2);
    std::vector<NextPoint> pts;
    next.evaluate(x, pts);
    const auto row = cal.ecs.row(t, z);
    const double d1 = -cal.carbon.xi1 * cal.carbon.xi2 * ctx.intensity * ctx.output;
    const double d2 = -cal.carbon.xi1 * (1.0 - cal.carbon.xi2) * ctx.intensity * ctx.output;
    std::vector<double> q(m.num_classes(), 0.0);
    for (int c = 0; c < m.num_classes(); ++c) {
        for (int zn = 0; zn < m.num_shocks(); ++zn)
            q[c] += row[zn] * (pts[zn].dvalue_ds1[c] * d1 + pts[zn].dvalue_ds2[c] * d2);
        q[c] *= cal.beta;
    }
    return q;
}

} // namespace ccs
