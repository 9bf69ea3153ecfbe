#include "ccs/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/Dense>

#include "ccs/errors.hpp"

namespace ccs {

const TreeNode& TreeSolution::at(std::span<const int> history) const
{
    for (const auto& n : nodes)
        if (std::equal(n.history.begin(), n.history.end(), history.begin(), history.end())) return n;
    throw DomainError("no tree node for the requested history");
}

Calibration tiny_calibration()
{
    Calibration cal = make_calibration(Variant::BM, {100.0, 95.0, 90.0});
    cal.horizon = 2;
    cal.zeta = 0.02;
    cal.ecs = EcsProcess({2.0, 4.5}, cal.horizon, [](int) { return 0.7; });
    return cal;
}

namespace {

struct Outcome {
    double mu = 0.0;
    std::vector<double> savings;
    std::vector<double> consumption;
    std::vector<double> value;
};

// A next-period outcome with value gradients in the carbon stocks.
struct Branch {
    Outcome out;
    std::vector<double> dv1;
    std::vector<double> dv2;
};

class Tree {
public:
    Tree(const Calibration& cal, const Regime& regime) : cal_(cal), regime_(regime)
    {
        for (int h = 0; h < static_cast<int>(cal_.agents.size()); ++h)
            if (cal_.agents[h].trades()) traders_.push_back(h);
    }

    double max_residual() const { return worst_; }

    Outcome solve(int t, int z, const std::vector<double>& a, const ClimateState& s)
    {
        const int n = static_cast<int>(cal_.agents.size());
        const Basics b = basics(t, z, a, s);
        if (t == cal_.horizon) {
            Outcome o;
            o.consumption.resize(n);
            o.value.resize(n);
            o.savings.assign(n, 0.0);
            for (int h = 0; h < n; ++h) {
                o.consumption[h] = (1.0 - cal_.delta_k + b.mpk) * a[h] + b.mpl * b.labor[h];
                if (!(o.consumption[h] > 0.0)) throw SolverError("oracle: terminal consumption not positive");
                o.value[h] = crra_utility(o.consumption[h], cal_.sigma);
            }
            return o;
        }

        const bool shares = regime_.transfers(t);
        const bool abates = regime_.abates(t);
        const int nt = static_cast<int>(traders_.size());
        const int m = nt + (shares ? n : 0) + (abates ? 1 : 0);

        // Start from the last solution at this date, else from current holdings.
        Eigen::VectorXd u(m);
        auto key = std::make_pair(t, z);
        if (auto it = guess_.find(key); it != guess_.end() && it->second.size() == m) {
            u = it->second;
        } else {
            for (int i = 0; i < nt; ++i) u[i] = a[traders_[i]];
            for (int h = 0; h < (shares ? n : 0); ++h)
                u[nt + h] = 0.9 * ((1.0 - cal_.delta_k + b.mpk) * a[h] + b.mpl * b.labor[h] - (a[h] > 0.0 ? a[h] : 0.0));
            if (abates) u[m - 1] = 0.05;
        }

        Outcome out;
        Eigen::VectorXd r(m), rp(m), rm(m);
        if (!residuals(t, z, a, s, b, u, r, out)) throw SolverError("oracle: infeasible starting point");
        Eigen::MatrixXd jac(m, m);
        for (int it = 0; it < 100; ++it) {
            const double norm = r.cwiseAbs().maxCoeff();
            if (norm < 1e-14) break;
            for (int j = 0; j < m; ++j) {
                const double h = 1e-6 * std::max(std::abs(u[j]), 1e-2);
                Eigen::VectorXd up = u, um = u;
                up[j] += h;
                um[j] -= h;
                Outcome scratch;
                if (!residuals(t, z, a, s, b, up, rp, scratch) || !residuals(t, z, a, s, b, um, rm, scratch))
                    throw SolverError("oracle: Jacobian probe left the feasible set");
                jac.col(j) = (rp - rm) / (2.0 * h);
            }
            const Eigen::VectorXd step = jac.fullPivLu().solve(-r);
            double lambda = 1.0;
            bool accepted = false;
            while (lambda > 1e-10) {
                Eigen::VectorXd trial = u + lambda * step;
                Outcome o;
                if (residuals(t, z, a, s, b, trial, rp, o) && rp.cwiseAbs().maxCoeff() < norm) {
                    u = trial;
                    r = rp;
                    out = std::move(o);
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if (!accepted) break;
        }
        const double norm = r.cwiseAbs().maxCoeff();
        if (!(norm < 1e-11)) {
            std::ostringstream os;
            os << "oracle: no convergence at t=" << t << ", z=" << z + 1 << ", residual " << norm;
            throw SolverError(os.str());
        }
        worst_ = std::max(worst_, norm);
        guess_[key] = u;
        return out;
    }

private:
    struct Basics {
        double output = 0.0;
        double mpk = 0.0;
        double mpl = 0.0;
        std::vector<double> labor;  // effective labor per agent
    };

    Basics basics(int t, int z, const std::vector<double>& a, const ClimateState& s) const
    {
        (void)t;
        Basics b;
        const double temp = temperature(s, cal_.ecs.value(z), cal_.carbon);
        double capital = 0.0, labor = 0.0;
        for (std::size_t h = 0; h < a.size(); ++h) {
            capital += a[h];
            b.labor.push_back(agent_damage(cal_.agents[h], temp, cal_.zeta) * cal_.agents[h].labor_endowment);
            labor += b.labor.back();
        }
        b.output = potential_output(capital, labor, cal_.alpha);
        b.mpk = cal_.alpha * b.output / capital;
        b.mpl = (1.0 - cal_.alpha) * b.output / labor;
        return b;
    }

    Branch branch(int t, int z, const std::vector<double>& a, const ClimateState& s, bool gradient)
    {
        Branch br;
        br.out = solve(t, z, a, s);
        if (!gradient) return br;
        const int n = static_cast<int>(a.size());
        br.dv1.assign(n, 0.0);
        br.dv2.assign(n, 0.0);
        // Fourth-order central differences of exact re-solves.
        for (int d = 0; d < 2; ++d) {
            const double h = 1e-3 * (d == 0 ? s.s1 : s.s2);
            std::vector<double> f[4];
            const double off[4] = {-2.0, -1.0, 1.0, 2.0};
            for (int k = 0; k < 4; ++k) {
                ClimateState sp = s;
                (d == 0 ? sp.s1 : sp.s2) += off[k] * h;
                f[k] = solve(t, z, a, sp).value;
            }
            auto& g = d == 0 ? br.dv1 : br.dv2;
            for (int hh = 0; hh < n; ++hh)
                g[hh] = (f[0][hh] - 8.0 * f[1][hh] + 8.0 * f[2][hh] - f[3][hh]) / (12.0 * h);
        }
        return br;
    }

    bool residuals(int t, int z, const std::vector<double>& a, const ClimateState& s, const Basics& b,
                   const Eigen::VectorXd& u, Eigen::VectorXd& r, Outcome& out)
    {
        const int n = static_cast<int>(cal_.agents.size());
        const int nt = static_cast<int>(traders_.size());
        const bool shares = regime_.transfers(t);
        const bool abates = regime_.abates(t);
        const double mu = abates ? u[u.size() - 1] : 0.0;
        if (!(mu >= 0.0 && mu <= 1.0)) return false;

        std::vector<double> sav(n, 0.0);
        for (int i = 0; i < nt; ++i) sav[traders_[i]] = u[i];
        double next_k = 0.0;
        for (double x : sav) next_k += x;
        if (!(next_k > 0.0)) return false;

        const double af = abatement_factor(mu, cal_.phi1, cal_.phi2);
        const double cost = (1.0 - af) * b.output;
        const ClimateState next_s =
            carbon_step(s, emissions(mu, b.output, cal_.emission_intensity_at(t)), cal_.carbon);

        const auto row = cal_.ecs.row(t, z);
        std::vector<Branch> next(row.size());
        for (std::size_t zn = 0; zn < row.size(); ++zn)
            if (row[zn] > 0.0) {
                try {
                    next[zn] = branch(t + 1, static_cast<int>(zn), sav, next_s, abates);
                } catch (const SolverError&) {
                    return false;
                }
            }

        std::vector<double> q(n, 0.0);
        if (abates) {
            const double e = cal_.emission_intensity_at(t) * b.output;
            const double d1 = -cal_.carbon.xi1 * cal_.carbon.xi2 * e;
            const double d2 = -cal_.carbon.xi1 * (1.0 - cal_.carbon.xi2) * e;
            for (int h = 0; h < n; ++h)
                for (std::size_t zn = 0; zn < row.size(); ++zn)
                    if (row[zn] > 0.0) q[h] += cal_.beta * row[zn] * (next[zn].dv1[h] * d1 + next[zn].dv2[h] * d2);
        }

        std::vector<double> c(n);
        int k = 0;
        r.resize(u.size());
        if (shares) {
            double total = 0.0;
            for (int h = 0; h < n; ++h) {
                c[h] = u[nt + h];
                if (!(c[h] > 0.0)) return false;
                total += q[h] * std::pow(c[h], cal_.sigma);
            }
            for (int h = 0; h < n; ++h) {
                const double income = (1.0 - cal_.delta_k + b.mpk) * a[h] + b.mpl * b.labor[h];
                const double share = total != 0.0 ? q[h] * std::pow(c[h], cal_.sigma) / total : 0.0;
                r[nt + h] = (c[h] - (income - sav[h] - share * cost)) / b.output;
            }
        } else {
            for (int h = 0; h < n; ++h) {
                c[h] = (1.0 - cal_.delta_k + af * b.mpk) * a[h] + af * b.mpl * b.labor[h] - sav[h];
                if (!(c[h] > 0.0)) return false;
            }
        }

        const bool flat = regime_.transfers(t + 1) || !regime_.abates(t + 1);
        for (int i = 0; i < nt; ++i) {
            const int h = traders_[i];
            double rhs = 0.0;
            for (std::size_t zn = 0; zn < row.size(); ++zn) {
                if (row[zn] == 0.0) continue;
                const Basics nb = basics(t + 1, static_cast<int>(zn), sav, next_s);
                const double an = flat ? 1.0 : abatement_factor(next[zn].out.mu, cal_.phi1, cal_.phi2);
                rhs += row[zn] * (1.0 - cal_.delta_k + an * nb.mpk) *
                       marginal_utility(next[zn].out.consumption[h], cal_.sigma);
            }
            r[k++] = 1.0 - cal_.beta * rhs / marginal_utility(c[h], cal_.sigma);
        }
        k += shares ? n : 0;
        if (abates) {
            double benefit = 0.0;
            for (int h = 0; h < n; ++h) benefit += q[h] / marginal_utility(c[h], cal_.sigma);
            r[k++] = (benefit + abatement_marginal(mu, cal_.phi1, cal_.phi2) * b.output) / b.output;
        }

        out.mu = mu;
        out.savings = sav;
        out.consumption = c;
        out.value.assign(n, 0.0);
        for (int h = 0; h < n; ++h) {
            double ev = 0.0;
            for (std::size_t zn = 0; zn < row.size(); ++zn)
                if (row[zn] > 0.0) ev += row[zn] * next[zn].out.value[h];
            out.value[h] = crra_utility(c[h], cal_.sigma) + cal_.beta * ev;
        }
        return true;
    }

    Calibration cal_;
    Regime regime_;
    std::vector<int> traders_;
    std::map<std::pair<int, int>, Eigen::VectorXd> guess_;
    double worst_ = 0.0;
};

void walk(Tree& tree, const Calibration& cal, std::vector<int>& history, const std::vector<double>& a,
          const ClimateState& s, TreeSolution& sol)
{
    const int t = static_cast<int>(history.size()) - 1;
    const Outcome o = tree.solve(t, history.back(), a, s);
    TreeNode node{history, o.mu, s, a, o.savings, o.consumption, o.value};
    sol.nodes.push_back(node);
    if (t + 1 >= cal.horizon) return;

    const double temp = temperature(s, cal.ecs.value(history.back()), cal.carbon);
    double capital = 0.0, labor = 0.0;
    for (std::size_t h = 0; h < a.size(); ++h) {
        capital += a[h];
        labor += agent_damage(cal.agents[h], temp, cal.zeta) * cal.agents[h].labor_endowment;
    }
    const double y = potential_output(capital, labor, cal.alpha);
    const ClimateState next = carbon_step(s, emissions(o.mu, y, cal.emission_intensity_at(t)), cal.carbon);
    const auto row = cal.ecs.row(t, history.back());
    for (int zn = 0; zn < static_cast<int>(row.size()); ++zn) {
        if (row[zn] == 0.0) continue;
        history.push_back(zn);
        walk(tree, cal, history, o.savings, next, sol);
        history.pop_back();
    }
}

} // namespace

TreeSolution brute_force_tree(const Calibration& calibration, const Regime& regime, int z0)
{
    calibration.validate();
    if (calibration.horizon > 3 || calibration.ecs.size() > 3)
        throw DomainError("brute-force tree needs horizon <= 3 and at most 3 shocks");
    const Calibration cal = regime.policy == Policy::CM && calibration.agents.size() > 1
                                ? representative_calibration(calibration)
                                : calibration;
    Tree tree(cal, regime);
    TreeSolution sol;
    sol.regime = regime;
    std::vector<int> history{z0};
    walk(tree, cal, history, cal.initial_holdings(), cal.initial_climate, sol);
    sol.max_residual = tree.max_residual();
    return sol;
}

} // namespace ccs
