// Command-line driver: solve, simulate, tables, welfare, verify.
//
// Exit codes: 0 ok, 2 configuration or missing input, 3 solver failure,
// 4 failed verification gate.

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ccs/analysis.hpp"
#include "ccs/config.hpp"
#include "ccs/errors.hpp"
#include "ccs/solve.hpp"
#include "ccs/verify.hpp"

namespace fs = std::filesystem;
using namespace ccs;

namespace {

struct Run {
    RunConfig cfg;
    EmissionScenario emissions;
    std::string hash;  // config plus emission data
    nlohmann::json manifest;
    bool gates_ok = true;

    fs::path out() const { return fs::path(cfg.out); }

    void write(const std::string& name, const std::string& body)
    {
        fs::create_directories(out());
        const fs::path path = out() / name;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw DataError("cannot write " + path.string());
        os << body;
        if (!os) throw DataError("failed writing " + path.string());
        manifest["artifacts"][name] = sha256_hex(body);
    }

    std::string csv_header() const { return "# config " + hash + "\n"; }
};

std::string policy_file(const std::string& variant, const Regime& r)
{
    return "policy_" + variant + "_" + r.tag() + ".txt";
}

void finish(Run& run, const std::string& command)
{
    run.manifest["command"] = command;
    run.manifest["config_hash"] = run.hash;
    run.manifest["config"] = serialize_config(run.cfg);
    run.manifest["emissions"] = {{"source", run.emissions.source},
                                 {"normalized_from_gtco2", run.emissions.normalized_from_gtco2}};
    run.manifest["gates_passed"] = run.gates_ok;
    fs::create_directories(run.out());
    std::ofstream os(run.out() / ("manifest_" + command + ".json"));
    os << run.manifest.dump(2) << "\n";
}

ValuePolicySet load_solution(const Run& run, const std::string& variant, const Regime& r)
{
    return load_policy_set((run.out() / policy_file(variant, r)).string());
}

void cmd_solve(Run& run)
{
    const Calibration cal = make_calibration(run.cfg, run.emissions);
    for (Policy p : run.cfg.regimes) {
        const Regime regime{p, p == Policy::LF ? 0 : run.cfg.delay};
        SolveOptions opt = solve_options(run.cfg);
        opt.log = [](const std::string& s) { std::cerr << s << "\n"; };
        const ValuePolicySet set = solve_regime(Model(cal, p), regime, opt);

        std::ostringstream policy;
        write_policy_set(policy, set);
        run.write(policy_file(run.cfg.variant, regime), policy.str());

        std::ostringstream rep;
        rep << run.csv_header() << "t,euler_at_nodes,euler_off_grid,gradient_gap,max_abatement,nodes\n";
        for (const auto& r : set.report.periods)
            rep << r.t << ',' << r.euler_at_nodes << ',' << r.euler_off_grid << ',' << r.gradient_gap << ','
                << r.max_abatement << ',' << r.nodes << '\n';
        run.write("residuals_" + run.cfg.variant + "_" + regime.tag() + ".csv", rep.str());

        const double euler = set.report.max_euler();
        run.manifest["solves"][regime.tag()] = {{"level", run.cfg.level},
                                                {"max_euler", euler},
                                                {"passes", set.report.passes},
                                                {"extrapolations", set.report.extrapolations}};
        std::cout << regime.tag() << ": max Euler residual " << euler << "\n";
        if (!(euler < run.cfg.euler_gate)) {
            std::cerr << "Euler gate failed for " << regime.tag() << ": " << euler << " >= " << run.cfg.euler_gate
                      << "\n";
            run.gates_ok = false;
        }
    }
}

std::vector<int> shock_path(const Run& run, const Calibration& cal)
{
    if (!run.cfg.shock_path.empty()) {
        std::vector<int> z;
        for (int s : run.cfg.shock_path) z.push_back(s - 1);
        return z;
    }
    return random_shock_path(cal, cal.horizon + 1, run.cfg.seed);
}

void cmd_simulate(Run& run)
{
    for (Policy p : run.cfg.regimes) {
        const Regime regime{p, p == Policy::LF ? 0 : run.cfg.delay};
        const ValuePolicySet set = load_solution(run, run.cfg.variant, regime);
        const auto path = shock_path(run, set.model.cal());
        const SimulationPanel panel = simulate(set, path);
        if (panel.extrapolated_steps > 0)
            std::cerr << "warning: " << panel.extrapolated_steps << " periods outside the fitted box (max "
                      << 100.0 * panel.max_excursion << " percent of width)\n";
        std::ostringstream os;
        os << run.csv_header();
        write_panel_csv(os, panel);
        run.write("panel_" + run.cfg.variant + "_" + regime.tag() + ".csv", os.str());
    }
}

void cmd_tables(Run& run)
{
    std::map<std::string, ValuePolicySet> store;
    auto take = [&](const std::string& key, const std::string& variant, Regime r, bool required) {
        const fs::path path = run.out() / policy_file(variant, r);
        if (!required && !fs::exists(path)) return;
        store.emplace(key, load_policy_set(path.string()));
    };
    take("CM", "BM", {Policy::CM, 0}, true);
    take("OT", "BM", {Policy::OT, 0}, true);
    take("NT", "BM", {Policy::NT, 0}, true);
    take("OT-IM", "IM", {Policy::OT, 0}, false);
    take("OT-AC", "AC", {Policy::OT, 0}, false);
    take("OT-d1", "BM", {Policy::OT, 1}, false);
    take("OT-d2", "BM", {Policy::OT, 2}, false);
    take("CM-d1", "BM", {Policy::CM, 1}, false);
    SolutionMap map;
    for (const auto& [k, v] : store) map[k] = &v;
    const Tables t = make_tables(map, false);

    std::ostringstream t1, t1b, t2, t3;
    t1 << run.csv_header();
    write_abatement_csv(t1, t.table1);
    run.write("table1_abatement.csv", t1.str());
    t1b << run.csv_header();
    write_cost_share_csv(t1b, t.table1b);
    run.write("table1b_cost_shares.csv", t1b.str());
    if (!t.table2.empty()) {
        t2 << run.csv_header();
        write_abatement_csv(t2, t.table2);
        run.write("table2_calibrations.csv", t2.str());
    }
    if (!t.table3.empty()) {
        t3 << run.csv_header();
        write_abatement_csv(t3, t.table3, 1);
        run.write("table3_delay.csv", t3.str());
    }
}

void cmd_welfare(Run& run)
{
    const ValuePolicySet lf = load_solution(run, "BM", {Policy::LF, 0});
    const ValuePolicySet ot = load_solution(run, "BM", {Policy::OT, 0});
    const ValuePolicySet nt = load_solution(run, "BM", {Policy::NT, 0});
    const ValuePolicySet cm = load_solution(run, "BM", {Policy::CM, 0});
    const double sigma = ot.model.cal().sigma;
    const auto u_lf = expected_utility(lf);
    const auto u_ot = expected_utility(ot);
    const auto u_nt = expected_utility(nt);
    const auto u_cm = expected_utility(cm);

    std::ostringstream os;
    os << run.csv_header() << "comparison,agent,base_utility,alt_utility,gain_pct\n" << std::setprecision(12);
    auto emit = [&](const std::string& name, const std::vector<double>& base, const std::vector<double>& alt) {
        const auto g = welfare_ce(base, alt, sigma);
        for (std::size_t h = 0; h < g.size(); ++h)
            os << name << ',' << h + 1 << ',' << base[h] << ',' << alt[h] << ',' << 100.0 * g[h] << '\n';
    };
    emit("OT_vs_LF", u_lf, u_ot);
    emit("NT_vs_OT", u_ot, u_nt);
    const auto cmp = complete_markets_gain(u_ot, u_cm.front(), sigma);
    for (std::size_t h = 0; h < cmp.shares.size(); ++h)
        os << "CM_vs_OT," << h + 1 << ',' << u_ot[h] << ',' << std::pow(cmp.shares[h], 1.0 - sigma) * u_cm.front()
           << ',' << (h == 0 ? 0.0 : 100.0 * cmp.gain) << '\n';
    const fs::path cm_lf = run.out() / policy_file("BM", {Policy::CM, lf.model.horizon() + 1});
    if (fs::exists(cm_lf)) {
        const auto u_cmlf = expected_utility(load_policy_set(cm_lf.string()));
        const auto c2 = complete_markets_gain(u_lf, u_cmlf.front(), sigma);
        for (std::size_t h = 0; h < c2.shares.size(); ++h)
            os << "CMLF_vs_LF," << h + 1 << ',' << u_lf[h] << ','
               << std::pow(c2.shares[h], 1.0 - sigma) * u_cmlf.front() << ',' << (h == 0 ? 0.0 : 100.0 * c2.gain)
               << '\n';
    }
    run.write("welfare.csv", os.str());
}

void cmd_verify(Run& run)
{
    const Calibration tiny = tiny_calibration();
    std::ostringstream os;
    os << run.csv_header() << "check,regime,value,tolerance,pass\n";
    for (Policy p : {Policy::LF, Policy::NT, Policy::OT, Policy::CM}) {
        const OracleCheck c = compare_with_oracle(tiny, p, 3);
        const bool ok = c.mu_gap <= 1e-6 && c.consumption_gap <= 1e-6;
        os << "oracle_mu," << to_string(p) << ',' << c.mu_gap << ",1e-6," << ok << '\n';
        os << "oracle_consumption," << to_string(p) << ',' << c.consumption_gap << ",1e-6," << ok << '\n';
        run.gates_ok = run.gates_ok && ok;
    }
    Model m(tiny, Policy::OT);
    SolveOptions opt;
    const ValuePolicySet ot = solve_regime(m, {Policy::OT, 0}, opt);
    const TheoremOneCheck th = theorem_one_suite(ot, 200, run.cfg.seed);
    const bool pareto = th.worst_gain >= -1e-8 && th.strict;
    os << "pareto_worst_gain,OT," << th.worst_gain << ",-1e-8," << pareto << '\n';
    os << "transfer_sum,OT," << th.transfer_sum << ",1e-10," << (th.transfer_sum <= 1e-10) << '\n';
    os << "unanimity,OT," << th.unanimity << ",1e-6," << (th.unanimity <= 1e-6) << '\n';
    os << "euler,OT," << ot.report.max_euler() << ",1e-3," << (ot.report.max_euler() < 1e-3) << '\n';
    run.gates_ok = run.gates_ok && pareto && th.transfer_sum <= 1e-10 && th.unanimity <= 1e-6 &&
                   ot.report.max_euler() < 1e-3;
    run.write("verify.csv", os.str());
    std::cout << (run.gates_ok ? "verification passed" : "verification FAILED") << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Constrained-optimal carbon policy with financial frictions"};
    app.require_subcommand(1);
    std::string config_path, variant, regime, shocks, out;
    int delay = -1, level = -1;
    long long seed = -1;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value configuration file");
        sub->add_option("--variant", variant, "BM, AC, IM or custom");
        sub->add_option("--regime", regime, "comma-separated regimes: OT, NT, CM, LF");
        sub->add_option("--delay", delay, "periods before abatement may start");
        sub->add_option("--level", level, "Smolyak level");
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--shock-path", shocks, "1-based shocks, e.g. 3,3,6,1");
    };
    const char* names[] = {"solve", "simulate", "tables", "welfare", "verify"};
    const char* help[] = {"solve regimes and write policy files", "simulate along a shock path",
                          "write Table 1, 1b, 2 and 3 CSVs from solved policies",
                          "consumption-equivalent welfare comparisons", "oracle and invariant suite"};
    for (int i = 0; i < 5; ++i) common(app.add_subcommand(names[i], help[i]));
    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        Run run;
        std::vector<std::pair<std::string, std::string>> flags;
        if (!variant.empty()) flags.emplace_back("variant", variant);
        if (!regime.empty()) flags.emplace_back("regimes", regime);
        if (delay >= 0) flags.emplace_back("delay", std::to_string(delay));
        if (level >= 0) flags.emplace_back("level", std::to_string(level));
        if (!out.empty()) flags.emplace_back("out", out);
        if (seed >= 0) flags.emplace_back("seed", std::to_string(seed));
        if (!shocks.empty()) flags.emplace_back("shock_path", shocks);

        // Flags override file keys and go through the same parser. Overridden
        // lines become comments so error line numbers still match the file.
        std::ostringstream text;
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) throw ConfigError("cannot read config file " + config_path);
            std::string line;
            while (std::getline(is, line)) {
                const auto eq = line.find('=');
                std::string key = eq == std::string::npos ? "" : line.substr(0, eq);
                key.erase(0, key.find_first_not_of(" \t"));
                key.erase(key.find_last_not_of(" \t") + 1);
                const bool overridden =
                    std::any_of(flags.begin(), flags.end(), [&](const auto& f) { return f.first == key; });
                text << (overridden ? "# " : "") << line << "\n";
            }
        }
        for (const auto& [k, v] : flags) text << k << " = " << v << "\n";
        std::istringstream is(text.str());
        run.cfg = parse_config(is, config_path.empty() ? "<flags>" : config_path);
        const double y_star = configured_steady_state_output(run.cfg);
        run.emissions = load_emissions(run.cfg.emissions, y_star, run.cfg.horizon);
        std::ifstream es(run.cfg.emissions, std::ios::binary);
        std::ostringstream ebytes;
        ebytes << es.rdbuf();
        RunConfig hashed = run.cfg;
        hashed.out = "-";  // where results go does not change them
        run.hash = sha256_hex(serialize_config(hashed) + "\n" + ebytes.str());

        if (command == "solve") cmd_solve(run);
        else if (command == "simulate") cmd_simulate(run);
        else if (command == "tables") cmd_tables(run);
        else if (command == "welfare") cmd_welfare(run);
        else cmd_verify(run);
        finish(run, command);
        return run.gates_ok ? 0 : 4;
    } catch (const ConfigError& e) {
        std::cerr << "{\"error\": \"config\", \"message\": " << nlohmann::json(e.what()).dump() << "}\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "{\"error\": \"data\", \"message\": " << nlohmann::json(e.what()).dump() << "}\n";
        return 2;
    } catch (const VerificationError& e) {
        std::cerr << "{\"error\": \"verification\", \"message\": " << nlohmann::json(e.what()).dump() << "}\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "{\"error\": \"solver\", \"message\": " << nlohmann::json(e.what()).dump() << "}\n";
        return 3;
    }
}
