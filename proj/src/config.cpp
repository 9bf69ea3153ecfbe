#include "ccs/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "ccs/errors.hpp"

namespace ccs {

// --- emissions ---------------------------------------------------------------

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

bool parse_double(const std::string& s, double& v)
{
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, v);
    return ec == std::errc() && p == e && std::isfinite(v);
}

template <class Int>
bool parse_int(const std::string& s, Int& v)
{
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, v);
    return ec == std::errc() && p == e;
}

} // namespace

EmissionScenario read_emissions(std::istream& is, const std::string& source,
                                double steady_state_output, int horizon)
{
    EmissionScenario sc;
    sc.source = source;
    std::string line;
    int lineno = 0;
    bool header = false;
    auto fail = [&](const std::string& what) {
        return DataError(source + ":" + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto cols = split(line, ',');
        if (!header) {
            if (cols.size() != 2 || cols[0] != "decade_index")
                throw fail("expected header 'decade_index,gtco2_per_decade' or 'decade_index,intensity'");
            if (cols[1] == "gtco2_per_decade") sc.normalized_from_gtco2 = true;
            else if (cols[1] != "intensity") throw fail("unknown emission column '" + cols[1] + "'");
            header = true;
            continue;
        }
        int index = 0;
        double v = 0.0;
        if (cols.size() != 2 || !parse_int(cols[0], index) || !parse_double(cols[1], v))
            throw fail("malformed row '" + line + "'");
        if (index != static_cast<int>(sc.intensity.size()))
            throw fail("decade indices must run 0, 1, 2, ...");
        if (v < 0.0) throw fail("negative emissions");
        sc.intensity.push_back(v);
    }
    if (!header) throw DataError(source + ": no emission data");
    if (static_cast<int>(sc.intensity.size()) < horizon + 1)
        throw DataError(source + ": " + std::to_string(sc.intensity.size()) +
                        " decades, the horizon needs " + std::to_string(horizon + 1));
    if (sc.normalized_from_gtco2) {
        if (!(steady_state_output > 0.0)) throw DomainError("steady-state output must be positive");
        // GtCO2 to GtC, then per unit of steady-state output.
        for (auto& v : sc.intensity) v = v * 12.0 / 44.0 / steady_state_output;
    }
    return sc;
}

EmissionScenario load_emissions(const std::string& path, double steady_state_output, int horizon)
{
    std::ifstream is(path);
    if (!is) throw DataError("missing artifact: cannot read emissions file " + path);
    return read_emissions(is, path, steady_state_output, horizon);
}

// --- configuration -------------------------------------------------------------

namespace {

std::string join_ints(const std::vector<int>& v)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

std::string fmt(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

struct Parser {
    std::string source;
    int line = 0;

    ConfigError error(const std::string& what) const
    {
        return ConfigError(source + ":" + std::to_string(line) + ": " + what);
    }
    double number(const std::string& key, const std::string& v) const
    {
        double x = 0.0;
        if (!parse_double(v, x)) throw error("'" + key + "' expects a number, got '" + v + "'");
        return x;
    }
    int integer(const std::string& key, const std::string& v) const
    {
        int x = 0;
        if (!parse_int(v, x)) throw error("'" + key + "' expects an integer, got '" + v + "'");
        return x;
    }
    bool boolean(const std::string& key, const std::string& v) const
    {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw error("'" + key + "' expects true or false, got '" + v + "'");
    }
};

} // namespace

RunConfig parse_config(std::istream& is, const std::string& source)
{
    RunConfig c;
    Parser p{source, 0};
    std::map<std::string, int> seen;
    std::string raw;

    using Setter = std::function<void(const std::string&, const std::string&)>;
    auto num = [&](double& field) { return Setter([&](auto& k, auto& v) { field = p.number(k, v); }); };
    auto whole = [&](int& field) { return Setter([&](auto& k, auto& v) { field = p.integer(k, v); }); };
    const std::map<std::string, Setter> keys{
        {"variant",
         [&](auto&, auto& v) {
             if (v != "BM" && v != "AC" && v != "IM" && v != "custom")
                 throw p.error("variant must be BM, AC, IM or custom, got '" + v + "'");
             c.variant = v;
         }},
        {"regimes",
         [&](auto&, auto& v) {
             c.regimes.clear();
             for (const auto& r : split(v, ',')) {
                 try {
                     c.regimes.push_back(policy_from_string(r));
                 } catch (const std::exception&) {
                     throw p.error("unknown regime '" + r + "' (expected OT, NT, CM or LF)");
                 }
             }
         }},
        {"delay", whole(c.delay)},
        {"level", whole(c.level)},
        {"seed",
         [&](auto& k, auto& v) {
             if (!parse_int(v, c.seed)) throw p.error("'" + k + "' expects a nonnegative integer");
         }},
        {"shock_path",
         [&](auto& k, auto& v) {
             c.shock_path.clear();
             if (v.empty()) return;
             for (const auto& s : split(v, ',')) c.shock_path.push_back(p.integer(k, s));
         }},
        {"out", [&](auto&, auto& v) { c.out = v; }},
        {"emissions", [&](auto&, auto& v) { c.emissions = v; }},
        {"alpha", num(c.alpha)},
        {"delta_k", num(c.delta_k)},
        {"beta", num(c.beta)},
        {"sigma", num(c.sigma)},
        {"zeta", num(c.zeta)},
        {"phi1", num(c.phi1)},
        {"phi2", num(c.phi2)},
        {"xi1", num(c.xi1)},
        {"xi2", num(c.xi2)},
        {"delta_s1", num(c.delta_s1)},
        {"delta_s2", num(c.delta_s2)},
        {"s_bar", num(c.s_bar)},
        {"s1_initial", num(c.s1_initial)},
        {"s2_initial", num(c.s2_initial)},
        {"horizon", whole(c.horizon)},
        {"agents",
         [&](auto& k, auto& v) {
             c.agents.clear();
             for (const auto& a : split(v, ',')) {
                 const auto f = split(a, ':');
                 if (f.size() != 3 || (f[2] != "full" && f[2] != "none"))
                     throw p.error("agents entries look like labor:weight:full|none, got '" + a + "'");
                 c.agents.push_back({p.number(k, f[0]), p.number(k, f[1]),
                                     f[2] == "full" ? MarketAccess::full : MarketAccess::none});
             }
         }},
        {"wealth_share",
         [&](auto& k, auto& v) {
             c.wealth_share.clear();
             for (const auto& s : split(v, ',')) c.wealth_share.push_back(p.number(k, s));
         }},
        {"adaptive_bounds", [&](auto& k, auto& v) { c.adaptive_bounds = p.boolean(k, v); }},
        {"bound_paths", whole(c.bound_paths)},
        {"off_grid_points", whole(c.off_grid_points)},
        {"scan_points", whole(c.scan_points)},
        {"newton_tol", num(c.newton_tol)},
        {"foc_tol", num(c.foc_tol)},
        {"euler_gate", num(c.euler_gate)},
    };

    while (std::getline(is, raw)) {
        ++p.line;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw p.error("expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = keys.find(key);
        if (it == keys.end()) throw p.error("unknown key '" + key + "'");
        if (seen.count(key)) throw p.error("duplicate key '" + key + "'");
        seen[key] = p.line;
        it->second(key, value);
    }

    auto check = [&](bool ok, const std::string& key, const std::string& what) {
        if (ok) return;
        p.line = seen.count(key) ? seen[key] : 0;
        throw p.error(what);
    };
    check(!c.regimes.empty(), "regimes", "regime list is empty");
    check(c.delay >= 0, "delay", "delay must be nonnegative");
    check(c.level >= 1 && c.level <= 8, "level", "level must lie in 1..8");
    check(c.horizon >= 1, "horizon", "horizon must be positive");
    check(static_cast<int>(c.shock_path.size()) <= c.horizon + 1, "shock_path",
          "shock path longer than horizon + 1");
    for (int z : c.shock_path) check(z >= 1 && z <= 6, "shock_path", "shocks are numbered 1..6");
    check(c.variant != "custom" || !c.agents.empty(), "variant", "variant=custom needs an agents list");
    check(c.variant == "custom" || c.agents.empty(), "agents", "agents may only be given with variant=custom");
    check(c.euler_gate > 0.0, "euler_gate", "euler_gate must be positive");
    check(c.scan_points >= 2, "scan_points", "scan_points must be at least 2");
    check(c.bound_paths >= 0 && c.off_grid_points >= 0, "bound_paths", "path counts must be nonnegative");
    check(c.newton_tol > 0.0 && c.foc_tol > 0.0, "newton_tol", "tolerances must be positive");
    check(!c.out.empty(), "out", "output directory is empty");
    try {
        Calibration cal = make_calibration(c, EmissionScenario{std::vector<double>(c.horizon + 1, 0.0), "", false});
        cal.validate();
        if (!cal.initial_wealth_share.empty() && cal.initial_wealth_share.size() != cal.agents.size())
            throw DomainError("wealth_share needs one entry per agent");
    } catch (const DomainError& e) {
        p.line = 0;
        throw p.error(std::string("invalid calibration: ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path);
    return parse_config(is, path);
}

std::string serialize_config(const RunConfig& c)
{
    std::ostringstream os;
    os << "variant = " << c.variant << "\n";
    os << "regimes = ";
    for (std::size_t i = 0; i < c.regimes.size(); ++i) os << (i ? "," : "") << to_string(c.regimes[i]);
    os << "\ndelay = " << c.delay << "\nlevel = " << c.level << "\nseed = " << c.seed
       << "\nshock_path = " << join_ints(c.shock_path) << "\nout = " << c.out
       << "\nemissions = " << c.emissions << "\n";
    os << "alpha = " << fmt(c.alpha) << "\ndelta_k = " << fmt(c.delta_k) << "\nbeta = " << fmt(c.beta)
       << "\nsigma = " << fmt(c.sigma) << "\nzeta = " << fmt(c.zeta) << "\nphi1 = " << fmt(c.phi1)
       << "\nphi2 = " << fmt(c.phi2) << "\nxi1 = " << fmt(c.xi1) << "\nxi2 = " << fmt(c.xi2)
       << "\ndelta_s1 = " << fmt(c.delta_s1) << "\ndelta_s2 = " << fmt(c.delta_s2)
       << "\ns_bar = " << fmt(c.s_bar) << "\ns1_initial = " << fmt(c.s1_initial)
       << "\ns2_initial = " << fmt(c.s2_initial) << "\nhorizon = " << c.horizon << "\n";
    if (!c.agents.empty()) {
        os << "agents = ";
        for (std::size_t i = 0; i < c.agents.size(); ++i)
            os << (i ? "," : "") << fmt(c.agents[i].labor_endowment) << ':' << fmt(c.agents[i].damage_weight)
               << ':' << (c.agents[i].trades() ? "full" : "none");
        os << "\n";
    }
    if (!c.wealth_share.empty()) {
        os << "wealth_share = ";
        for (std::size_t i = 0; i < c.wealth_share.size(); ++i) os << (i ? "," : "") << fmt(c.wealth_share[i]);
        os << "\n";
    }
    os << "adaptive_bounds = " << (c.adaptive_bounds ? "true" : "false")
       << "\nbound_paths = " << c.bound_paths << "\noff_grid_points = " << c.off_grid_points
       << "\nscan_points = " << c.scan_points << "\nnewton_tol = " << fmt(c.newton_tol)
       << "\nfoc_tol = " << fmt(c.foc_tol) << "\neuler_gate = " << fmt(c.euler_gate) << "\n";
    return os.str();
}

Calibration make_calibration(const RunConfig& c, const EmissionScenario& emissions)
{
    Calibration cal = c.variant == "custom"
                          ? make_calibration(Variant::BM, emissions.intensity)
                          : make_calibration(variant_from_string(c.variant), emissions.intensity);
    if (c.variant == "custom") cal.agents = c.agents;
    cal.alpha = c.alpha;
    cal.delta_k = c.delta_k;
    cal.beta = c.beta;
    cal.sigma = c.sigma;
    cal.zeta = c.zeta;
    cal.phi1 = c.phi1;
    cal.phi2 = c.phi2;
    cal.carbon = {c.xi1, c.xi2, c.delta_s1, c.delta_s2, c.s_bar};
    cal.initial_climate = {c.s1_initial, c.s2_initial};
    cal.horizon = c.horizon;
    cal.ecs = EcsProcess::standard(c.horizon);
    cal.initial_wealth_share = c.wealth_share;
    return cal;
}

double configured_steady_state_output(const RunConfig& c)
{
    Calibration cal;
    cal.alpha = c.alpha;
    cal.beta = c.beta;
    cal.delta_k = c.delta_k;
    return cal.steady_state_output();
}

SolveOptions solve_options(const RunConfig& c)
{
    SolveOptions o;
    o.level = c.level;
    o.adaptive_bounds = c.adaptive_bounds;
    o.bound_paths = c.bound_paths;
    o.off_grid_points = c.off_grid_points;
    o.seed = c.seed;
    o.node.newton_step_tol = c.newton_tol;
    o.node.foc_tol = c.foc_tol;
    o.node.scan_points = c.scan_points;
    return o;
}

std::string sha256_hex(const std::string& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw DataError("SHA-256 computation failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return os.str();
}

} // namespace ccs
