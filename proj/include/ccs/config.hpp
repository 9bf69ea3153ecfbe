#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ccs/economy.hpp"
#include "ccs/model.hpp"
#include "ccs/node.hpp"
#include "ccs/solve.hpp"

namespace ccs {

struct EmissionScenario {
    std::vector<double> intensity;  // e_t, GtC per unit of potential output
    std::string source;             // file the series came from
    bool normalized_from_gtco2 = false;
};

// CSV with a header `decade_index,gtco2_per_decade` (raw emissions, divided by
// `steady_state_output` after conversion to GtC) or `decade_index,intensity`.
// Lines starting with '#' are comments.
EmissionScenario load_emissions(const std::string& path, double steady_state_output, int horizon);
EmissionScenario read_emissions(std::istream& is, const std::string& source,
                                double steady_state_output, int horizon);

// Run configuration. The file format is one `key = value` per line, '#' starts a
// comment; every key is optional and defaults to the benchmark calibration.
struct RunConfig {
    std::string variant = "BM";  // BM, AC, IM or custom (requires `agents`)
    std::vector<Policy> regimes{Policy::OT};
    int delay = 0;
    int level = 3;
    std::uint64_t seed = 20240601;
    std::vector<int> shock_path{3, 3, 6, 1};  // 1-based shocks
    std::string out = "results";
    std::string emissions = "data/rcp45_emissions.csv";

    // Calibration.
    double alpha = 0.33;
    double delta_k = 0.57;
    double beta = 0.74;
    double sigma = 5.0;
    double zeta = 0.007;
    double phi1 = 0.25;
    double phi2 = 2.0;
    double xi1 = 0.4;
    double xi2 = 0.5;
    double delta_s1 = 1.0;
    double delta_s2 = 0.97;
    double s_bar = 581.0;
    double s1_initial = 118.0;
    double s2_initial = 684.0;
    int horizon = 30;
    std::vector<AgentProfile> agents;          // custom variant only
    std::vector<double> wealth_share;          // empty: proportional to labor

    // Solver and gates.
    bool adaptive_bounds = true;
    int bound_paths = 200;
    int off_grid_points = 60;
    int scan_points = 32;
    double newton_tol = 1e-10;
    double foc_tol = 1e-10;
    double euler_gate = 1e-3;

    bool operator==(const RunConfig&) const = default;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(std::istream& is, const std::string& source = "<config>");

// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& c);

// Calibration with the emission series attached.
Calibration make_calibration(const RunConfig& c, const EmissionScenario& emissions);
// Steady-state output of the configured technology (used to normalize raw emissions).
double configured_steady_state_output(const RunConfig& c);

SolveOptions solve_options(const RunConfig& c);

// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

} // namespace ccs
