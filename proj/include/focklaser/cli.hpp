#pragma once

#include "focklaser/io.hpp"
#include "focklaser/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace focklaser::cli {

struct RunConfig {
    std::string command;
    RabiParams p;
    GainParams gp;
    std::string method = "rate";  // rate | direct | liouvillian
    std::string branch = "minus";
    int n_max = 0;   // 0: automatic
    int n_fock = 0;  // Liouvillian: Rabi eigenstates kept per branch; 0: 30
    std::string interaction = "b";
    std::string jump = "b";
    double bath_ratio = 1e4;  // direct method: bath decay over lasing-level decay
    std::vector<double> g_values;
    std::vector<double> r_values;
    std::vector<double> gamma_values;
    std::string r_log;      // "a..b:N", log-spaced, both ends included
    std::string gamma_log;
    double t = 0.0;         // blockade interaction time; 0: pi / (2 eps)
    double t_final = 0.0;   // transient horizon; 0: 1 / kappa
    int samples = 10;
    int jobs = 1;
    unsigned seed = 0;      // reserved; every method is deterministic
    std::string format = "csv";
    std::string out;
    std::string config;  // JSON file merged under the command-line flags
};

/// "a..b:N" into N log-spaced values from a to b.
std::vector<double> log_grid(const std::string& spec);

/// Parameters echoed into every output; enough to rerun it.
io::KeyValues echo(const RunConfig& cfg);

/// Runs the configured computation into a table (no I/O).
io::Table execute(const RunConfig& cfg);

/// Exit codes: 0 success, 2 invalid input, 1 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace focklaser::cli
