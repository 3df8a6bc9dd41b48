#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "contractsolve/model.hpp"

namespace contractsolve {

enum class RunMode { Solve, Feasibility, OracleCheck, Envelope, Sweep };

/// Parsed run request: problem data plus execution switches.
struct RunConfig {
    RunMode mode = RunMode::Solve;
    ProblemSpec problem;
    std::size_t grid_n = 2049;
    std::optional<double> lambda_override;
    std::string out_dir = "out";
    std::vector<double> envelope_values;  // envelope mode input
    std::vector<double> sweep_lambdas;    // sweep mode ladder; defaults to 2^-4..2^4
    bool have_problem = false;            // envelope mode may omit the problem block
};

// Flat "key = value" text, keys dotted, values JSON literals (numbers,
// strings, booleans, arrays of numbers). '#' starts a comment.
RunConfig load_config(const std::string& path);

// Command-line overrides land on top of the file before validation.
struct CliOverrides {
    std::optional<std::string> mode;
    std::optional<double> lambda;
    std::optional<std::size_t> grid_n;
    std::optional<std::string> out_dir;
};
void apply_overrides(RunConfig& cfg, const CliOverrides& ov);

// Exit status contract: 0 success, 2 infeasible budget, 3 solver failed to
// converge. Everything written under cfg.out_dir; diagnostics to `log`.
int run(const RunConfig& cfg, std::ostream& log);

} // namespace contractsolve
