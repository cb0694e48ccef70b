#pragma once
/**
 * @file   cli.hpp
 * @brief  Subcommands `solve`, `study` and `oracle` behind a fixed exit-code contract.
 */

#include "tmam/config.hpp"
#include "tmam/errors.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tmam
{

enum ExitCode : int
{
    kExitOk = 0,
    kExitInput = 1,       ///< config or input error
    kExitSolver = 2,      ///< non-convergence or a typed numeric error
    kExitAssertion = 3,   ///< a built-in study assertion failed
};

ExitCode exit_code_for (ErrorCode code) noexcept;

/// Writes the result JSON and path CSV.
ExitCode cmd_solve (const RunConfig &cfg, const std::filesystem::path &out_dir);

/// Writes the study CSV(s) and summary JSON.
ExitCode cmd_study (const RunConfig &cfg, const std::filesystem::path &out_dir);

/// Writes the oracle CSV (trajectory or exact fixed-time minimizer).
ExitCode cmd_oracle (const RunConfig &cfg, const std::filesystem::path &out_dir);

/// Full command line: `<subcommand> [--config path] [--set k=v]... [--out-dir dir]`.
int run_cli (int argc, const char *const *argv);
int run_cli (const std::vector<std::string> &args);

} // namespace tmam
