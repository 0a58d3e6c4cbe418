#pragma once

#include <string>

#include "plasim/config.hpp"

namespace plasim {

// Each command validates its inputs (throwing ConfigError before anything is
// written), then writes CSV tables plus a summary.txt under config.out.
// Return value is the process exit code: 0 success, 3 partial results.
// ConfigError maps to 2 and other failures to 4 in the CLI driver.
int run_propagator_scan(const RunConfig& config);
int run_trajectory(const RunConfig& config);
int run_robustness(const RunConfig& config);
int run_g2(const RunConfig& config);
int run_wavefunction(const RunConfig& config);

int dispatch_command(const std::string& name, const RunConfig& config);

} // namespace plasim
