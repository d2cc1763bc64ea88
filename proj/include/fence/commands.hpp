#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "fence/config.hpp"
#include "fence/simulator.hpp"

namespace fence
{

// Process exit codes of fence-sim.
enum class ExitCode : int
{
  success    = 0,
  failure    = 1, // the requested check did not hold
  validation = 2,
  collision  = 3,
  divergence = 4,
  parse      = 5,
};

struct ComparisonSummary
{
  MetricsReport         label_free;
  MetricsReport         label_fixed;
  double                oscillation_ratio = 0; // label_fixed / label_free peak oscillation
  std::optional<double> convergence_time_difference; // label_fixed minus label_free fencing time
};

ComparisonSummary summarize_comparison( const TrajectoryLog& label_free, const TrajectoryLog& label_fixed,
                                        const MetricThresholds& thresholds = {} );

// Subcommands. Each writes its report to `out`, diagnostics to `err`, and
// returns the process exit code.
ExitCode command_run( const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err );
ExitCode command_check_gains( const RunConfig& cfg, std::ostream& out, std::ostream& err );
ExitCode command_verify( const RunConfig& cfg, std::ostream& out, std::ostream& err );
ExitCode command_compare( const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out,
                          std::ostream& err );

// Full command-line entry point: `fence-sim <run|check-gains|verify|compare> <config> [--out dir]`.
int fence_sim_main( int argc, char** argv, std::ostream& out, std::ostream& err );

} // namespace fence
