#pragma once

#include <string>
#include <vector>

#include "bulksurf/config.hpp"
#include "bulksurf/diagnostics.hpp"

namespace bulksurf {

struct ExperimentResult {
  bool ok{true};
  std::string message;
  VariantTag tag{VariantTag::Full};
  TrajectoryRecord trajectory;
  SystemState final_state;
};

/// Steps the configured problem to the horizon, sampling every
/// output.sample_stride steps (plus the initial and final states).
ExperimentResult run_trajectory(const RunConfig& cfg);

std::string trajectory_ndjson(const ExperimentResult& result);
std::string final_state_csv(const RunConfig& cfg, const FullProblem& p,
                            const ExperimentResult& result);
std::string regime_report_json(const RegimeReport& report);
std::string convergence_csv(const std::vector<ConvergenceRow>& rows);
std::string error_record_json(const std::string& where, const std::string& message);

/// Runs the experiment and writes trajectory.ndjson + final_state.csv into
/// out_dir. Returns 0 on success; on failure writes error.json and returns
/// nonzero.
int run_experiment(const RunConfig& cfg, const std::string& out_dir, std::string* error_out = nullptr);

} // namespace bulksurf
