#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bulksurf/problem.hpp"

namespace bulksurf {

/// Validation failure naming the offending configuration key.
struct ConfigError : std::runtime_error {
  std::string key;
  ConfigError(std::string key_, const std::string& what)
      : std::runtime_error("config key '" + key_ + "': " + what), key(std::move(key_)) {}
};

struct GeometryConfig {
  std::string type{"interval"};  // interval | strip
  int n_cells{100};
  double length{1.0};
  int nx{16}, ny{16};
  double lx{1.0}, ly{1.0};
};

struct ReactionConfig {
  std::vector<int> alpha, beta;
  double k_f{1.0}, k_b{1.0};
};

struct InitialConfig {
  std::string bulk_type{"uniform"};  // uniform | sinusoidal | mp_compatible | file
  std::vector<double> values;
  double amplitude{0.0};
  std::string path;
  std::string surface_type{"isotherm"};  // isotherm | uniform
  std::vector<double> theta;
};

struct OutputConfig {
  int sample_stride{1};
  std::string dir{"out"};
};

struct StepperFileConfig {
  StepperConfig stepper;
  double t_end{1.0};
};

struct RunConfig {
  GeometryConfig geometry;
  std::vector<std::string> species;
  std::vector<ReactionConfig> bulk_reactions;
  std::vector<ReactionConfig> surface_reactions;  // reduced exponents, length N
  std::vector<double> k_ad, k_de;
  double site_capacity{1.0};
  double d_sigma_ref{1.0};
  std::vector<double> diffusivities;
  std::vector<double> mu0;
  std::map<std::string, double> tau;  // per process group, default 1
  std::string variant{"Full"};        // variant tag name or "auto"
  double regime_threshold{1e-2};
  std::string solver{"newton"};       // newton | phi (ThreeParamMP only)
  InitialConfig initial;
  StepperFileConfig run;
  OutputConfig output;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

FullProblem build_problem(const RunConfig& cfg);

/// Group time scales of the configuration expanded into a TimeScales value
/// (per-reaction entries replicated from the group value).
TimeScales config_time_scales(const RunConfig& cfg, const FullProblem& p);

/// Resolves "auto" through classify_regime; otherwise parses the tag name.
VariantTag resolve_variant(const RunConfig& cfg, const FullProblem& p);

SystemState build_initial_state(const RunConfig& cfg, const FullProblem& p);

} // namespace bulksurf
