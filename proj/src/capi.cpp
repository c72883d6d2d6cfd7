#include "bulksurf/capi.h"

#include <cstring>
#include <string>

#include "bulksurf/config.hpp"
#include "bulksurf/diagnostics.hpp"
#include "bulksurf/experiment.hpp"
#include "bulksurf/solvers.hpp"

using namespace bulksurf;

struct bsx_config_s {
  RunConfig cfg;
};

namespace {

thread_local std::string g_error_message;
thread_local std::string g_error_json;

int set_error(int code, const std::string& where, const std::string& message) {
  g_error_message = message;
  g_error_json = error_record_json(where, message);
  return code;
}

int invalid_arg(const std::string& where, const std::string& message) {
  return set_error(BSX_ERR_INVALID_ARG, where, message);
}

template <typename Fn>
int guarded(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    return set_error(BSX_ERR_CONFIG, where, e.what());
  } catch (const std::exception& e) {
    return set_error(BSX_ERR_RUNTIME, where, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

} // namespace

extern "C" {

int bsx_config_load(const char* path, bsx_config** out) {
  if (!path || !out) return invalid_arg("bsx_config_load", "null argument");
  return guarded("bsx_config_load", [&] {
    *out = new bsx_config_s{load_config(path)};
    return BSX_OK;
  });
}

int bsx_config_parse(const char* json_text, bsx_config** out) {
  if (!json_text || !out) return invalid_arg("bsx_config_parse", "null argument");
  return guarded("bsx_config_parse", [&] {
    *out = new bsx_config_s{parse_config(json_text)};
    return BSX_OK;
  });
}

void bsx_config_free(bsx_config* cfg) { delete cfg; }

const char* bsx_last_error(void) { return g_error_message.c_str(); }
const char* bsx_last_error_json(void) { return g_error_json.c_str(); }

int bsx_validate(const bsx_config* cfg) {
  if (!cfg) return invalid_arg("bsx_validate", "null config");
  return guarded("bsx_validate", [&] {
    const FullProblem p = build_problem(cfg->cfg);
    const VariantTag tag = resolve_variant(cfg->cfg, p);
    ModelVariant::make(tag, p);
    build_initial_state(cfg->cfg, p);
    return BSX_OK;
  });
}

int bsx_run(const bsx_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) return invalid_arg("bsx_run", "null argument");
  return guarded("bsx_run", [&] {
    std::string error;
    if (run_experiment(cfg->cfg, out_dir, &error) != 0) {
      g_error_json = error;
      g_error_message = error;
      return static_cast<int>(BSX_ERR_RUNTIME);
    }
    return static_cast<int>(BSX_OK);
  });
}

int bsx_regimes_json(const bsx_config* cfg, char** out) {
  if (!cfg || !out) return invalid_arg("bsx_regimes_json", "null argument");
  return guarded("bsx_regimes_json", [&] {
    const FullProblem p = build_problem(cfg->cfg);
    const RegimeReport report = classify_regime(p.times, cfg->cfg.regime_threshold);
    *out = copy_string(regime_report_json(report));
    return BSX_OK;
  });
}

int bsx_convergence_csv(const bsx_config* cfg, const char* variant, const double* epsilons,
                        int n_epsilons, char** out) {
  if (!cfg || !variant || !epsilons || n_epsilons <= 0 || !out)
    return invalid_arg("bsx_convergence_csv", "null or empty argument");
  return guarded("bsx_convergence_csv", [&] {
    RunConfig rc = cfg->cfg;
    rc.variant = variant;
    const FullProblem p = build_problem(rc);
    const VariantTag tag = resolve_variant(rc, p);
    const SystemState initial = build_initial_state(rc, p);
    const std::vector<double> eps(epsilons, epsilons + n_epsilons);
    const std::vector<ConvergenceRow> rows =
        limit_convergence_study(p, tag, eps, rc.run.t_end, rc.run.stepper, initial);
    *out = copy_string(convergence_csv(rows));
    return BSX_OK;
  });
}

int bsx_mp_equilibrium(double a, double b, double kappa, double c_out[3]) {
  if (!c_out) return invalid_arg("bsx_mp_equilibrium", "null output");
  return guarded("bsx_mp_equilibrium", [&] {
    MpParameters params{a, b, kappa};
    params.validate();
    const std::array<double, 3> c = mp_equilibrium(params);
    for (int i = 0; i < 3; ++i) c_out[i] = c[i];
    return BSX_OK;
  });
}

void bsx_string_free(char* s) { delete[] s; }

} // extern "C"
