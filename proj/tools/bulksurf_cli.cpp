#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bulksurf/capi.h"

namespace {

int fail(int code) {
  std::fprintf(stderr, "error: %s\n", bsx_last_error());
  std::fprintf(stderr, "%s", bsx_last_error_json());
  return code;
}

struct ConfigHandle {
  bsx_config* cfg{nullptr};
  ~ConfigHandle() { bsx_config_free(cfg); }
};

int load(const std::string& path, ConfigHandle& handle) {
  return bsx_config_load(path.c_str(), &handle.cfg);
}

std::vector<double> parse_epsilons(const std::string& list) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos < list.size()) {
    size_t comma = list.find(',', pos);
    if (comma == std::string::npos) comma = list.size();
    out.push_back(std::stod(list.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return out;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bulk-surface reaction-diffusion-sorption solver"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", variant, epsilon_list = "1e-1,1e-2,1e-3";
  double a = 0.0, b = 0.0, kappa = 1.0;

  CLI::App* run = app.add_subcommand("run", "Run the configured experiment");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--out", out_dir, "Output directory");

  CLI::App* regimes = app.add_subcommand("regimes", "Classify time-scale regimes");
  regimes->add_option("--config", config_path, "Config file")->required();

  CLI::App* equilibrium = app.add_subcommand("equilibrium", "Closed-form MP equilibrium");
  equilibrium->add_option("--a", a, "Conserved average a")->required();
  equilibrium->add_option("--b", b, "Conserved average b")->required();
  equilibrium->add_option("--kappa", kappa, "Boundary constant kappa")->required();

  CLI::App* convergence = app.add_subcommand("convergence", "Limit-convergence error table");
  convergence->add_option("--config", config_path, "Config file")->required();
  convergence->add_option("--variant", variant, "Limit variant tag")->required();
  convergence->add_option("--epsilons", epsilon_list, "Comma-separated scale factors");

  CLI::App* validate = app.add_subcommand("validate", "Validate a config file");
  validate->add_option("--config", config_path, "Config file")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    ConfigHandle h;
    if (load(config_path, h) != BSX_OK) return fail(2);
    if (bsx_run(h.cfg, out_dir.c_str()) != BSX_OK) return fail(3);
    std::printf("wrote %s/trajectory.ndjson and %s/final_state.csv\n", out_dir.c_str(),
                out_dir.c_str());
    return 0;
  }
  if (regimes->parsed()) {
    ConfigHandle h;
    if (load(config_path, h) != BSX_OK) return fail(2);
    char* json = nullptr;
    if (bsx_regimes_json(h.cfg, &json) != BSX_OK) return fail(3);
    std::printf("%s", json);
    bsx_string_free(json);
    return 0;
  }
  if (equilibrium->parsed()) {
    double c[3];
    if (bsx_mp_equilibrium(a, b, kappa, c) != BSX_OK) return fail(3);
    std::printf("{\"c1\": %.17g, \"c2\": %.17g, \"c3\": %.17g}\n", c[0], c[1], c[2]);
    return 0;
  }
  if (convergence->parsed()) {
    ConfigHandle h;
    if (load(config_path, h) != BSX_OK) return fail(2);
    const std::vector<double> eps = parse_epsilons(epsilon_list);
    char* csv = nullptr;
    if (bsx_convergence_csv(h.cfg, variant.c_str(), eps.data(), static_cast<int>(eps.size()),
                            &csv) != BSX_OK)
      return fail(3);
    std::printf("%s", csv);
    bsx_string_free(csv);
    return 0;
  }
  if (validate->parsed()) {
    ConfigHandle h;
    if (load(config_path, h) != BSX_OK) return fail(2);
    if (bsx_validate(h.cfg) != BSX_OK) return fail(2);
    std::printf("ok\n");
    return 0;
  }
  return 1;
}
