#include "bulksurf/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bulksurf/operators.hpp"
#include "bulksurf/scales.hpp"

namespace bulksurf {

namespace {

using nlohmann::json;

double get_positive(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(key, "must be a number");
  const double v = j[key].get<double>();
  if (!(v > 0.0)) throw ConfigError(key, "must be strictly positive");
  return v;
}

std::vector<double> get_double_array(const json& j, const std::string& key, size_t expected) {
  if (!j.contains(key)) throw ConfigError(key, "is required");
  if (!j[key].is_array()) throw ConfigError(key, "must be an array");
  std::vector<double> out;
  for (size_t i = 0; i < j[key].size(); ++i) {
    if (!j[key][i].is_number())
      throw ConfigError(key + "[" + std::to_string(i) + "]", "must be a number");
    out.push_back(j[key][i].get<double>());
  }
  if (expected > 0 && out.size() != expected)
    throw ConfigError(key, "must have " + std::to_string(expected) + " entries");
  return out;
}

std::vector<int> get_int_array(const json& j, const std::string& key, size_t expected) {
  if (!j.contains(key)) throw ConfigError(key, "is required");
  std::vector<int> out;
  for (size_t i = 0; i < j[key].size(); ++i) {
    if (!j[key][i].is_number_integer() || j[key][i].get<int>() < 0)
      throw ConfigError(key + "[" + std::to_string(i) + "]", "must be a nonnegative integer");
    out.push_back(j[key][i].get<int>());
  }
  if (out.size() != expected)
    throw ConfigError(key, "must have " + std::to_string(expected) + " entries");
  return out;
}

ReactionConfig parse_reaction(const json& j, const std::string& key, size_t n_species) {
  ReactionConfig r;
  r.alpha = get_int_array(j, "alpha", n_species);
  r.beta = get_int_array(j, "beta", n_species);
  r.k_f = get_positive(j, "k_f", 1.0);
  r.k_b = get_positive(j, "k_b", 1.0);
  bool changes = false;
  for (size_t i = 0; i < n_species; ++i) changes |= r.alpha[i] != r.beta[i];
  if (!changes) throw ConfigError(key, "reaction must change at least one species");
  return r;
}

IVec to_ivec(const std::vector<int>& v) {
  IVec out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

} // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("JSON parse error: ") + e.what());
  }
  RunConfig cfg;

  if (!j.contains("species") || !j["species"].is_array() || j["species"].empty())
    throw ConfigError("species", "must be a nonempty array of names");
  for (const auto& name : j["species"]) {
    if (!name.is_string()) throw ConfigError("species", "entries must be strings");
    cfg.species.push_back(name.get<std::string>());
  }
  const size_t N = cfg.species.size();

  if (j.contains("geometry")) {
    const json& g = j["geometry"];
    cfg.geometry.type = g.value("type", "interval");
    if (cfg.geometry.type == "interval") {
      cfg.geometry.n_cells = static_cast<int>(get_positive(g, "n_cells", 100));
      cfg.geometry.length = get_positive(g, "length", 1.0);
    } else if (cfg.geometry.type == "strip") {
      cfg.geometry.nx = static_cast<int>(get_positive(g, "nx", 16));
      cfg.geometry.ny = static_cast<int>(get_positive(g, "ny", 16));
      cfg.geometry.lx = get_positive(g, "lx", 1.0);
      cfg.geometry.ly = get_positive(g, "ly", 1.0);
    } else {
      throw ConfigError("geometry.type", "must be 'interval' or 'strip'");
    }
  }

  if (j.contains("bulk_reactions"))
    for (size_t a = 0; a < j["bulk_reactions"].size(); ++a)
      cfg.bulk_reactions.push_back(
          parse_reaction(j["bulk_reactions"][a], "bulk_reactions[" + std::to_string(a) + "]", N));
  if (j.contains("surface_reactions"))
    for (size_t a = 0; a < j["surface_reactions"].size(); ++a)
      cfg.surface_reactions.push_back(parse_reaction(
          j["surface_reactions"][a], "surface_reactions[" + std::to_string(a) + "]", N));

  if (!j.contains("sorption")) throw ConfigError("sorption", "is required");
  cfg.k_ad = get_double_array(j["sorption"], "k_ad", N);
  cfg.k_de = get_double_array(j["sorption"], "k_de", N);
  for (size_t i = 0; i < N; ++i) {
    if (!(cfg.k_ad[i] > 0.0))
      throw ConfigError("sorption.k_ad[" + std::to_string(i) + "]", "must be strictly positive");
    if (!(cfg.k_de[i] > 0.0))
      throw ConfigError("sorption.k_de[" + std::to_string(i) + "]", "must be strictly positive");
  }

  if (j.contains("surface")) {
    cfg.site_capacity = get_positive(j["surface"], "site_capacity", 1.0);
    cfg.d_sigma_ref = get_positive(j["surface"], "d_ref", 1.0);
  }

  cfg.diffusivities = get_double_array(j, "diffusivities", N);
  for (size_t i = 0; i < N; ++i)
    if (!(cfg.diffusivities[i] > 0.0))
      throw ConfigError("diffusivities[" + std::to_string(i) + "]", "must be strictly positive");

  if (j.contains("mu0"))
    cfg.mu0 = get_double_array(j, "mu0", N);
  else
    cfg.mu0.assign(N, 0.0);

  if (j.contains("tau")) {
    for (const auto& [key, value] : j["tau"].items()) {
      static const std::vector<std::string> known = {
          "accumulation",    "bulk_diffusion",   "bulk_reaction", "surface_diffusion",
          "surface_reaction", "sorption",         "transmission"};
      bool ok = false;
      for (const std::string& k : known) ok |= k == key;
      if (!ok) throw ConfigError("tau." + key, "unknown process group");
      if (!value.is_number() || !(value.get<double>() > 0.0))
        throw ConfigError("tau." + key, "must be strictly positive");
      cfg.tau[key] = value.get<double>();
    }
  }

  cfg.variant = j.value("variant", "Full");
  cfg.regime_threshold = get_positive(j, "regime_threshold", 1e-2);
  cfg.solver = j.value("solver", "newton");
  if (cfg.solver != "newton" && cfg.solver != "phi")
    throw ConfigError("solver", "must be 'newton' or 'phi'");

  if (j.contains("initial")) {
    const json& init = j["initial"];
    if (init.contains("bulk")) {
      const json& b = init["bulk"];
      cfg.initial.bulk_type = b.value("type", "uniform");
      if (cfg.initial.bulk_type == "file") {
        if (!b.contains("path") || !b["path"].is_string())
          throw ConfigError("initial.bulk.path", "is required for file initial data");
        cfg.initial.path = b["path"].get<std::string>();
      } else {
        cfg.initial.values = get_double_array(b, "values", 0);
        cfg.initial.amplitude = b.value("amplitude", 0.0);
        if (cfg.initial.bulk_type == "uniform" || cfg.initial.bulk_type == "sinusoidal") {
          if (cfg.initial.values.size() != N)
            throw ConfigError("initial.bulk.values", "must have one entry per species");
        } else if (cfg.initial.bulk_type == "mp_compatible") {
          if (cfg.initial.values.size() != 2)
            throw ConfigError("initial.bulk.values",
                              "mp_compatible initial data takes two base values");
        } else {
          throw ConfigError("initial.bulk.type", "unknown initial data type");
        }
      }
    }
    if (init.contains("surface")) {
      const json& sf = init["surface"];
      cfg.initial.surface_type = sf.value("type", "isotherm");
      if (cfg.initial.surface_type == "uniform") {
        cfg.initial.theta = get_double_array(sf, "theta", N);
        double sum = 0.0;
        for (size_t i = 0; i < N; ++i) {
          if (cfg.initial.theta[i] < 0.0)
            throw ConfigError("initial.surface.theta[" + std::to_string(i) + "]",
                              "must be nonnegative");
          sum += cfg.initial.theta[i];
        }
        if (sum > 1.0 + 1e-12)
          throw ConfigError("initial.surface.theta", "occupancies exceed the site capacity");
      } else if (cfg.initial.surface_type != "isotherm") {
        throw ConfigError("initial.surface.type", "must be 'isotherm' or 'uniform'");
      }
    }
  } else {
    cfg.initial.values.assign(N, 1.0);
  }
  if (cfg.initial.bulk_type == "uniform" && cfg.initial.values.empty())
    cfg.initial.values.assign(N, 1.0);

  if (j.contains("stepper")) {
    const json& st = j["stepper"];
    cfg.run.stepper.dt = get_positive(st, "dt", 1e-3);
    cfg.run.t_end = get_positive(st, "t_end", 1.0);
    cfg.run.stepper.newton_tol = get_positive(st, "newton_tol", 1e-10);
    cfg.run.stepper.newton_max_iter = static_cast<int>(get_positive(st, "newton_max_iter", 30));
    cfg.run.stepper.dt_min = get_positive(st, "dt_min", 1e-9);
    cfg.run.stepper.phi_tol = get_positive(st, "phi_tol", 1e-10);
    cfg.run.stepper.phi_max_iter = static_cast<int>(get_positive(st, "phi_max_iter", 200));
    cfg.run.stepper.strict_compatibility = st.value("strict_compatibility", false);
    if (!(cfg.run.stepper.dt > cfg.run.stepper.dt_min))
      throw ConfigError("stepper.dt", "must exceed stepper.dt_min");
  }

  if (j.contains("output")) {
    const json& out = j["output"];
    cfg.output.sample_stride = static_cast<int>(get_positive(out, "sample_stride", 1));
    cfg.output.dir = out.value("dir", "out");
  }

  static const std::vector<std::string> variants = {
      "auto",          "Full",           "FastSorption",        "FastSurfaceChemistry",
      "TwoParamSorpChem", "ThreeParamMP", "FastSurfaceDiffusion", "FastAccumulation"};
  bool known_variant = false;
  for (const std::string& v : variants) known_variant |= v == cfg.variant;
  if (!known_variant) throw ConfigError("variant", "unknown model variant '" + cfg.variant + "'");

  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

FullProblem build_problem(const RunConfig& cfg) {
  FullProblem p;
  const int N = static_cast<int>(cfg.species.size());
  if (cfg.geometry.type == "interval")
    p.mesh = make_interval_mesh(cfg.geometry.n_cells, cfg.geometry.length);
  else
    p.mesh = make_strip_mesh(cfg.geometry.nx, cfg.geometry.ny, cfg.geometry.lx, cfg.geometry.ly);

  p.bulk.species.names = cfg.species;
  for (const ReactionConfig& rc : cfg.bulk_reactions) {
    Reaction r;
    r.alpha = to_ivec(rc.alpha);
    r.beta = to_ivec(rc.beta);
    r.k_f = rc.k_f;
    r.k_b = rc.k_b;
    p.bulk.reactions.push_back(std::move(r));
  }
  p.thermo.mu0 = to_vec(cfg.mu0);

  p.surface.n_species = N;
  for (const ReactionConfig& rc : cfg.surface_reactions)
    p.surface.reactions.push_back(
        extend_surface_stoichiometry(to_ivec(rc.alpha), to_ivec(rc.beta), rc.k_f, rc.k_b));

  p.sorption.k_ad = to_vec(cfg.k_ad);
  p.sorption.k_de = to_vec(cfg.k_de);
  p.surf_params.c_s = cfg.site_capacity;
  p.surf_params.n_species = N;
  p.d = to_vec(cfg.diffusivities);
  p.d_sigma = SurfaceDiffusionMatrix::simplex_default(cfg.d_sigma_ref);

  auto tau = [&cfg](const char* key) {
    auto it = cfg.tau.find(key);
    return it == cfg.tau.end() ? 1.0 : it->second;
  };
  p.inv_tau_acc = 1.0 / tau("accumulation");
  p.inv_tau_diff = 1.0 / tau("bulk_diffusion");
  p.inv_tau_react = 1.0 / tau("bulk_reaction");
  p.inv_tau_diff_sigma = 1.0 / tau("surface_diffusion");
  p.inv_tau_react_sigma = 1.0 / tau("surface_reaction");
  p.inv_tau_sorp = 1.0 / tau("sorption");
  p.inv_tau_trans = 1.0 / tau("transmission");

  p.times = config_time_scales(cfg, p);
  p.validate();
  return p;
}

TimeScales config_time_scales(const RunConfig& cfg, const FullProblem& p) {
  auto tau = [&cfg](const char* key) {
    auto it = cfg.tau.find(key);
    return it == cfg.tau.end() ? 1.0 : it->second;
  };
  TimeScales ts;
  ts.tau_r = tau("accumulation");
  ts.tau_diff = tau("bulk_diffusion");
  ts.tau_diff_sigma = tau("surface_diffusion");
  ts.tau_trans = tau("transmission");
  ts.tau_react_f = Vec::Constant(p.bulk.n_reactions(), tau("bulk_reaction"));
  ts.tau_react_b = ts.tau_react_f;
  ts.tau_react_sigma_f = Vec::Constant(p.surface.n_reactions(), tau("surface_reaction"));
  ts.tau_react_sigma_b = ts.tau_react_sigma_f;
  ts.tau_ad = Vec::Constant(p.n_species(), tau("sorption"));
  ts.tau_de = ts.tau_ad;
  auto agg = [](const Vec& v, double& slow, double& fast) {
    slow = v.size() ? v.maxCoeff() : 0.0;
    fast = v.size() ? v.minCoeff() : 0.0;
  };
  agg(ts.tau_react_f, ts.tau_react_slow, ts.tau_react_fast);
  agg(ts.tau_react_sigma_f, ts.tau_react_sigma_slow, ts.tau_react_sigma_fast);
  agg(ts.tau_ad, ts.tau_sorp_slow, ts.tau_sorp_fast);
  ts.lambda_react_f = Vec::Ones(ts.tau_react_f.size());
  ts.lambda_react_b = ts.lambda_react_f;
  ts.lambda_react_sigma_f = Vec::Ones(ts.tau_react_sigma_f.size());
  ts.lambda_react_sigma_b = ts.lambda_react_sigma_f;
  ts.lambda_ad = Vec::Ones(ts.tau_ad.size());
  ts.lambda_de = ts.lambda_ad;
  return ts;
}

VariantTag resolve_variant(const RunConfig& cfg, const FullProblem& p) {
  if (cfg.variant != "auto") {
    for (VariantTag tag : {VariantTag::Full, VariantTag::FastSorption,
                           VariantTag::FastSurfaceChemistry, VariantTag::TwoParamSorpChem,
                           VariantTag::ThreeParamMP, VariantTag::FastSurfaceDiffusion,
                           VariantTag::FastAccumulation})
      if (to_string(tag) == cfg.variant) return tag;
    throw ConfigError("variant", "unknown model variant '" + cfg.variant + "'");
  }
  const RegimeReport report = classify_regime(p.times, cfg.regime_threshold);
  switch (report.recommendation) {
    case Regime::FullModel: return VariantTag::Full;
    case Regime::FastSorption: return VariantTag::FastSorption;
    case Regime::FastSurfaceChemistry: return VariantTag::FastSurfaceChemistry;
    case Regime::TwoParamSorpChem: return VariantTag::TwoParamSorpChem;
    case Regime::ThreeParamLimit: return VariantTag::ThreeParamMP;
    case Regime::FastSurfaceDiffusion: return VariantTag::FastSurfaceDiffusion;
    case Regime::FastAccumulation: return VariantTag::FastAccumulation;
    case Regime::InvalidFastTransmission:
      throw ConfigError("variant",
                        "regime classification found fast transmission without fast "
                        "sorption; no runnable limit model exists");
  }
  return VariantTag::Full;
}

SystemState build_initial_state(const RunConfig& cfg, const FullProblem& p) {
  const int N = p.n_species();
  SystemState s;
  s.bulk = Mat(p.mesh.n_cells, N);
  const double L =
      cfg.geometry.type == "interval" ? cfg.geometry.length : cfg.geometry.ly;
  const int axis = cfg.geometry.type == "interval" ? 0 : 1;

  if (cfg.initial.bulk_type == "uniform") {
    for (int c = 0; c < p.mesh.n_cells; ++c)
      for (int i = 0; i < N; ++i) s.bulk(c, i) = cfg.initial.values[i];
  } else if (cfg.initial.bulk_type == "sinusoidal") {
    for (int c = 0; c < p.mesh.n_cells; ++c) {
      const double y = p.mesh.cell_pos(c, axis);
      const double f = 1.0 + cfg.initial.amplitude * std::cos(M_PI * y / L);
      for (int i = 0; i < N; ++i) s.bulk(c, i) = cfg.initial.values[i] * f;
    }
  } else if (cfg.initial.bulk_type == "mp_compatible") {
    if (!is_mp_problem(p))
      throw ConfigError("initial.bulk.type", "mp_compatible requires the MP problem shape");
    const double kappa = mp_kappa(p);
    for (int c = 0; c < p.mesh.n_cells; ++c) {
      const double y = p.mesh.cell_pos(c, axis);
      const double f = 1.0 + cfg.initial.amplitude * std::cos(M_PI * y / L);
      s.bulk(c, 0) = cfg.initial.values[0] * f;
      s.bulk(c, 1) = cfg.initial.values[1] * f;
      s.bulk(c, 2) = s.bulk(c, 0) * s.bulk(c, 1) / kappa;
    }
  } else if (cfg.initial.bulk_type == "file") {
    std::ifstream in(cfg.initial.path);
    if (!in) throw ConfigError("initial.bulk.path", "cannot open '" + cfg.initial.path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("initial.bulk.path", std::string("JSON parse error: ") + e.what());
    }
    if (!j.contains("bulk") || static_cast<int>(j["bulk"].size()) != p.mesh.n_cells)
      throw ConfigError("initial.bulk.path", "field 'bulk' must have one row per cell");
    for (int c = 0; c < p.mesh.n_cells; ++c)
      for (int i = 0; i < N; ++i) s.bulk(c, i) = j["bulk"][c][i].get<double>();
  }

  if ((s.bulk.array() < 0.0).any())
    throw ConfigError("initial.bulk", "initial concentrations must be nonnegative");

  s.theta_red = Mat(p.mesh.n_bnodes(), N);
  if (cfg.initial.surface_type == "uniform" && !cfg.initial.theta.empty()) {
    for (int b = 0; b < p.mesh.n_bnodes(); ++b)
      for (int i = 0; i < N; ++i) s.theta_red(b, i) = cfg.initial.theta[i];
  } else {
    Mat traces = boundary_trace(p.mesh, s.bulk);
    for (int b = 0; b < p.mesh.n_bnodes(); ++b) {
      const SurfaceState iso =
          sorption_equilibrium_solve(traces.row(b).transpose(), p.sorption);
      s.theta_red.row(b) = iso.theta.tail(N).transpose();
    }
  }

  s.ghosts = Mat(p.mesh.n_bnodes(), N);
  for (int b = 0; b < p.mesh.n_bnodes(); ++b)
    s.ghosts.row(b) = s.bulk.row(p.mesh.bnodes[b].cell);
  return s;
}

} // namespace bulksurf
