#include "bulksurf/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bulksurf/operators.hpp"
#include "bulksurf/solvers.hpp"

namespace bulksurf {

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

TrajectorySample make_sample(const FullProblem& p, const SystemState& s,
                             const ConservationBasis& basis, VariantTag tag,
                             const StepStats* stats, bool phi_solver) {
  TrajectorySample sample;
  sample.t = s.time;
  sample.totals = conserved_totals(p, s, basis, tag);
  sample.free_energy = free_energy(p, s);
  sample.min_value = s.min_value();
  if (stats) {
    sample.newton_res = stats->newton_res;
    if (phi_solver) sample.phi_iters = stats->inner_iters;
  }
  try {
    const EntropyTerms terms = entropy_production_terms(s, p);
    sample.zeta_diff =
        tag == VariantTag::ThreeParamMP ? terms.diff : terms.diff + terms.surf_diff;
  } catch (const std::exception&) {
    sample.zeta_diff = 0.0;
  }
  sample.surrogate_norm = surrogate_norm(p, s);
  return sample;
}

} // namespace

ExperimentResult run_trajectory(const RunConfig& cfg) {
  ExperimentResult result;
  const FullProblem p = build_problem(cfg);
  result.tag = resolve_variant(cfg, p);
  const ModelVariant variant = ModelVariant::make(result.tag, p);
  const bool phi_solver = cfg.solver == "phi";
  if (phi_solver && result.tag != VariantTag::ThreeParamMP)
    throw ConfigError("solver", "the phi iteration applies to the ThreeParamMP variant only");

  const ConservationBasis basis = joint_conservation_basis(p);
  SystemState state =
      prepare_initial_state(p, variant, build_initial_state(cfg, p), cfg.run.stepper);

  result.trajectory.samples.push_back(
      make_sample(p, state, basis, result.tag, nullptr, phi_solver));

  const double dt = cfg.run.stepper.dt;
  const long n_steps = std::lround(cfg.run.t_end / dt);
  for (long k = 1; k <= n_steps; ++k) {
    StepStats stats;
    state = phi_solver ? phi_fixed_point(p, state, cfg.run.stepper, &stats)
                       : step(p, variant, state, cfg.run.stepper, &stats);
    if (k % cfg.output.sample_stride == 0 || k == n_steps)
      result.trajectory.samples.push_back(
          make_sample(p, state, basis, result.tag, &stats, phi_solver));
  }
  result.final_state = state;
  return result;
}

std::string trajectory_ndjson(const ExperimentResult& result) {
  std::ostringstream out;
  for (const TrajectorySample& s : result.trajectory.samples) {
    out << "{\"t\":" << g17(s.t) << ",\"totals\":[";
    for (int i = 0; i < s.totals.size(); ++i) {
      if (i) out << ',';
      out << g17(s.totals[i]);
    }
    out << "],\"F\":" << g17(s.free_energy) << ",\"min_c\":" << g17(s.min_value)
        << ",\"newton_res\":" << g17(s.newton_res);
    if (s.phi_iters > 0) out << ",\"phi_iters\":" << s.phi_iters;
    out << "}\n";
  }
  return out.str();
}

std::string final_state_csv(const RunConfig& cfg, const FullProblem& p,
                            const ExperimentResult& result) {
  const int N = p.n_species();
  std::ostringstream out;
  out << "index,x,y,surface";
  for (const std::string& name : cfg.species) out << ',' << name;
  out << '\n';
  const SystemState& s = result.final_state;
  const bool two_d = p.mesh.cell_pos.cols() > 1;
  for (int c = 0; c < p.mesh.n_cells; ++c) {
    out << c << ',' << g17(p.mesh.cell_pos(c, 0)) << ','
        << g17(two_d ? p.mesh.cell_pos(c, 1) : 0.0) << ",0";
    for (int i = 0; i < N; ++i) out << ',' << g17(s.bulk(c, i));
    out << '\n';
  }
  const int axis = two_d ? 1 : 0;
  for (int b = 0; b < p.mesh.n_bnodes(); ++b) {
    const Mesh::BoundaryNode& node = p.mesh.bnodes[b];
    double pos[2] = {p.mesh.cell_pos(node.cell, 0),
                     two_d ? p.mesh.cell_pos(node.cell, 1) : 0.0};
    const double inward_sign =
        p.mesh.cell_pos(node.inward[1], axis) > p.mesh.cell_pos(node.cell, axis) ? 1.0 : -1.0;
    pos[axis] -= inward_sign * 0.5 * node.h;
    out << p.mesh.n_cells + b << ',' << g17(pos[0]) << ',' << g17(pos[1]) << ",1";
    for (int i = 0; i < N; ++i) out << ',' << g17(s.theta_red(b, i));
    out << '\n';
  }
  return out.str();
}

std::string regime_report_json(const RegimeReport& report) {
  std::ostringstream out;
  out << "{\n  \"threshold\": " << g17(report.threshold) << ",\n  \"ordering\": [";
  for (size_t i = 0; i < report.ordering.size(); ++i) {
    if (i) out << ", ";
    out << "{\"group\": \"" << report.ordering[i].first
        << "\", \"slow_scale\": " << g17(report.ordering[i].second) << "}";
  }
  out << "],\n  \"fast_groups\": [";
  for (size_t i = 0; i < report.fast_groups.size(); ++i) {
    if (i) out << ", ";
    out << '"' << report.fast_groups[i] << '"';
  }
  out << "],\n  \"recommendation\": \"" << to_string(report.recommendation)
      << "\",\n  \"notes\": [";
  for (size_t i = 0; i < report.notes.size(); ++i) {
    if (i) out << ", ";
    out << '"' << json_escape(report.notes[i]) << '"';
  }
  out << "]\n}\n";
  return out.str();
}

std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
  std::ostringstream out;
  out << "epsilon,error,ok,message\n";
  for (const ConvergenceRow& row : rows)
    out << g17(row.epsilon) << ',' << g17(row.error) << ',' << (row.ok ? 1 : 0) << ",\""
        << row.message << "\"\n";
  return out.str();
}

std::string error_record_json(const std::string& where, const std::string& message) {
  return "{\"error\": true, \"where\": \"" + json_escape(where) + "\", \"message\": \"" +
         json_escape(message) + "\"}\n";
}

int run_experiment(const RunConfig& cfg, const std::string& out_dir, std::string* error_out) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  try {
    const FullProblem p = build_problem(cfg);
    const ExperimentResult result = run_trajectory(cfg);
    std::ofstream(fs::path(out_dir) / "trajectory.ndjson") << trajectory_ndjson(result);
    std::ofstream(fs::path(out_dir) / "final_state.csv") << final_state_csv(cfg, p, result);
    return 0;
  } catch (const std::exception& e) {
    const std::string record = error_record_json("run_experiment", e.what());
    std::ofstream(fs::path(out_dir) / "error.json") << record;
    if (error_out) *error_out = record;
    return 1;
  }
}

} // namespace bulksurf
