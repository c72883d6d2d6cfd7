// Acceptance suite: ten independent criteria, one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bulksurf/config.hpp"
#include "bulksurf/diagnostics.hpp"
#include "bulksurf/experiment.hpp"
#include "bulksurf/operators.hpp"
#include "bulksurf/solvers.hpp"

using namespace bulksurf;

namespace {

constexpr double kPi = 3.14159265358979323846;

const std::string kPresetDir = BULKSURF_PRESET_DIR;

const std::vector<std::string> kPresets = {
    "mp_interval.json",     "mp_interval_full.json", "mp_phi.json",
    "mp_strip.json",        "sorption_only.json",    "bulk_ab.json",
    "bulk_abc.json",        "surface_ab.json",       "fast_sorption.json",
    "fast_chemistry.json",  "two_param.json",        "fast_surface_diffusion.json",
    "fast_accumulation.json"};

struct Check {
  bool ok{true};
  std::string detail;

  void require(bool cond, const std::string& why) {
    if (!cond && ok) {
      ok = false;
      detail = why;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunConfig mp_preset(int n_cells = 100) {
  RunConfig cfg = load_config(kPresetDir + "/mp_interval.json");
  cfg.geometry.n_cells = n_cells;
  return cfg;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Closed-form equilibrium against its defining equations and an
//    independent Newton solve, including the boundary rows.
Check criterion_equilibrium_oracle() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(20240817);
  std::uniform_real_distribution<double> u(1e-6, 10.0);
  for (int trial = 0; trial < 100 && c.ok; ++trial) {
    MpParameters mp;
    mp.a = u(rng);
    mp.b = u(rng);
    mp.kappa = u(rng);
    const auto eq = mp_equilibrium(mp);
    const auto res = mp_equilibrium_residual(mp, eq);
    const double scale = std::max({1.0, mp.a, mp.b});
    for (double r : res)
      c.require(std::abs(r) <= 1e-12 * scale,
                "residual " + fmt(std::abs(r)) + " at trial " + std::to_string(trial));
    const double dev = mp_equilibrium_cross_check(mp, eq, 10, 1000u + trial);
    c.require(dev <= 1e-9, "Newton cross-check deviation " + fmt(dev));
  }
  for (double b : {0.5, 3.0}) {
    MpParameters mp;
    mp.a = 0.0;
    mp.b = b;
    mp.kappa = 2.0;
    const auto eq = mp_equilibrium(mp);
    c.require(std::abs(eq[0]) <= 1e-12 && std::abs(eq[1] - b) <= 1e-12 &&
                  std::abs(eq[2]) <= 1e-12,
              "boundary row a=0 violated");
    mp.a = b;
    mp.b = 0.0;
    const auto eq2 = mp_equilibrium(mp);
    c.require(std::abs(eq2[0] - b) <= 1e-12 && std::abs(eq2[1]) <= 1e-12 &&
                  std::abs(eq2[2]) <= 1e-12,
              "boundary row b=0 violated");
  }
  c.require(seconds_since(t0) <= 1.0, "runtime budget of 1 s exceeded");
  return c;
}

// ---------------------------------------------------------------------------
// 2. Conservation drift on the 100-cell run for both the limit stepper and
//    the full stepper (the latter including the surface totals).
Check criterion_conservation() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = mp_preset(100);
  const FullProblem p = build_problem(cfg);
  const ConservationBasis basis = joint_conservation_basis(p);
  StepperConfig scfg = cfg.run.stepper;
  scfg.newton_tol = 1e-12;
  const int n_steps = 1000;
  for (VariantTag tag : {VariantTag::ThreeParamMP, VariantTag::Full}) {
    const ModelVariant v = ModelVariant::make(tag, p);
    SystemState s = prepare_initial_state(p, v, build_initial_state(cfg, p), scfg);
    const Vec start = conserved_totals(p, s, basis, tag);
    for (int k = 0; k < n_steps; ++k) s = step(p, v, s, scfg);
    const Vec end = conserved_totals(p, s, basis, tag);
    for (int i = 0; i < start.size(); ++i) {
      const double drift = std::abs(end[i] - start[i]) / std::max(1e-300, std::abs(start[i]));
      c.require(drift <= 1e-8,
                to_string(tag) + " total " + std::to_string(i) + " drift " + fmt(drift));
    }
  }
  c.require(seconds_since(t0) <= 30.0, "runtime budget of 30 s exceeded");
  return c;
}

// ---------------------------------------------------------------------------
// Shared preset trajectories for criteria 3 and 4.
struct SuiteRun {
  std::string name;
  ExperimentResult result;
};

const std::vector<SuiteRun>& suite_runs() {
  static std::vector<SuiteRun> runs = [] {
    std::vector<SuiteRun> out;
    for (const std::string& name : kPresets) {
      SuiteRun run;
      run.name = name;
      run.result = run_trajectory(load_config(kPresetDir + "/" + name));
      out.push_back(std::move(run));
    }
    return out;
  }();
  return runs;
}

// 3. Positivity across the whole preset suite.
Check criterion_positivity() {
  Check c;
  c.require(kPresets.size() >= 10, "suite must cover at least 10 configurations");
  for (const SuiteRun& run : suite_runs()) {
    c.require(run.result.ok, run.name + ": " + run.result.message);
    for (const TrajectorySample& s : run.result.trajectory.samples)
      c.require(s.min_value >= -1e-12,
                run.name + ": minimum " + fmt(s.min_value) + " at t=" + fmt(s.t));
  }
  return c;
}

// 4. Free-energy decay per sample; a violation must shrink at least 4x when
//    dt is halved (discretization artifact, not a modeling error).
Check criterion_free_energy() {
  Check c;
  auto max_violation = [](const ExperimentResult& r) {
    double worst = 0.0;
    for (size_t i = 1; i < r.trajectory.samples.size(); ++i) {
      const double prev = r.trajectory.samples[i - 1].free_energy;
      const double cur = r.trajectory.samples[i].free_energy;
      const double tol = 1e-6 * std::max(1.0, std::abs(prev));
      worst = std::max(worst, cur - prev - tol);
    }
    return worst;
  };
  for (const SuiteRun& run : suite_runs()) {
    const double v = max_violation(run.result);
    if (v <= 0.0) continue;
    RunConfig cfg = load_config(kPresetDir + "/" + run.name);
    cfg.run.stepper.dt *= 0.5;
    const double v_half = max_violation(run_trajectory(cfg));
    c.require(v_half <= 0.25 * v, run.name + ": violation " + fmt(v) +
                                      " only shrank to " + fmt(v_half) +
                                      " after halving dt");
  }
  return c;
}

// ---------------------------------------------------------------------------
// 5. Entropy identity residual under joint (dt, h) refinement.
Check criterion_entropy_identity() {
  Check c;
  auto residual_at = [](double dt, int n_cells) {
    const RunConfig cfg = [&] {
      RunConfig base = load_config(kPresetDir + "/mp_interval.json");
      base.geometry.n_cells = n_cells;
      return base;
    }();
    const FullProblem p = build_problem(cfg);
    const ModelVariant v = ModelVariant::make(VariantTag::ThreeParamMP, p);
    StepperConfig scfg = cfg.run.stepper;
    scfg.dt = dt;
    SystemState s = prepare_initial_state(p, v, build_initial_state(cfg, p), scfg);
    TrajectoryRecord traj;
    const int n_steps = static_cast<int>(std::lround(0.2 / dt));
    for (int k = 0; k <= n_steps; ++k) {
      TrajectorySample sample;
      sample.t = k * dt;
      sample.free_energy = free_energy(p, s);
      sample.zeta_diff = entropy_production_terms(s, p).diff;
      traj.samples.push_back(sample);
      if (k < n_steps) s = step(p, v, s, scfg);
    }
    return entropy_identity_residual(traj);
  };
  const double r0 = residual_at(4e-3, 20);
  const double r1 = residual_at(2e-3, 40);
  const double r2 = residual_at(1e-3, 80);
  c.require(r1 < r0 && r2 < r1, "residuals not monotone: " + fmt(r0) + " -> " + fmt(r1) +
                                    " -> " + fmt(r2));
  return c;
}

// ---------------------------------------------------------------------------
// 6. Limit convergence: fast sorption strictly decreasing; triple limit
//    strictly decreasing with a tenfold overall reduction.
Check criterion_limit_convergence() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> epsilons = {1e-1, 1e-2, 1e-3};

  {
    const RunConfig cfg = load_config(kPresetDir + "/sorption_only.json");
    const FullProblem p = build_problem(cfg);
    const SystemState init = build_initial_state(cfg, p);
    const auto table = limit_convergence_study(p, VariantTag::FastSorption, epsilons, 0.3,
                                               cfg.run.stepper, init);
    for (const ConvergenceRow& row : table)
      c.require(row.ok, "fast sorption run failed at eps=" + fmt(row.epsilon) + ": " +
                            row.message);
    if (c.ok) {
      c.require(table[0].error > table[1].error && table[1].error > table[2].error,
                "fast sorption errors not strictly decreasing: " + fmt(table[0].error) +
                    ", " + fmt(table[1].error) + ", " + fmt(table[2].error));
    }
  }

  {
    const RunConfig cfg = mp_preset(60);
    const FullProblem p = build_problem(cfg);
    const SystemState init = build_initial_state(cfg, p);
    const auto table = limit_convergence_study(p, VariantTag::ThreeParamMP, epsilons, 0.5,
                                               cfg.run.stepper, init);
    for (const ConvergenceRow& row : table)
      c.require(row.ok, "triple-limit run failed at eps=" + fmt(row.epsilon) + ": " +
                            row.message);
    if (c.ok) {
      c.require(table[0].error > table[1].error && table[1].error > table[2].error,
                "triple-limit errors not strictly decreasing: " + fmt(table[0].error) +
                    ", " + fmt(table[1].error) + ", " + fmt(table[2].error));
      c.require(table[2].error < 0.1 * table[0].error,
                "triple-limit reduction ratio " + fmt(table[2].error / table[0].error) +
                    " not below 0.1");
    }
  }
  c.require(seconds_since(t0) <= 300.0, "runtime budget of 5 min exceeded");
  return c;
}

// ---------------------------------------------------------------------------
// 7. Subproblem-iteration fidelity against the monolithic solver.
Check criterion_phi_fidelity() {
  Check c;
  const RunConfig cfg = mp_preset(100);
  const FullProblem p = build_problem(cfg);
  const ModelVariant v = ModelVariant::make(VariantTag::ThreeParamMP, p);
  const StepperConfig scfg = cfg.run.stepper;
  SystemState a = prepare_initial_state(p, v, build_initial_state(cfg, p), scfg);
  SystemState b = a;
  for (int k = 0; k < 20 && c.ok; ++k) {
    StepStats stats;
    a = step(p, v, a, scfg);
    b = phi_fixed_point(p, b, scfg, &stats);
    c.require(stats.inner_iters <= 50,
              "iteration count " + std::to_string(stats.inner_iters) + " exceeds 50");
    c.require(stats.contraction < 1.0, "contraction ratio " + fmt(stats.contraction));
    const double diff = (a.bulk - b.bulk).cwiseAbs().maxCoeff();
    c.require(diff <= 1e-8, "solver disagreement " + fmt(diff) + " at step " +
                                std::to_string(k + 1));
  }
  return c;
}

// ---------------------------------------------------------------------------
// 8. Observed discretization orders on manufactured fields.
Check criterion_orders() {
  Check c;
  auto order = [](const std::function<double(int)>& err, int n0) {
    const double e1 = err(n0), e2 = err(2 * n0), e3 = err(4 * n0);
    return std::min(std::log2(e1 / e2), std::log2(e2 / e3));
  };

  auto laplacian_err = [](int n) {
    const Mesh mesh = make_interval_mesh(n, 1.0);
    const double w = 2.0 * kPi;
    Mat f(n, 1), ghosts(2, 1);
    for (int i = 0; i < n; ++i) f(i, 0) = std::sin(w * mesh.cell_pos(i, 0));
    const double h = mesh.cell_volume;
    ghosts(0, 0) = std::sin(w * (-0.5 * h));
    ghosts(1, 0) = std::sin(w * (1.0 + 0.5 * h));
    const Mat lap = laplacian_apply(mesh, f, Vec::Ones(1), ghosts);
    double err = 0.0;
    for (int i = 0; i < n; ++i)
      err = std::max(err, std::abs(lap(i, 0) + w * w * std::sin(w * mesh.cell_pos(i, 0))));
    return err;
  };
  auto surface_err = [](int nx) {
    const Mesh mesh = make_strip_mesh(nx, 3, 1.0, 1.0);
    const double w = 2.0 * kPi;
    Vec g(mesh.n_bnodes());
    for (int k = 0; k < mesh.n_bnodes(); ++k)
      g[k] = std::sin(w * ((k % nx) + 0.5) / nx);
    return (surface_laplacian_apply(mesh, g) + w * w * g).lpNorm<Eigen::Infinity>();
  };
  auto trace_err = [](int n) {
    const Mesh mesh = make_interval_mesh(n, 1.0);
    Mat f(n, 1);
    for (int i = 0; i < n; ++i) {
      const double y = mesh.cell_pos(i, 0);
      f(i, 0) = y * y * y;
    }
    const Mat tr = boundary_trace(mesh, f);
    return std::max(std::abs(tr(0, 0)), std::abs(tr(1, 0) - 1.0));
  };
  auto flux_err = [](int n) {
    const Mesh mesh = make_interval_mesh(n, 1.0);
    const double w = 2.0 * kPi;
    Mat f(n, 1);
    for (int i = 0; i < n; ++i) f(i, 0) = std::sin(w * mesh.cell_pos(i, 0));
    const Mat flux = normal_flux(mesh, f, Vec::Ones(1));
    return std::max(std::abs(flux(0, 0) - w), std::abs(flux(1, 0) + w));
  };

  const double p_lap = order(laplacian_err, 20);
  const double p_surf = order(surface_err, 16);
  const double p_trace = order(trace_err, 20);
  const double p_flux = order(flux_err, 20);
  c.require(p_lap >= 1.9, "bulk Laplacian order " + fmt(p_lap));
  c.require(p_surf >= 1.9, "surface Laplacian order " + fmt(p_surf));
  c.require(p_trace >= 1.9, "boundary trace order " + fmt(p_trace));
  c.require(p_flux >= 1.9, "normal flux order " + fmt(p_flux));
  return c;
}

// ---------------------------------------------------------------------------
// 9. Isotherm consistency chain: closed form, fast-sorption stepper, and
//    the frozen-trace attractor with start independence.
Check criterion_isotherm() {
  Check c;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  SorptionModel model;
  model.k_ad = Vec(3);
  model.k_de = Vec(3);
  for (int trial = 0; trial < 50; ++trial) {
    for (int i = 0; i < 3; ++i) {
      model.k_ad[i] = 0.1 + u(rng);
      model.k_de[i] = 0.1 + u(rng);
    }
    Vec ct(3);
    for (int i = 0; i < 3; ++i) ct[i] = u(rng);
    const SurfaceState iso = sorption_equilibrium_solve(ct, model);
    const Vec s = sorption_rate(ct, iso, model, 1.7);
    c.require(s.cwiseAbs().maxCoeff() <= 1e-14,
              "closed-form isotherm leaves sorption rate " + fmt(s.cwiseAbs().maxCoeff()));
  }

  const RunConfig cfg = mp_preset(60);
  const FullProblem p = build_problem(cfg);
  const ModelVariant v = ModelVariant::make(VariantTag::FastSorption, p);
  const StepperConfig scfg = cfg.run.stepper;
  SystemState s = prepare_initial_state(p, v, build_initial_state(cfg, p), scfg);
  for (int k = 0; k < 10; ++k) s = step(p, v, s, scfg);
  const Mat traces = ghost_trace(p, s);
  for (int b = 0; b < p.mesh.n_bnodes(); ++b) {
    const SurfaceState iso = sorption_equilibrium_solve(traces.row(b), p.sorption);
    const double diff = (s.theta_red.row(b) - iso.reduced().transpose()).cwiseAbs().maxCoeff();
    c.require(diff <= 1e-8, "fast-sorption boundary off the isotherm by " + fmt(diff));
  }

  FullProblem ps;
  ps.mesh = make_interval_mesh(10, 1.0);
  ps.bulk.species.names = {"A1", "A2"};
  ps.thermo = ThermoParams::zero(2);
  ps.surface.n_species = 2;
  ps.sorption.k_ad = Vec::Constant(2, 2.0);
  ps.sorption.k_de = Vec::Constant(2, 1.0);
  ps.surf_params.c_s = 1.0;
  ps.surf_params.n_species = 2;
  ps.d = Vec::Ones(2);
  ps.d_sigma = SurfaceDiffusionMatrix::simplex_default(1.0);
  Mat tr(ps.mesh.n_bnodes(), 2);
  tr.col(0).setConstant(0.8);
  tr.col(1).setConstant(1.3);
  const AttractorResult res = surface_attractor(ps, tr, StepperConfig{}, nullptr, true);
  c.require(res.converged, "attractor did not converge");
  c.require(res.unique && res.start_disagreement <= 1e-8,
            "attractor start dependence " + fmt(res.start_disagreement));
  const SurfaceState iso = sorption_equilibrium_solve(tr.row(0).transpose(), ps.sorption);
  for (int b = 0; b < ps.mesh.n_bnodes(); ++b) {
    const double diff =
        (res.theta_red.row(b) - iso.reduced().transpose()).cwiseAbs().maxCoeff();
    c.require(diff <= 1e-10, "attractor misses the isotherm by " + fmt(diff));
  }
  return c;
}

// ---------------------------------------------------------------------------
// 10. Algebraic layer: conservation bases, detailed-balance rank checks,
//     positive conservation vectors and their certificates.
Check criterion_algebra() {
  Check c;
  auto make_net = [](int n, std::vector<Reaction> reactions) {
    ReactionNetwork net;
    for (int i = 0; i < n; ++i) net.species.names.push_back("A" + std::to_string(i + 1));
    net.reactions = std::move(reactions);
    return net;
  };
  auto reaction = [](std::vector<int> a, std::vector<int> b, double kf, double kb) {
    Reaction r;
    r.alpha = Eigen::Map<const IVec>(a.data(), a.size());
    r.beta = Eigen::Map<const IVec>(b.data(), b.size());
    r.k_f = kf;
    r.k_b = kb;
    return r;
  };

  const ReactionNetwork mp = make_net(3, {reaction({1, 1, 0}, {0, 0, 1}, 2.0, 1.0)});
  const ConservationBasis basis = conservation_basis(mp);
  c.require(basis.dim() == 2, "MP conservation basis dimension " +
                                  std::to_string(basis.dim()));
  const double ortho =
      (basis.vectors.transpose() * basis.vectors - Mat::Identity(2, 2))
          .lpNorm<Eigen::Infinity>();
  c.require(ortho <= 1e-12, "basis orthogonality defect " + fmt(ortho));
  const double idem =
      (basis.projector * basis.projector - basis.projector).lpNorm<Eigen::Infinity>();
  c.require(idem <= 1e-12, "projector idempotence defect " + fmt(idem));

  c.require(detailed_balance_check(mp).detailed_balanced,
            "single independent reaction misclassified");
  const ReactionNetwork dup = make_net(3, {reaction({1, 1, 0}, {0, 0, 1}, 1.0, 1.0),
                                           reaction({1, 1, 0}, {0, 0, 1}, 2.0, 1.0)});
  c.require(!detailed_balance_check(dup).detailed_balanced,
            "duplicated stoichiometry misclassified");
  const ReactionNetwork pair = make_net(3, {reaction({1, 1, 0}, {0, 0, 1}, 1.0, 1.0),
                                            reaction({0, 0, 1}, {1, 1, 0}, 1.0, 1.0)});
  c.require(!detailed_balance_check(pair).detailed_balanced,
            "forward/backward pair misclassified");

  const auto e = positive_conservation_vector(mp);
  c.require(e.has_value() && e->minCoeff() > 0.0, "MP positive vector missing");
  if (e.has_value()) {
    Vec nu(3);
    nu << -1.0, -1.0, 1.0;
    c.require(std::abs(e->dot(nu)) <= 1e-12, "certificate not orthogonal to nu");
  }
  const ReactionNetwork bad = make_net(3, {reaction({0, 1, 1}, {1, 1, 1}, 1.0, 1.0)});
  int certificate = -1;
  const auto none = positive_conservation_vector(bad, &certificate);
  c.require(!none.has_value(), "nonexistence case produced a vector");
  c.require(certificate == 0, "nonexistence certificate index " +
                                  std::to_string(certificate));
  return c;
}

} // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria = {
      {"MP equilibrium oracle", criterion_equilibrium_oracle},
      {"conservation drift", criterion_conservation},
      {"positivity across the suite", criterion_positivity},
      {"free-energy decay", criterion_free_energy},
      {"entropy identity refinement", criterion_entropy_identity},
      {"limit convergence", criterion_limit_convergence},
      {"subproblem-iteration fidelity", criterion_phi_fidelity},
      {"discretization orders", criterion_orders},
      {"isotherm consistency", criterion_isotherm},
      {"algebraic layer", criterion_algebra},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Check result;
    try {
      result = criteria[i].run();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    if (result.ok) {
      std::printf("criterion %zu (%s): PASS\n", i + 1, criteria[i].name);
    } else {
      std::printf("criterion %zu (%s): FAIL - %s\n", i + 1, criteria[i].name,
                  result.detail.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  return failures;
}
