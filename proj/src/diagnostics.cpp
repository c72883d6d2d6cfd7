#include "bulksurf/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bulksurf/operators.hpp"

namespace bulksurf {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

SurfaceState node_state(const SystemState& s, int b) {
  SurfaceState st;
  const int N = static_cast<int>(s.theta_red.cols());
  st.theta = Vec(N + 1);
  st.theta[0] = 1.0 - s.theta_red.row(b).sum();
  st.theta.tail(N) = s.theta_red.row(b).transpose();
  return st;
}

} // namespace

void TrajectoryRecord::validate() const {
  for (size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].t > samples[i - 1].t))
      throw std::invalid_argument("trajectory sample times must be strictly increasing");
}

void MpParameters::validate() const {
  if (a < 0.0 || b < 0.0 || !(kappa > 0.0))
    throw std::invalid_argument("MP parameters require a, b >= 0 and kappa > 0");
}

Vec conserved_totals(const FullProblem& p, const SystemState& s, const ConservationBasis& basis,
                     VariantTag tag) {
  const int N = p.n_species();
  const double w = p.surface_weight();
  const bool surface_term = tag != VariantTag::ThreeParamMP;
  Vec totals = Vec::Zero(basis.dim());
  for (int k = 0; k < basis.dim(); ++k) {
    const Vec e = basis.vectors.col(k);
    double total = 0.0;
    for (int c = 0; c < p.mesh.n_cells; ++c)
      total += p.mesh.cell_volume * e.dot(s.bulk.row(c).transpose());
    if (surface_term) {
      for (int b = 0; b < p.mesh.n_bnodes(); ++b)
        total += w * p.mesh.bnodes[b].weight * e.dot(s.theta_red.row(b).transpose());
    }
    totals[k] = total;
  }
  return totals;
}

Vec surface_mu0(const FullProblem& p) {
  const Vec K = p.sorption.equilibrium_constants();
  Vec mu(p.n_species() + 1);
  mu[0] = 0.0;
  for (int i = 0; i < p.n_species(); ++i) mu[i + 1] = p.thermo.mu0[i] - std::log(K[i]);
  return mu;
}

double free_energy(const FullProblem& p, const SystemState& s) {
  if (s.bulk.minCoeff() < 0.0 || s.theta_red.minCoeff() < 0.0)
    throw std::domain_error("free_energy requires nonnegative state");
  const int N = p.n_species();
  double F = 0.0;
  for (int c = 0; c < p.mesh.n_cells; ++c) {
    double density = 0.0;
    for (int i = 0; i < N; ++i) {
      const double ci = s.bulk(c, i);
      density += ci * (p.thermo.mu0[i] - 1.0) + xlogx(ci);
    }
    F += p.mesh.cell_volume * density;
  }
  const Vec mu_s0 = surface_mu0(p);
  const double w = p.surface_weight();
  for (int b = 0; b < p.mesh.n_bnodes(); ++b) {
    const SurfaceState st = node_state(s, b);
    double density = 0.0;
    for (int i = 0; i <= N; ++i) density += st.theta[i] * mu_s0[i] + xlogx(st.theta[i]);
    F += w * p.mesh.bnodes[b].weight * density;
  }
  return F;
}

EntropyTerms entropy_production_terms(const SystemState& s, const FullProblem& p) {
  const int N = p.n_species();
  if (s.bulk.minCoeff() <= 0.0)
    throw std::domain_error("entropy production requires a strictly positive bulk state");
  EntropyTerms z;

  for (int c = 0; c < p.mesh.n_cells; ++c) {
    const Vec cvec = s.bulk.row(c).transpose();
    const Vec r = mass_action_rate(p.bulk, cvec);
    double acc = 0.0;
    for (int i = 0; i < N; ++i) acc -= (p.thermo.mu0[i] + std::log(cvec[i])) * r[i];
    z.chem += p.mesh.cell_volume * acc;
  }

  // interior faces once each; harmonic-mean concentration in the quotient
  for (int c = 0; c < p.mesh.n_cells; ++c) {
    for (const Mesh::Face& face : p.mesh.cell_faces[c]) {
      if (face.neighbor <= c) continue;
      for (int i = 0; i < N; ++i) {
        const double cl = s.bulk(c, i), cr = s.bulk(face.neighbor, i);
        const double cbar = 2.0 * cl * cr / (cl + cr);
        const double jump = cr - cl;
        z.diff += p.mesh.cell_volume * p.d[i] * jump * jump * face.inv_h2 / cbar;
      }
    }
  }

  const Vec mu_s0 = surface_mu0(p);
  const Mat traces = ghost_trace(p, s);
  for (int b = 0; b < p.mesh.n_bnodes(); ++b) {
    const SurfaceState st = node_state(s, b);
    const double wgt = p.mesh.bnodes[b].weight;
    const Vec r = surface_mass_action(p.surface, st, p.surf_params.c_s);
    double acc = 0.0;
    for (int i = 0; i <= N; ++i)
      if (st.theta[i] > 0.0) acc -= (mu_s0[i] + std::log(st.theta[i])) * r[i];
    z.surf_chem += wgt * acc;

    const Vec sr = sorption_rate(traces.row(b).transpose(), st, p.sorption, p.surf_params.c_s);
    double sacc = 0.0;
    for (int i = 0; i < N; ++i) {
      if (st.theta[i + 1] <= 0.0 || st.theta[0] <= 0.0 || traces(b, i) <= 0.0) continue;
      const double dmu = mu_s0[i + 1] + std::log(st.theta[i + 1]) -
                         (mu_s0[0] + std::log(st.theta[0])) -
                         (p.thermo.mu0[i] + std::log(traces(b, i)));
      sacc -= dmu * sr[i];
    }
    z.sorp += wgt * sacc;

    const Mesh::BoundaryNode& bn = p.mesh.bnodes[b];
    if (bn.right >= 0 && bn.right != b) {
      const SurfaceState nb = node_state(s, bn.right);
      const SurfaceState mid{0.5 * (st.theta + nb.theta)};
      const Mat D = p.d_sigma.evaluator(mid);
      const Vec jump = nb.theta - st.theta;
      const Vec flux = D * jump;
      double dacc = 0.0;
      for (int i = 0; i <= N; ++i) {
        if (st.theta[i] <= 0.0 || nb.theta[i] <= 0.0) continue;
        dacc += flux[i] * (std::log(nb.theta[i]) - std::log(st.theta[i]));
      }
      z.surf_diff += wgt * bn.inv_hs2 * dacc;
    }
  }
  return z;
}

double entropy_identity_residual(const TrajectoryRecord& traj) {
  traj.validate();
  if (traj.samples.size() < 2)
    throw std::invalid_argument("entropy identity needs at least two samples");
  double dissipated = 0.0;
  for (size_t i = 1; i < traj.samples.size(); ++i) {
    const double dt = traj.samples[i].t - traj.samples[i - 1].t;
    dissipated += 0.5 * dt * (traj.samples[i].zeta_diff + traj.samples[i - 1].zeta_diff);
  }
  return std::abs(traj.samples.back().free_energy + dissipated - traj.samples.front().free_energy);
}

std::array<double, 3> mp_equilibrium(const MpParameters& params) {
  params.validate();
  const double a = params.a, b = params.b, kappa = params.kappa;
  const double inv_k = 1.0 / kappa;
  const double root = std::sqrt(2.0 * (a + b) * inv_k + (b - a) * (b - a) + inv_k * inv_k);
  const double c1 = std::max(0.0, 0.5 * root - 0.5 * (inv_k + (b - a)));
  const double c2 = std::max(0.0, 0.5 * root - 0.5 * (inv_k + (a - b)));
  const double c3 = std::max(0.0, a - c1);
  return {c1, c2, c3};
}

std::array<double, 3> mp_equilibrium_residual(const MpParameters& params,
                                              const std::array<double, 3>& c) {
  return {c[0] * (1.0 + params.kappa * c[1]) - params.a,
          c[1] * (1.0 + params.kappa * c[0]) - params.b,
          c[2] - params.kappa * c[0] * c[1]};
}

double mp_equilibrium_cross_check(const MpParameters& params,
                                  const std::array<double, 3>& reference, int n_starts,
                                  unsigned seed) {
  params.validate();
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = 0.0;
  for (int run = 0; run < n_starts; ++run) {
    Vec c(3);
    c << unif(rng) * std::max(params.a, 1e-3), unif(rng) * std::max(params.b, 1e-3),
        unif(rng);
    for (int iter = 0; iter < 200; ++iter) {
      Vec G(3);
      G << c[0] * (1.0 + params.kappa * c[1]) - params.a,
          c[1] * (1.0 + params.kappa * c[0]) - params.b,
          c[2] - params.kappa * c[0] * c[1];
      if (G.lpNorm<Eigen::Infinity>() < 1e-14) break;
      Mat J(3, 3);
      J << 1.0 + params.kappa * c[1], params.kappa * c[0], 0.0,
          params.kappa * c[1], 1.0 + params.kappa * c[0], 0.0,
          -params.kappa * c[1], -params.kappa * c[0], 1.0;
      Vec delta = J.fullPivLu().solve(-G);
      double damp = 1.0;
      while (damp > 1e-6 && ((c + damp * delta).head(2).array() < 0.0).any()) damp *= 0.5;
      c += damp * delta;
    }
    for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(c[i] - reference[i]));
  }
  return worst;
}

PositivityReport positivity_monitor(const SystemState& s) {
  PositivityReport rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  std::ostringstream loc;
  for (int c = 0; c < s.bulk.rows(); ++c)
    for (int i = 0; i < s.bulk.cols(); ++i)
      if (s.bulk(c, i) < rep.min_value) {
        rep.min_value = s.bulk(c, i);
        loc.str("");
        loc << "bulk cell " << c << " species " << i;
      }
  for (int b = 0; b < s.theta_red.rows(); ++b) {
    for (int i = 0; i < s.theta_red.cols(); ++i)
      if (s.theta_red(b, i) < rep.min_value) {
        rep.min_value = s.theta_red(b, i);
        loc.str("");
        loc << "surface node " << b << " species " << i + 1;
      }
    const double theta0 = 1.0 - s.theta_red.row(b).sum();
    if (theta0 < rep.min_value) {
      rep.min_value = theta0;
      loc.str("");
      loc << "surface node " << b << " vacancies";
    }
  }
  rep.location = loc.str();
  return rep;
}

double surrogate_norm(const FullProblem& p, const SystemState& s) {
  double norm = s.bulk.cwiseAbs().maxCoeff();
  double grad2 = 0.0;
  for (int c = 0; c < p.mesh.n_cells; ++c)
    for (const Mesh::Face& face : p.mesh.cell_faces[c]) {
      if (face.neighbor <= c) continue;
      for (int i = 0; i < p.n_species(); ++i) {
        const double jump = s.bulk(face.neighbor, i) - s.bulk(c, i);
        grad2 += p.mesh.cell_volume * jump * jump * face.inv_h2;
      }
    }
  return norm + std::sqrt(grad2);
}

BlowupReport blowup_monitor(const TrajectoryRecord& traj, double threshold) {
  traj.validate();
  BlowupReport rep;
  for (const TrajectorySample& sample : traj.samples) {
    rep.norm = std::max(rep.norm, sample.surrogate_norm);
    if (sample.surrogate_norm > threshold) {
      rep.ok = false;
      rep.time = sample.t;
      return rep;
    }
  }
  return rep;
}

FullProblem scale_fast_processes(const FullProblem& p, VariantTag tag, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  FullProblem out = p;
  const double f = 1.0 / epsilon;
  switch (tag) {
    case VariantTag::FastSorption: out.inv_tau_sorp *= f; break;
    case VariantTag::FastSurfaceChemistry: out.inv_tau_react_sigma *= f; break;
    case VariantTag::TwoParamSorpChem:
      out.inv_tau_sorp *= f;
      out.inv_tau_react_sigma *= f;
      break;
    case VariantTag::ThreeParamMP:
      // hierarchical scaling: sorption and surface chemistry are ultra-fast
      // relative to the fast transmission
      out.inv_tau_sorp *= f * f;
      out.inv_tau_react_sigma *= f * f;
      out.inv_tau_trans *= f;
      break;
    case VariantTag::FastSurfaceDiffusion: out.inv_tau_diff_sigma *= f; break;
    case VariantTag::FastAccumulation: out.inv_tau_acc *= f; break;
    case VariantTag::Full:
      throw std::invalid_argument("limit convergence study requires a limit variant");
  }
  return out;
}

std::vector<ConvergenceRow> limit_convergence_study(const FullProblem& p, VariantTag tag,
                                                    const std::vector<double>& epsilons,
                                                    double horizon, const StepperConfig& cfg,
                                                    const SystemState& initial) {
  if (tag == VariantTag::Full)
    throw std::invalid_argument("limit convergence study requires a limit variant");
  const int n_steps = std::max(1, static_cast<int>(std::llround(horizon / cfg.dt)));

  const ModelVariant limit = ModelVariant::make(tag, p);
  SystemState limit_state = prepare_initial_state(p, limit, initial, cfg);
  for (int k = 0; k < n_steps; ++k) limit_state = step(p, limit, limit_state, cfg);

  std::vector<ConvergenceRow> table;
  for (double eps : epsilons) {
    ConvergenceRow row;
    row.epsilon = eps;
    try {
      const FullProblem scaled = scale_fast_processes(p, tag, eps);
      const ModelVariant full = ModelVariant::make(VariantTag::Full, scaled);
      SystemState s = prepare_initial_state(scaled, full, initial, cfg);
      for (int k = 0; k < n_steps; ++k) s = step(scaled, full, s, cfg);
      row.error = (s.bulk - limit_state.bulk).cwiseAbs().maxCoeff();
    } catch (const std::exception& e) {
      row.ok = false;
      row.message = e.what();
    }
    table.push_back(row);
  }
  return table;
}

} // namespace bulksurf
