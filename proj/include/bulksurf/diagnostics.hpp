#pragma once

#include <array>
#include <string>
#include <vector>

#include "bulksurf/problem.hpp"
#include "bulksurf/solvers.hpp"

namespace bulksurf {

struct TrajectorySample {
  double t{0.0};
  Vec totals;
  double free_energy{0.0};
  double min_value{0.0};
  double newton_res{0.0};
  int phi_iters{0};
  double zeta_diff{0.0};
  double surrogate_norm{0.0};
};

struct TrajectoryRecord {
  std::vector<TrajectorySample> samples;

  void validate() const;
};

struct MpParameters {
  double a{0.0};
  double b{0.0};
  double kappa{1.0};

  void validate() const;
};

/// Discrete totals of e^k-weighted bulk plus surface mass (surface term
/// omitted for ThreeParamMP, whose limit conserves the bulk alone).
Vec conserved_totals(const FullProblem& p, const SystemState& s, const ConservationBasis& basis,
                     VariantTag tag);

/// Total free energy: bulk mixing entropy plus the weighted Langmuir
/// surface term. The surface reference potentials are derived from the
/// sorption constants so that sorption is dissipative.
double free_energy(const FullProblem& p, const SystemState& s);

/// Surface reference potentials mu_i^{Sigma,0} = mu_i^0 - ln K_i (vacancy
/// slot zero), the choice consistent with the sorption closure.
Vec surface_mu0(const FullProblem& p);

struct EntropyTerms {
  double chem{0.0};
  double diff{0.0};
  double surf_chem{0.0};
  double surf_diff{0.0};
  double sorp{0.0};
};

EntropyTerms entropy_production_terms(const SystemState& s, const FullProblem& p);

/// Residual of the discrete entropy identity
/// F(T) + int_0^T zeta_diff dt - F(0) over the sampled trajectory
/// (bulk-reaction term absent: the MP system has no bulk reactions).
double entropy_identity_residual(const TrajectoryRecord& traj);

/// Closed-form MP equilibrium (c1, c2, c3) for conserved averages a, b and
/// boundary constant kappa in c3 = kappa c1 c2.
std::array<double, 3> mp_equilibrium(const MpParameters& params);

/// Residuals of the three defining equations at a candidate equilibrium.
std::array<double, 3> mp_equilibrium_residual(const MpParameters& params,
                                              const std::array<double, 3>& c);

/// Independent damped-Newton solve of the 3x3 equilibrium system from
/// n_starts random starts; returns the worst deviation from `reference`.
double mp_equilibrium_cross_check(const MpParameters& params,
                                  const std::array<double, 3>& reference, int n_starts,
                                  unsigned seed);

struct PositivityReport {
  double min_value{0.0};
  std::string location;
};

PositivityReport positivity_monitor(const SystemState& s);

/// Discrete W1-type norm surrogate used by the blow-up monitor.
double surrogate_norm(const FullProblem& p, const SystemState& s);

struct BlowupReport {
  bool ok{true};
  double norm{0.0};
  double time{0.0};
};

BlowupReport blowup_monitor(const TrajectoryRecord& traj, double threshold);

struct ConvergenceRow {
  double epsilon{0.0};
  double error{0.0};
  bool ok{true};
  std::string message;
};

/// Scales the variant's fast characteristic times by each epsilon inside
/// the full model, runs to the horizon, and reports the terminal-state
/// distance to the limit-variant trajectory.
std::vector<ConvergenceRow> limit_convergence_study(const FullProblem& p, VariantTag tag,
                                                    const std::vector<double>& epsilons,
                                                    double horizon, const StepperConfig& cfg,
                                                    const SystemState& initial);

/// Full-model problem with the fast time scales of `tag` accelerated by 1/epsilon.
FullProblem scale_fast_processes(const FullProblem& p, VariantTag tag, double epsilon);

} // namespace bulksurf
