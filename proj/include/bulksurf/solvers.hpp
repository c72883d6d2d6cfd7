#pragma once

#include <string>

#include "bulksurf/problem.hpp"

namespace bulksurf {

struct StepStats {
  bool ok{true};
  std::string message;
  double newton_res{0.0};
  int newton_iters{0};
  int dt_halvings{0};
  int inner_iters{0};      // attractor refreshes (FastAccumulation) or phi iterations
  double contraction{0.0}; // last measured phi contraction ratio
};

struct ProjectionReport {
  double distance{0.0};
  std::string warning;
};

/// Projects an initial state onto the variant's constraint manifold (where
/// one exists) and records the projection distance; for ThreeParamMP only
/// checks the boundary compatibility, rejecting or warning per config.
SystemState prepare_initial_state(const FullProblem& p, const ModelVariant& v,
                                  const SystemState& s, const StepperConfig& cfg,
                                  ProjectionReport* report = nullptr);

/// One implicit-Euler step of length cfg.dt (internally halved on Newton
/// failure, down to cfg.dt_min). Throws std::runtime_error on failure.
SystemState step(const FullProblem& p, const ModelVariant& v, const SystemState& s,
                 const StepperConfig& cfg, StepStats* stats = nullptr);

SystemState step_full(const FullProblem& p, const SystemState& s, const StepperConfig& cfg,
                      StepStats* stats = nullptr);
SystemState step_fast_sorption(const FullProblem& p, const SystemState& s,
                               const StepperConfig& cfg, StepStats* stats = nullptr);
SystemState step_fast_chemistry(const FullProblem& p, const SystemState& s,
                                const StepperConfig& cfg, StepStats* stats = nullptr);
SystemState step_two_param(const FullProblem& p, const SystemState& s, const StepperConfig& cfg,
                           StepStats* stats = nullptr);
SystemState step_three_param_mp(const FullProblem& p, const SystemState& s,
                                const StepperConfig& cfg, StepStats* stats = nullptr);
SystemState step_fast_surface_diffusion(const FullProblem& p, const SystemState& s,
                                        const StepperConfig& cfg, StepStats* stats = nullptr);
SystemState step_fast_accumulation(const FullProblem& p, const SystemState& s,
                                   const StepperConfig& cfg, StepStats* stats = nullptr);

struct AttractorResult {
  Mat theta_red;  // n_bnodes x N
  double residual{0.0};
  bool converged{false};
  int iterations{0};
  bool unique{true};
  double start_disagreement{0.0};
};

/// Steady state of the frozen-trace surface system (theta_infinity = P c).
/// With double_start enabled the integration is repeated from a second
/// initial guess and the two results compared.
AttractorResult surface_attractor(const FullProblem& p, const Mat& traces,
                                  const StepperConfig& cfg, const Mat* warm_start = nullptr,
                                  bool double_start = false);

/// One time step of the MP subproblem iteration: two Neumann heat solves
/// (species 1, 2) and one Dirichlet heat solve (species 3), iterated to a
/// fixed point. Its fixed point satisfies the same discrete system as
/// step_three_param_mp.
SystemState phi_fixed_point(const FullProblem& p, const SystemState& s, const StepperConfig& cfg,
                            StepStats* stats = nullptr);

} // namespace bulksurf
