#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bulksurf/linalg.hpp"
#include "bulksurf/reaction_network.hpp"

namespace bulksurf {

/// Surface geometry-independent parameters: maximal site capacity per area.
struct SurfaceParams {
  double c_s{1.0};
  int n_species{0};

  void validate() const;
};

/// Occupancy numbers (theta_0, theta_1, ..., theta_N) at one boundary node.
/// Index 0 is the vacancy slot.
struct SurfaceState {
  Vec theta;

  int n_species() const { return static_cast<int>(theta.size()) - 1; }
  Vec reduced() const { return theta.tail(n_species()); }
  void validate() const;
};

struct SorptionModel {
  Vec k_ad;
  Vec k_de;

  int n_species() const { return static_cast<int>(k_ad.size()); }
  /// Equilibrium constants K_i = k_i^ad / k_i^de.
  Vec equilibrium_constants() const { return (k_ad.array() / k_de.array()).matrix(); }
  void validate() const;
};

/// Surface reactions carry extended exponent vectors of length 1+N whose
/// slot 0 accounts for free sites, so that the extended nu sums to zero.
struct SurfaceReaction {
  IVec alpha_ext;  // length 1+N
  IVec beta_ext;   // length 1+N
  double k_f{1.0};
  double k_b{1.0};

  IVec nu_ext() const { return beta_ext - alpha_ext; }
};

struct SurfaceReactionNetwork {
  int n_species{0};
  std::vector<SurfaceReaction> reactions;

  int n_reactions() const { return static_cast<int>(reactions.size()); }
  /// m x N matrix of reduced stoichiometric vectors (slots 1..N).
  Mat reduced_stoichiometry() const;
  /// The underlying reduced network (used for rank / conservation algebra).
  ReactionNetwork reduced_network() const;
  void validate() const;
};

struct SurfaceDiffusionMatrix {
  std::function<Mat(const SurfaceState&)> evaluator;

  /// D(theta) = d_ref * (diag(theta) - theta theta^T): symmetric, zero row
  /// sums, nonpositive off-diagonals, kernel spanned by the all-ones vector
  /// for interior theta.
  static SurfaceDiffusionMatrix simplex_default(double d_ref);
};

struct OnsagerViolation {
  int sample_index{0};
  std::string check;
  double magnitude{0.0};
};

struct OnsagerReport {
  bool passed{true};
  std::vector<OnsagerViolation> violations;
};

/// Completes reduced occupancies with the vacancy fraction theta_0 = 1 - sum.
SurfaceState vacancy_closure(const Vec& theta_red);

/// Adds the vacancy exponents: with S = sum(beta_red - alpha_red),
/// alpha_0 = max(S, 0), beta_0 = max(-S, 0), so the extended nu sums to zero.
SurfaceReaction extend_surface_stoichiometry(const IVec& alpha_red, const IVec& beta_red,
                                             double k_f = 1.0, double k_b = 1.0);

/// Production rates for all 1+N surface slots, scaled by the site capacity.
Vec surface_mass_action(const SurfaceReactionNetwork& net, const SurfaceState& theta,
                        double c_s);

/// Jacobian of surface_mass_action with respect to the reduced occupancies
/// theta_1..theta_N (theta_0 eliminated through the simplex closure);
/// rows cover slots 0..N.
Mat surface_mass_action_jacobian_red(const SurfaceReactionNetwork& net,
                                     const SurfaceState& theta, double c_s);

/// Jacobian with respect to all 1+N occupancy slots, no elimination.
Mat surface_mass_action_jacobian(const SurfaceReactionNetwork& net, const SurfaceState& theta,
                                 double c_s);

/// Sorption rates s_i = (k_i^ad c_i theta_0 - k_i^de theta_i) c_s, i = 1..N.
Vec sorption_rate(const Vec& c_trace, const SurfaceState& theta, const SorptionModel& model,
                  double c_s);

/// Vacancy companion rate s_0 = -sum_i s_i.
double sorption_vacancy_rate(const Vec& c_trace, const SurfaceState& theta,
                             const SorptionModel& model, double c_s);

/// d s_i / d theta_red,j with theta_0 eliminated (N x N).
Mat sorption_rate_dtheta_red(const Vec& c_trace, const SorptionModel& model, double c_s);

/// d s_i / d c_j (diagonal, N x N).
Mat sorption_rate_dc(const SurfaceState& theta, const SorptionModel& model, double c_s);

/// Closed-form Langmuir isotherm: theta_0 = 1/(1 + sum K_j c_j),
/// theta_i = K_i c_i theta_0.
SurfaceState sorption_equilibrium_solve(const Vec& c_trace, const SorptionModel& model);

/// Checks symmetry, zero row sums, sign pattern, and the kernel dimension of
/// the diffusion matrix at each sample state.
OnsagerReport onsager_validate(const SurfaceDiffusionMatrix& D,
                               const std::vector<SurfaceState>& samples);

} // namespace bulksurf
