#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bulksurf/linalg.hpp"
#include "bulksurf/mesh.hpp"
#include "bulksurf/reaction_network.hpp"
#include "bulksurf/scales.hpp"
#include "bulksurf/surface_chemistry.hpp"

namespace bulksurf {

/// Dimensionless coupled problem: bulk reaction-diffusion, surface
/// reaction-diffusion-sorption, and the transmission coupling, with one
/// 1/tau prefactor per process group.
struct FullProblem {
  Mesh mesh;
  ReactionNetwork bulk;            // dimensionless rate constants
  ThermoParams thermo;             // bulk reference potentials
  SurfaceReactionNetwork surface;  // extended stoichiometry, dimensionless constants
  SorptionModel sorption;
  SurfaceParams surf_params;
  Vec d;                           // dimensionless bulk diffusivities
  SurfaceDiffusionMatrix d_sigma;

  double inv_tau_acc{1.0};
  double inv_tau_diff{1.0};
  double inv_tau_react{1.0};
  double inv_tau_diff_sigma{1.0};
  double inv_tau_react_sigma{1.0};
  double inv_tau_sorp{1.0};
  double inv_tau_trans{1.0};

  TimeScales times;  // carried for reporting only

  int n_species() const { return bulk.n_species(); }
  /// Weight of the surface term in discrete conservation totals and in the
  /// free energy; chosen so the scheme's transmission rows cancel exactly.
  double surface_weight() const { return inv_tau_diff / inv_tau_trans; }
  void validate() const;
};

/// Discrete state: cell concentrations, reduced boundary occupancies, and
/// the ghost values that carry the boundary closure of the last solve.
struct SystemState {
  Mat bulk;       // n_cells x N
  Mat theta_red;  // n_bnodes x N (attractor values for FastAccumulation)
  Mat ghosts;     // n_bnodes x N
  double time{0.0};

  double min_value() const;
};

enum class VariantTag {
  Full,
  FastSorption,
  FastSurfaceChemistry,
  TwoParamSorpChem,
  ThreeParamMP,
  FastSurfaceDiffusion,
  FastAccumulation,
};

std::string to_string(VariantTag tag);

/// Variant plus the constraint configuration it needs: the orthonormal
/// surface conservation basis e^k and the split N = n_sigma + m_sigma of
/// boundary rows into projected-dynamics/flux rows and algebraic rows.
struct ModelVariant {
  VariantTag tag{VariantTag::Full};
  Mat surface_basis;  // N x n_sigma
  int n_sigma{0};
  int m_sigma{0};

  static ModelVariant make(VariantTag tag, const FullProblem& p);
};

struct StepperConfig {
  double dt{1e-3};
  double newton_tol{1e-10};
  int newton_max_iter{30};
  double dt_min{1e-9};
  double phi_tol{1e-10};
  int phi_max_iter{200};
  bool strict_compatibility{false};

  void validate() const;
};

/// Uniform bulk values everywhere.
SystemState make_uniform_state(const FullProblem& p, const Vec& c, const Vec& theta_red);

/// Ghost-based boundary trace (c_cell + ghost)/2, the face value the
/// steppers close their boundary rows with.
Mat ghost_trace(const FullProblem& p, const SystemState& s);

/// Conservation basis of the joint bulk+surface chemistry (rows: bulk nu's
/// and reduced surface nu's).
ConservationBasis joint_conservation_basis(const FullProblem& p);

/// Effective boundary-constraint rate constants of surface reaction a after
/// eliminating the occupancies through the Langmuir isotherm:
/// kf_eff c^alpha_red = kb_eff c^beta_red at sorption + surface-chemistry
/// equilibrium.
void effective_constraint_constants(const FullProblem& p, int reaction, double& kf_eff,
                                    double& kb_eff);

/// The MP boundary constant kappa in c1 c2 = kappa c3.
double mp_kappa(const FullProblem& p);

/// True when the problem has the MP shape: three species, no bulk
/// reactions, single surface reaction A1+A2 <-> A3.
bool is_mp_problem(const FullProblem& p);

} // namespace bulksurf
