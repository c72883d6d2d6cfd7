#pragma once

#include <string>
#include <vector>

#include "bulksurf/linalg.hpp"
#include "bulksurf/reaction_network.hpp"
#include "bulksurf/surface_chemistry.hpp"

namespace bulksurf {

/// Reference quantities for nondimensionalization. Rate-constant references
/// are per reaction (forward/backward) and per species (sorption).
struct CharacteristicScales {
  double tau_r{1.0};        // accumulation / observation time
  double l_r{1.0};          // bulk length
  double l_r_sigma{1.0};    // surface length
  double d_r{1.0};          // bulk diffusivity
  double d_r_sigma{1.0};    // surface diffusivity
  double c_r{1.0};          // bulk concentration
  double c_s{1.0};          // surface site capacity
  Vec k_bulk_f, k_bulk_b;   // per bulk reaction
  Vec k_surf_f, k_surf_b;   // per surface reaction
  Vec k_ad, k_de;           // per species

  void validate() const;
};

struct TimeScales {
  double tau_r{1.0};
  double tau_diff{1.0};
  double tau_diff_sigma{1.0};
  double tau_trans{1.0};
  Vec tau_react_f, tau_react_b;              // per bulk reaction
  Vec tau_react_sigma_f, tau_react_sigma_b;  // per surface reaction
  Vec tau_ad, tau_de;                        // per species

  // slow = max, fast = min over each nonempty group
  double tau_react_slow{0.0}, tau_react_fast{0.0};
  double tau_react_sigma_slow{0.0}, tau_react_sigma_fast{0.0};
  double tau_sorp_slow{0.0}, tau_sorp_fast{0.0};

  // lambda = group slow aggregate divided by the individual scale, >= 1
  Vec lambda_react_f, lambda_react_b;
  Vec lambda_react_sigma_f, lambda_react_sigma_b;
  Vec lambda_ad, lambda_de;

  bool has_bulk_reactions() const { return tau_react_f.size() > 0; }
  bool has_surface_reactions() const { return tau_react_sigma_f.size() > 0; }
  bool has_sorption() const { return tau_ad.size() > 0; }
};

enum class Regime {
  FullModel,
  FastSurfaceChemistry,
  FastSorption,
  FastSurfaceDiffusion,
  FastAccumulation,
  TwoParamSorpChem,
  ThreeParamLimit,
  InvalidFastTransmission,
};

std::string to_string(Regime r);

struct RegimeReport {
  std::vector<std::pair<std::string, double>> ordering;  // (process group, slow scale), ascending
  std::vector<std::string> fast_groups;
  Regime recommendation{Regime::FullModel};
  double threshold{1e-2};
  std::vector<std::string> notes;
};

TimeScales compute_time_scales(const CharacteristicScales& scales, const ReactionNetwork& bulk,
                               const SurfaceReactionNetwork& surface,
                               const SorptionModel& sorption);

/// Classifies which processes are fast relative to the rest: the longest
/// prefix of the ascending slow-aggregate ordering whose maximum is at most
/// threshold times the smallest fast aggregate of the remaining groups.
RegimeReport classify_regime(const TimeScales& ts, double threshold = 1e-2);

/// Dimensional problem description used by nondimensionalize.
struct DimensionalProblem {
  Vec d;                          // bulk diffusivities (m^2/s)
  Vec d_sigma_ref;                // per-species surface diffusivity scale (m^2/s)
  ReactionNetwork bulk;           // dimensional rate constants
  SurfaceReactionNetwork surface; // dimensional rate constants
  SorptionModel sorption;         // dimensional sorption constants
};

/// Dimensionless counterpart: starred diffusivities and rate-constant
/// ratios, together with the derived time scales.
struct DimensionlessProblem {
  Vec d_star;
  Vec d_sigma_star;
  ReactionNetwork bulk;           // k replaced by k* = k / k_ref
  SurfaceReactionNetwork surface;
  SorptionModel sorption;
  TimeScales times;
};

DimensionlessProblem nondimensionalize(const DimensionalProblem& problem,
                                       const CharacteristicScales& scales);

DimensionalProblem redimensionalize(const DimensionlessProblem& problem,
                                    const CharacteristicScales& scales);

} // namespace bulksurf
