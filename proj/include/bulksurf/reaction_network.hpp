#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bulksurf/linalg.hpp"

namespace bulksurf {

/// Named species list; every stoichiometric vector in a network has one
/// entry per species.
struct SpeciesSet {
  std::vector<std::string> names;

  int size() const { return static_cast<int>(names.size()); }
  void validate() const;
};

/// One reversible elementary reaction with integer exponents.
struct Reaction {
  IVec alpha;   // forward stoichiometric exponents
  IVec beta;    // backward stoichiometric exponents
  double k_f{1.0};
  double k_b{1.0};

  IVec nu() const { return beta - alpha; }
};

struct ReactionNetwork {
  SpeciesSet species;
  std::vector<Reaction> reactions;

  int n_species() const { return species.size(); }
  int n_reactions() const { return static_cast<int>(reactions.size()); }

  /// m x N matrix whose a-th row is nu^a = beta^a - alpha^a.
  Mat stoichiometry() const;

  void validate() const;
};

/// Reference chemical potentials with RT and the reference concentration
/// normalized to one.
struct ThermoParams {
  Vec mu0;

  static ThermoParams zero(int n) {
    ThermoParams t;
    t.mu0 = Vec::Zero(n);
    return t;
  }
};

/// Orthonormal basis of span{nu^a}^perp together with the orthogonal
/// projector onto that complement.
struct ConservationBasis {
  Mat vectors;    // N x dim, orthonormal columns
  Mat projector;  // N x N, symmetric, idempotent

  int dim() const { return static_cast<int>(vectors.cols()); }
};

struct RankReport {
  bool detailed_balanced{false};  // true iff the nu^a are linearly independent
  int rank{0};
  int n_reactions{0};
};

/// Monomial c^e with the 0^0 = 1 convention, so rates extend continuously
/// to the boundary of the positive orthant.
double monomial(const Vec& c, const IVec& exponents);

/// Partial derivative of c^e with respect to c_j.
double monomial_derivative(const Vec& c, const IVec& exponents, int j);

/// Per-reaction net velocities R_a = k_f c^alpha - k_b c^beta.
Vec reaction_velocities(const ReactionNetwork& net, const Vec& c);

/// Species production rates r_i = sum_a nu_i^a R_a.
Vec mass_action_rate(const ReactionNetwork& net, const Vec& c);

/// N x N Jacobian dr/dc.
Mat mass_action_jacobian(const ReactionNetwork& net, const Vec& c);

/// Reaction affinities A_a = sum_i (mu0_i + ln c_i) nu_i^a; requires c > 0.
Vec affinity(const ReactionNetwork& net, const ThermoParams& thermo, const Vec& c);

/// Deterministic orthonormal basis of the conservation complement
/// (stable orthogonalization of the canonical basis against span{nu^a}).
ConservationBasis conservation_basis(const ReactionNetwork& net);

/// Rank test for linear independence of the stoichiometric vectors.
RankReport detailed_balance_check(const ReactionNetwork& net);

/// Strictly positive conservation vector, if one exists. On failure,
/// *certificate_species (when non-null) receives an index of a species
/// whose conservation component is forced to vanish.
std::optional<Vec> positive_conservation_vector(const ReactionNetwork& net,
                                                int* certificate_species = nullptr);

} // namespace bulksurf
