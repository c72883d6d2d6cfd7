#include "bulksurf/problem.hpp"

#include <cmath>

namespace bulksurf {

void FullProblem::validate() const {
  bulk.validate();
  surface.validate();
  sorption.validate();
  surf_params.validate();
  const int N = n_species();
  if (surface.n_species != N || sorption.n_species() != N || surf_params.n_species != N)
    throw std::invalid_argument("bulk, surface, and sorption species counts must agree");
  if (d.size() != N) throw std::invalid_argument("diffusivity vector must have one entry per species");
  if ((d.array() <= 0.0).any()) throw std::invalid_argument("diffusivities must be strictly positive");
  if (thermo.mu0.size() != N)
    throw std::invalid_argument("thermo mu0 must have one entry per species");
  if (mesh.n_cells < 3) throw std::invalid_argument("mesh is not initialized");
  for (double v : {inv_tau_acc, inv_tau_diff, inv_tau_react, inv_tau_diff_sigma,
                   inv_tau_react_sigma, inv_tau_sorp, inv_tau_trans})
    if (!(v > 0.0)) throw std::invalid_argument("1/tau prefactors must be strictly positive");
  if (!d_sigma.evaluator) throw std::invalid_argument("surface diffusion matrix evaluator missing");
}

double SystemState::min_value() const {
  double m = bulk.minCoeff();
  if (theta_red.size() > 0) {
    m = std::min(m, theta_red.minCoeff());
    // vacancy fractions
    for (int b = 0; b < theta_red.rows(); ++b)
      m = std::min(m, 1.0 - theta_red.row(b).sum());
  }
  return m;
}

std::string to_string(VariantTag tag) {
  switch (tag) {
    case VariantTag::Full: return "Full";
    case VariantTag::FastSorption: return "FastSorption";
    case VariantTag::FastSurfaceChemistry: return "FastSurfaceChemistry";
    case VariantTag::TwoParamSorpChem: return "TwoParamSorpChem";
    case VariantTag::ThreeParamMP: return "ThreeParamMP";
    case VariantTag::FastSurfaceDiffusion: return "FastSurfaceDiffusion";
    case VariantTag::FastAccumulation: return "FastAccumulation";
  }
  return "Full";
}

ModelVariant ModelVariant::make(VariantTag tag, const FullProblem& p) {
  ModelVariant v;
  v.tag = tag;
  const int N = p.n_species();
  const bool needs_constraints = tag == VariantTag::FastSurfaceChemistry ||
                                 tag == VariantTag::TwoParamSorpChem ||
                                 tag == VariantTag::ThreeParamMP;
  if (needs_constraints) {
    const ReactionNetwork reduced = p.surface.reduced_network();
    const RankReport rank = detailed_balance_check(reduced);
    if (!rank.detailed_balanced)
      throw std::invalid_argument(
          "variant " + to_string(tag) +
          " requires linearly independent surface stoichiometric vectors");
    const ConservationBasis basis = conservation_basis(reduced);
    v.surface_basis = basis.vectors;
    v.n_sigma = basis.dim();
    v.m_sigma = rank.rank;
    if (v.n_sigma + v.m_sigma != N)
      throw std::invalid_argument("surface constraint count does not close the boundary rows");
  }
  return v;
}

void StepperConfig::validate() const {
  if (!(dt > dt_min) || !(dt_min > 0.0))
    throw std::invalid_argument("stepper requires dt > dt_min > 0");
  if (!(newton_tol > 0.0) || newton_max_iter < 1)
    throw std::invalid_argument("invalid Newton configuration");
  if (!(phi_tol > 0.0) || phi_max_iter < 1)
    throw std::invalid_argument("invalid phi-iteration configuration");
}

SystemState make_uniform_state(const FullProblem& p, const Vec& c, const Vec& theta_red) {
  const int N = p.n_species();
  if (c.size() != N || theta_red.size() != N)
    throw std::invalid_argument("make_uniform_state: dimension mismatch");
  SystemState s;
  s.bulk = c.transpose().replicate(p.mesh.n_cells, 1);
  s.theta_red = theta_red.transpose().replicate(p.mesh.n_bnodes(), 1);
  s.ghosts = c.transpose().replicate(p.mesh.n_bnodes(), 1);
  return s;
}

Mat ghost_trace(const FullProblem& p, const SystemState& s) {
  Mat tr(p.mesh.n_bnodes(), p.n_species());
  for (int b = 0; b < p.mesh.n_bnodes(); ++b)
    tr.row(b) = 0.5 * (s.bulk.row(p.mesh.bnodes[b].cell) + s.ghosts.row(b));
  return tr;
}

ConservationBasis joint_conservation_basis(const FullProblem& p) {
  ReactionNetwork joint;
  joint.species = p.bulk.species;
  joint.reactions = p.bulk.reactions;
  const ReactionNetwork reduced = p.surface.reduced_network();
  joint.reactions.insert(joint.reactions.end(), reduced.reactions.begin(),
                         reduced.reactions.end());
  return conservation_basis(joint);
}

void effective_constraint_constants(const FullProblem& p, int reaction, double& kf_eff,
                                    double& kb_eff) {
  const SurfaceReaction& r = p.surface.reactions[reaction];
  const Vec K = p.sorption.equilibrium_constants();
  kf_eff = r.k_f;
  kb_eff = r.k_b;
  for (int i = 0; i < p.n_species(); ++i) {
    kf_eff *= std::pow(K[i], r.alpha_ext[i + 1]);
    kb_eff *= std::pow(K[i], r.beta_ext[i + 1]);
  }
}

bool is_mp_problem(const FullProblem& p) {
  if (p.n_species() != 3 || p.bulk.n_reactions() != 0 || p.surface.n_reactions() != 1)
    return false;
  const SurfaceReaction& r = p.surface.reactions[0];
  IVec alpha_red = r.alpha_ext.tail(3);
  IVec beta_red = r.beta_ext.tail(3);
  return alpha_red[0] == 1 && alpha_red[1] == 1 && alpha_red[2] == 0 && beta_red[0] == 0 &&
         beta_red[1] == 0 && beta_red[2] == 1;
}

double mp_kappa(const FullProblem& p) {
  if (!is_mp_problem(p))
    throw std::invalid_argument("mp_kappa requires the MP problem shape (A1+A2 <-> A3)");
  double kf_eff = 0.0, kb_eff = 0.0;
  effective_constraint_constants(p, 0, kf_eff, kb_eff);
  return kb_eff / kf_eff;
}

} // namespace bulksurf
