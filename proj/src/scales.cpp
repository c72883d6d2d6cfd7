#include "bulksurf/scales.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace bulksurf {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be strictly positive");
}

void require_positive(const Vec& v, const char* name) {
  if ((v.array() <= 0.0).any())
    throw std::invalid_argument(std::string(name) + " must be strictly positive");
}

struct Group {
  std::string name;
  double slow;
  double fast;
};

} // namespace

void CharacteristicScales::validate() const {
  require_positive(tau_r, "tau_r");
  require_positive(l_r, "l_r");
  require_positive(l_r_sigma, "l_r_sigma");
  require_positive(d_r, "d_r");
  require_positive(d_r_sigma, "d_r_sigma");
  require_positive(c_r, "c_r");
  require_positive(c_s, "c_s");
  require_positive(k_bulk_f, "k_bulk_f");
  require_positive(k_bulk_b, "k_bulk_b");
  require_positive(k_surf_f, "k_surf_f");
  require_positive(k_surf_b, "k_surf_b");
  require_positive(k_ad, "k_ad");
  require_positive(k_de, "k_de");
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::FullModel: return "FullModel";
    case Regime::FastSurfaceChemistry: return "FastSurfaceChemistry";
    case Regime::FastSorption: return "FastSorption";
    case Regime::FastSurfaceDiffusion: return "FastSurfaceDiffusion";
    case Regime::FastAccumulation: return "FastAccumulation";
    case Regime::TwoParamSorpChem: return "TwoParamSorpChem";
    case Regime::ThreeParamLimit: return "ThreeParamLimit";
    case Regime::InvalidFastTransmission: return "InvalidFastTransmission";
  }
  return "FullModel";
}

TimeScales compute_time_scales(const CharacteristicScales& scales, const ReactionNetwork& bulk,
                               const SurfaceReactionNetwork& surface,
                               const SorptionModel& sorption) {
  scales.validate();
  TimeScales ts;
  ts.tau_r = scales.tau_r;
  ts.tau_diff = scales.l_r * scales.l_r / scales.d_r;
  ts.tau_diff_sigma = scales.l_r_sigma * scales.l_r_sigma / scales.d_r_sigma;
  ts.tau_trans = scales.l_r * scales.c_s / (scales.d_r * scales.c_r);

  const int mb = bulk.n_reactions();
  if (scales.k_bulk_f.size() != mb || scales.k_bulk_b.size() != mb)
    throw std::invalid_argument("bulk reference rate constants must match the reaction count");
  ts.tau_react_f = Vec(mb);
  ts.tau_react_b = Vec(mb);
  for (int a = 0; a < mb; ++a) {
    const int oa = bulk.reactions[a].alpha.sum();
    const int ob = bulk.reactions[a].beta.sum();
    ts.tau_react_f[a] = 1.0 / (scales.k_bulk_f[a] * std::pow(scales.c_r, oa - 1));
    ts.tau_react_b[a] = 1.0 / (scales.k_bulk_b[a] * std::pow(scales.c_r, ob - 1));
  }

  const int ms = surface.n_reactions();
  if (scales.k_surf_f.size() != ms || scales.k_surf_b.size() != ms)
    throw std::invalid_argument("surface reference rate constants must match the reaction count");
  // Occupancies are already dimensionless, so surface reaction times are
  // plain inverse rate constants.
  ts.tau_react_sigma_f = scales.k_surf_f.cwiseInverse();
  ts.tau_react_sigma_b = scales.k_surf_b.cwiseInverse();

  const int N = sorption.n_species();
  if (scales.k_ad.size() != N || scales.k_de.size() != N)
    throw std::invalid_argument("sorption reference constants must match the species count");
  ts.tau_ad = (scales.k_ad * scales.c_r).cwiseInverse();
  ts.tau_de = scales.k_de.cwiseInverse();

  auto aggregate = [](std::initializer_list<const Vec*> parts, double& slow, double& fast) {
    slow = 0.0;
    fast = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const Vec* v : parts) {
      if (v->size() == 0) continue;
      any = true;
      slow = std::max(slow, v->maxCoeff());
      fast = std::min(fast, v->minCoeff());
    }
    if (!any) {
      slow = 0.0;
      fast = 0.0;
    }
  };
  aggregate({&ts.tau_react_f, &ts.tau_react_b}, ts.tau_react_slow, ts.tau_react_fast);
  aggregate({&ts.tau_react_sigma_f, &ts.tau_react_sigma_b}, ts.tau_react_sigma_slow,
            ts.tau_react_sigma_fast);
  aggregate({&ts.tau_ad, &ts.tau_de}, ts.tau_sorp_slow, ts.tau_sorp_fast);

  auto lambdas = [](const Vec& tau, double slow) {
    return tau.size() ? Vec((slow / tau.array()).matrix()) : Vec();
  };
  ts.lambda_react_f = lambdas(ts.tau_react_f, ts.tau_react_slow);
  ts.lambda_react_b = lambdas(ts.tau_react_b, ts.tau_react_slow);
  ts.lambda_react_sigma_f = lambdas(ts.tau_react_sigma_f, ts.tau_react_sigma_slow);
  ts.lambda_react_sigma_b = lambdas(ts.tau_react_sigma_b, ts.tau_react_sigma_slow);
  ts.lambda_ad = lambdas(ts.tau_ad, ts.tau_sorp_slow);
  ts.lambda_de = lambdas(ts.tau_de, ts.tau_sorp_slow);
  return ts;
}

RegimeReport classify_regime(const TimeScales& ts, double threshold) {
  RegimeReport report;
  report.threshold = threshold;

  std::vector<Group> groups;
  groups.push_back({"accumulation", ts.tau_r, ts.tau_r});
  groups.push_back({"bulk_diffusion", ts.tau_diff, ts.tau_diff});
  groups.push_back({"surface_diffusion", ts.tau_diff_sigma, ts.tau_diff_sigma});
  groups.push_back({"transmission", ts.tau_trans, ts.tau_trans});
  if (ts.has_bulk_reactions())
    groups.push_back({"bulk_reaction", ts.tau_react_slow, ts.tau_react_fast});
  if (ts.has_surface_reactions())
    groups.push_back({"surface_reaction", ts.tau_react_sigma_slow, ts.tau_react_sigma_fast});
  if (ts.has_sorption()) groups.push_back({"sorption", ts.tau_sorp_slow, ts.tau_sorp_fast});

  std::stable_sort(groups.begin(), groups.end(),
                   [](const Group& a, const Group& b) { return a.slow < b.slow; });
  for (const Group& g : groups) report.ordering.emplace_back(g.name, g.slow);

  // Longest prefix of the ordering whose slowest member is still separated
  // from every remaining group by the threshold.
  int best = 0;
  for (int k = 1; k < static_cast<int>(groups.size()); ++k) {
    double prefix_slow = 0.0;
    for (int i = 0; i < k; ++i) prefix_slow = std::max(prefix_slow, groups[i].slow);
    double rest_fast = std::numeric_limits<double>::infinity();
    for (int i = k; i < static_cast<int>(groups.size()); ++i)
      rest_fast = std::min(rest_fast, groups[i].fast);
    if (prefix_slow <= threshold * rest_fast) best = k;
  }
  std::set<std::string> fast;
  for (int i = 0; i < best; ++i) {
    fast.insert(groups[i].name);
    report.fast_groups.push_back(groups[i].name);
  }

  const bool f_sorp = fast.count("sorption") > 0;
  const bool f_chem = fast.count("surface_reaction") > 0;
  const bool f_trans = fast.count("transmission") > 0;
  const bool f_sdiff = fast.count("surface_diffusion") > 0;
  const bool f_acc = fast.count("accumulation") > 0;
  const bool f_bdiff = fast.count("bulk_diffusion") > 0;
  const bool f_breact = fast.count("bulk_reaction") > 0;

  if (f_trans && !f_sorp) {
    report.recommendation = Regime::InvalidFastTransmission;
    report.notes.push_back(
        "fast transmission without fast sorption is not thermodynamically consistent; "
        "no runnable limit model exists for this regime");
    return report;
  }

  if (fast.empty()) {
    report.recommendation = Regime::FullModel;
    return report;
  }

  std::set<std::string> recognized;
  if (f_sorp && f_chem && f_trans) {
    report.recommendation = Regime::ThreeParamLimit;
    recognized = {"sorption", "surface_reaction", "transmission"};
  } else if (f_sorp && f_chem) {
    report.recommendation = Regime::TwoParamSorpChem;
    recognized = {"sorption", "surface_reaction"};
  } else if (f_sorp) {
    report.recommendation = Regime::FastSorption;
    recognized = {"sorption"};
  } else if (f_chem) {
    report.recommendation = Regime::FastSurfaceChemistry;
    recognized = {"surface_reaction"};
  } else if (f_sdiff) {
    report.recommendation = Regime::FastSurfaceDiffusion;
    recognized = {"surface_diffusion"};
  } else if (f_acc) {
    report.recommendation = Regime::FastAccumulation;
    recognized = {"accumulation"};
  } else {
    report.recommendation = Regime::FullModel;
    report.notes.push_back("fast process combination has no dedicated limit model");
    return report;
  }

  std::vector<std::string> extra;
  if (f_sdiff && !recognized.count("surface_diffusion")) extra.push_back("surface_diffusion");
  if (f_acc && !recognized.count("accumulation")) extra.push_back("accumulation");
  if (f_bdiff) extra.push_back("bulk_diffusion");
  if (f_breact) extra.push_back("bulk_reaction");
  for (const std::string& g : extra)
    report.notes.push_back("fast group '" + g +
                           "' is not part of the recommended limit model; "
                           "combination not covered, dominant case reported");
  return report;
}

DimensionlessProblem nondimensionalize(const DimensionalProblem& problem,
                                       const CharacteristicScales& scales) {
  scales.validate();
  DimensionlessProblem out;
  out.d_star = problem.d / scales.d_r;
  out.d_sigma_star = problem.d_sigma_ref / scales.d_r_sigma;
  out.bulk = problem.bulk;
  for (int a = 0; a < out.bulk.n_reactions(); ++a) {
    out.bulk.reactions[a].k_f = problem.bulk.reactions[a].k_f / scales.k_bulk_f[a];
    out.bulk.reactions[a].k_b = problem.bulk.reactions[a].k_b / scales.k_bulk_b[a];
  }
  out.surface = problem.surface;
  for (int a = 0; a < out.surface.n_reactions(); ++a) {
    out.surface.reactions[a].k_f = problem.surface.reactions[a].k_f / scales.k_surf_f[a];
    out.surface.reactions[a].k_b = problem.surface.reactions[a].k_b / scales.k_surf_b[a];
  }
  out.sorption.k_ad = (problem.sorption.k_ad.array() / scales.k_ad.array()).matrix();
  out.sorption.k_de = (problem.sorption.k_de.array() / scales.k_de.array()).matrix();
  out.times = compute_time_scales(scales, problem.bulk, problem.surface, problem.sorption);
  return out;
}

DimensionalProblem redimensionalize(const DimensionlessProblem& problem,
                                    const CharacteristicScales& scales) {
  scales.validate();
  DimensionalProblem out;
  out.d = problem.d_star * scales.d_r;
  out.d_sigma_ref = problem.d_sigma_star * scales.d_r_sigma;
  out.bulk = problem.bulk;
  for (int a = 0; a < out.bulk.n_reactions(); ++a) {
    out.bulk.reactions[a].k_f = problem.bulk.reactions[a].k_f * scales.k_bulk_f[a];
    out.bulk.reactions[a].k_b = problem.bulk.reactions[a].k_b * scales.k_bulk_b[a];
  }
  out.surface = problem.surface;
  for (int a = 0; a < out.surface.n_reactions(); ++a) {
    out.surface.reactions[a].k_f = problem.surface.reactions[a].k_f * scales.k_surf_f[a];
    out.surface.reactions[a].k_b = problem.surface.reactions[a].k_b * scales.k_surf_b[a];
  }
  out.sorption.k_ad = (problem.sorption.k_ad.array() * scales.k_ad.array()).matrix();
  out.sorption.k_de = (problem.sorption.k_de.array() * scales.k_de.array()).matrix();
  return out;
}

} // namespace bulksurf
