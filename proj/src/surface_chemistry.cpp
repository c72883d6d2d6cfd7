#include "bulksurf/surface_chemistry.hpp"

#include <cmath>
#include <stdexcept>

namespace bulksurf {

namespace {

constexpr double kSimplexTol = 1e-12;

IVec extended_to_full(const IVec& ext) { return ext; }

double theta_monomial(const Vec& theta, const IVec& exponents) {
  double p = 1.0;
  for (int i = 0; i < theta.size(); ++i)
    for (int k = 0; k < exponents[i]; ++k) p *= theta[i];
  return p;
}

double theta_monomial_derivative(const Vec& theta, const IVec& exponents, int j) {
  const int ej = exponents[j];
  if (ej == 0) return 0.0;
  double p = static_cast<double>(ej);
  for (int k = 0; k < ej - 1; ++k) p *= theta[j];
  for (int i = 0; i < theta.size(); ++i) {
    if (i == j) continue;
    for (int k = 0; k < exponents[i]; ++k) p *= theta[i];
  }
  return p;
}

} // namespace

void SurfaceParams::validate() const {
  if (!(c_s > 0.0)) throw std::invalid_argument("site capacity c_s must be positive");
  if (n_species < 1) throw std::invalid_argument("surface needs at least one species");
}

void SurfaceState::validate() const {
  if (theta.size() < 2) throw std::invalid_argument("surface state needs vacancy slot plus species");
  if ((theta.array() < -kSimplexTol).any())
    throw std::invalid_argument("occupancy numbers must be nonnegative");
  if (std::abs(theta.sum() - 1.0) > 1e-10)
    throw std::invalid_argument("occupancy numbers must sum to one");
}

void SorptionModel::validate() const {
  if (k_ad.size() != k_de.size())
    throw std::invalid_argument("adsorption/desorption constant vectors must match in length");
  if ((k_ad.array() <= 0.0).any() || (k_de.array() <= 0.0).any())
    throw std::invalid_argument("sorption constants must be strictly positive");
}

Mat SurfaceReactionNetwork::reduced_stoichiometry() const {
  Mat nu(n_reactions(), n_species);
  for (int a = 0; a < n_reactions(); ++a)
    nu.row(a) = (reactions[a].beta_ext - reactions[a].alpha_ext)
                    .tail(n_species)
                    .cast<double>()
                    .transpose();
  return nu;
}

ReactionNetwork SurfaceReactionNetwork::reduced_network() const {
  ReactionNetwork net;
  net.species.names.reserve(n_species);
  for (int i = 0; i < n_species; ++i) net.species.names.push_back("S" + std::to_string(i + 1));
  for (const SurfaceReaction& r : reactions) {
    Reaction b;
    b.alpha = r.alpha_ext.tail(n_species);
    b.beta = r.beta_ext.tail(n_species);
    b.k_f = r.k_f;
    b.k_b = r.k_b;
    net.reactions.push_back(std::move(b));
  }
  return net;
}

void SurfaceReactionNetwork::validate() const {
  if (n_species < 1) throw std::invalid_argument("surface network needs at least one species");
  for (const SurfaceReaction& r : reactions) {
    if (r.alpha_ext.size() != n_species + 1 || r.beta_ext.size() != n_species + 1)
      throw std::invalid_argument("extended exponent vectors must have length 1+N");
    if ((r.alpha_ext.array() < 0).any() || (r.beta_ext.array() < 0).any())
      throw std::invalid_argument("stoichiometric exponents must be nonnegative");
    if (r.nu_ext().sum() != 0)
      throw std::invalid_argument("extended stoichiometry must conserve sites");
    if (!(r.k_f > 0.0) || !(r.k_b > 0.0))
      throw std::invalid_argument("rate constants must be strictly positive");
  }
}

SurfaceDiffusionMatrix SurfaceDiffusionMatrix::simplex_default(double d_ref) {
  SurfaceDiffusionMatrix D;
  D.evaluator = [d_ref](const SurfaceState& s) -> Mat {
    const Vec& th = s.theta;
    return d_ref * (Mat(th.asDiagonal()) - th * th.transpose());
  };
  return D;
}

SurfaceState vacancy_closure(const Vec& theta_red) {
  if ((theta_red.array() < -kSimplexTol).any())
    throw std::invalid_argument("occupancy numbers must be nonnegative");
  const double occupied = theta_red.sum();
  if (occupied > 1.0 + kSimplexTol)
    throw std::invalid_argument("capacity violation: occupied fraction exceeds one");
  SurfaceState s;
  s.theta = Vec(theta_red.size() + 1);
  s.theta[0] = std::min(std::max(1.0 - occupied, 0.0), 1.0);
  s.theta.tail(theta_red.size()) = theta_red.cwiseMax(0.0);
  return s;
}

SurfaceReaction extend_surface_stoichiometry(const IVec& alpha_red, const IVec& beta_red,
                                             double k_f, double k_b) {
  const IVec nu_red = beta_red - alpha_red;
  if (nu_red.isZero())
    throw std::invalid_argument("surface reaction must change at least one species");
  const int S = nu_red.sum();
  SurfaceReaction r;
  r.alpha_ext = IVec(alpha_red.size() + 1);
  r.beta_ext = IVec(beta_red.size() + 1);
  r.alpha_ext[0] = std::max(S, 0);
  r.beta_ext[0] = std::max(-S, 0);
  r.alpha_ext.tail(alpha_red.size()) = alpha_red;
  r.beta_ext.tail(beta_red.size()) = beta_red;
  r.k_f = k_f;
  r.k_b = k_b;
  return r;
}

Vec surface_mass_action(const SurfaceReactionNetwork& net, const SurfaceState& theta,
                        double c_s) {
  const int n1 = net.n_species + 1;
  Vec r = Vec::Zero(n1);
  for (const SurfaceReaction& rx : net.reactions) {
    const double R = rx.k_f * theta_monomial(theta.theta, extended_to_full(rx.alpha_ext)) -
                     rx.k_b * theta_monomial(theta.theta, extended_to_full(rx.beta_ext));
    r += (c_s * R) * rx.nu_ext().cast<double>();
  }
  return r;
}

Mat surface_mass_action_jacobian_red(const SurfaceReactionNetwork& net,
                                     const SurfaceState& theta, double c_s) {
  const int N = net.n_species;
  Mat J = Mat::Zero(N + 1, N);
  for (const SurfaceReaction& rx : net.reactions) {
    const Vec nu = rx.nu_ext().cast<double>();
    // Chain rule with theta_0 = 1 - sum theta_red: d/dtheta_red,j picks up
    // the direct slot-j derivative minus the slot-0 derivative.
    const double d0f = theta_monomial_derivative(theta.theta, rx.alpha_ext, 0);
    const double d0b = theta_monomial_derivative(theta.theta, rx.beta_ext, 0);
    for (int j = 0; j < N; ++j) {
      const double dR = rx.k_f * (theta_monomial_derivative(theta.theta, rx.alpha_ext, j + 1) - d0f) -
                        rx.k_b * (theta_monomial_derivative(theta.theta, rx.beta_ext, j + 1) - d0b);
      if (dR != 0.0) J.col(j) += (c_s * dR) * nu;
    }
  }
  return J;
}

Mat surface_mass_action_jacobian(const SurfaceReactionNetwork& net, const SurfaceState& theta,
                                 double c_s) {
  const int n1 = net.n_species + 1;
  Mat J = Mat::Zero(n1, n1);
  for (const SurfaceReaction& rx : net.reactions) {
    const Vec nu = rx.nu_ext().cast<double>();
    for (int j = 0; j < n1; ++j) {
      const double dR = rx.k_f * theta_monomial_derivative(theta.theta, rx.alpha_ext, j) -
                        rx.k_b * theta_monomial_derivative(theta.theta, rx.beta_ext, j);
      if (dR != 0.0) J.col(j) += (c_s * dR) * nu;
    }
  }
  return J;
}

Vec sorption_rate(const Vec& c_trace, const SurfaceState& theta, const SorptionModel& model,
                  double c_s) {
  const int N = model.n_species();
  if (c_trace.size() != N || theta.n_species() != N)
    throw std::invalid_argument("sorption_rate: dimension mismatch");
  Vec s(N);
  for (int i = 0; i < N; ++i)
    s[i] = (model.k_ad[i] * c_trace[i] * theta.theta[0] - model.k_de[i] * theta.theta[i + 1]) * c_s;
  return s;
}

double sorption_vacancy_rate(const Vec& c_trace, const SurfaceState& theta,
                             const SorptionModel& model, double c_s) {
  return -sorption_rate(c_trace, theta, model, c_s).sum();
}

Mat sorption_rate_dtheta_red(const Vec& c_trace, const SorptionModel& model, double c_s) {
  const int N = model.n_species();
  Mat J(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      J(i, j) = c_s * (-model.k_ad[i] * c_trace[i] - (i == j ? model.k_de[i] : 0.0));
  return J;
}

Mat sorption_rate_dc(const SurfaceState& theta, const SorptionModel& model, double c_s) {
  const int N = model.n_species();
  Mat J = Mat::Zero(N, N);
  for (int i = 0; i < N; ++i) J(i, i) = c_s * model.k_ad[i] * theta.theta[0];
  return J;
}

SurfaceState sorption_equilibrium_solve(const Vec& c_trace, const SorptionModel& model) {
  if ((c_trace.array() < 0.0).any())
    throw std::invalid_argument("trace concentrations must be nonnegative");
  const Vec K = model.equilibrium_constants();
  const double theta0 = 1.0 / (1.0 + K.dot(c_trace));
  SurfaceState s;
  s.theta = Vec(c_trace.size() + 1);
  s.theta[0] = theta0;
  s.theta.tail(c_trace.size()) = (K.array() * c_trace.array() * theta0).matrix();
  return s;
}

OnsagerReport onsager_validate(const SurfaceDiffusionMatrix& D,
                               const std::vector<SurfaceState>& samples) {
  if (samples.empty()) throw std::invalid_argument("onsager_validate needs at least one sample");
  OnsagerReport report;
  const double tol = 1e-10;
  for (int k = 0; k < static_cast<int>(samples.size()); ++k) {
    const Mat M = D.evaluator(samples[k]);
    const int n = static_cast<int>(M.rows());
    auto flag = [&](const std::string& check, double magnitude) {
      report.passed = false;
      report.violations.push_back({k, check, magnitude});
    };
    const double sym = (M - M.transpose()).cwiseAbs().maxCoeff();
    if (sym > tol) flag("symmetry", sym);
    const double rowsum = M.rowwise().sum().cwiseAbs().maxCoeff();
    if (rowsum > tol) flag("row_sum", rowsum);
    double offdiag = 0.0, diag = 1.0;
    for (int i = 0; i < n; ++i) {
      diag = std::min(diag, M(i, i));
      for (int j = 0; j < n; ++j)
        if (i != j) offdiag = std::max(offdiag, M(i, j));
    }
    if (offdiag > tol) flag("offdiagonal_sign", offdiag);
    if (!(diag > 0.0)) flag("diagonal_sign", diag);

    // Kernel must be exactly span{ones}: restricted to its complement the
    // matrix must have full rank.
    const Vec ones = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
    const Mat P = Mat::Identity(n, n) - ones * ones.transpose();
    Eigen::JacobiSVD<Mat> svd(P * M * P);
    const Vec sv = svd.singularValues();
    int rank = 0;
    const double rank_tol = 1e-10 * std::max(1.0, sv.size() ? sv[0] : 0.0);
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > rank_tol) ++rank;
    if (rank != n - 1) flag("kernel_dimension", static_cast<double>(n - 1 - rank));
  }
  return report;
}

} // namespace bulksurf
