#include "bulksurf/reaction_network.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace bulksurf {

namespace {

constexpr double kRankTolFactor = 1e-10;

// Orthonormal column basis of the row space of `rows` (m x N), via modified
// Gram-Schmidt with a max-norm-relative rank tolerance. Deterministic: rows
// are processed in their given order.
Mat orthonormal_row_span(const Mat& rows, int* rank_out = nullptr) {
  const int n = static_cast<int>(rows.cols());
  const double max_norm = rows.size() > 0 ? rows.cwiseAbs().maxCoeff() : 0.0;
  const double tol = kRankTolFactor * std::max(1.0, max_norm);
  std::vector<Vec> basis;
  for (int a = 0; a < rows.rows(); ++a) {
    Vec v = rows.row(a).transpose();
    for (const Vec& b : basis) v -= b.dot(v) * b;
    // second pass for numerical orthogonality
    for (const Vec& b : basis) v -= b.dot(v) * b;
    if (v.norm() > tol) basis.push_back(v.normalized());
  }
  Mat out(n, static_cast<int>(basis.size()));
  for (int k = 0; k < out.cols(); ++k) out.col(k) = basis[k];
  if (rank_out) *rank_out = static_cast<int>(basis.size());
  return out;
}

} // namespace

void SpeciesSet::validate() const {
  if (names.empty()) throw std::invalid_argument("species set must contain at least one species");
  std::set<std::string> seen(names.begin(), names.end());
  if (static_cast<int>(seen.size()) != size())
    throw std::invalid_argument("species names must be unique");
}

Mat ReactionNetwork::stoichiometry() const {
  Mat nu(n_reactions(), n_species());
  for (int a = 0; a < n_reactions(); ++a)
    nu.row(a) = (reactions[a].beta - reactions[a].alpha).cast<double>().transpose();
  return nu;
}

void ReactionNetwork::validate() const {
  species.validate();
  const int n = n_species();
  for (const Reaction& r : reactions) {
    if (r.alpha.size() != n || r.beta.size() != n)
      throw std::invalid_argument("reaction exponent vectors must have one entry per species");
    if ((r.alpha.array() < 0).any() || (r.beta.array() < 0).any())
      throw std::invalid_argument("stoichiometric exponents must be nonnegative");
    if ((r.beta - r.alpha).isZero())
      throw std::invalid_argument("reaction must change at least one species");
    if (!(r.k_f > 0.0) || !(r.k_b > 0.0))
      throw std::invalid_argument("rate constants must be strictly positive");
  }
}

double monomial(const Vec& c, const IVec& exponents) {
  double p = 1.0;
  for (int i = 0; i < c.size(); ++i) {
    const int e = exponents[i];
    if (e == 0) continue;  // 0^0 = 1
    for (int k = 0; k < e; ++k) p *= c[i];
  }
  return p;
}

double monomial_derivative(const Vec& c, const IVec& exponents, int j) {
  const int ej = exponents[j];
  if (ej == 0) return 0.0;
  double p = static_cast<double>(ej);
  for (int k = 0; k < ej - 1; ++k) p *= c[j];
  for (int i = 0; i < c.size(); ++i) {
    if (i == j) continue;
    for (int k = 0; k < exponents[i]; ++k) p *= c[i];
  }
  return p;
}

Vec reaction_velocities(const ReactionNetwork& net, const Vec& c) {
  if (c.size() != net.n_species())
    throw std::invalid_argument("concentration vector has wrong dimension");
  if ((c.array() < 0.0).any())
    throw std::invalid_argument("concentrations must be nonnegative");
  Vec R(net.n_reactions());
  for (int a = 0; a < net.n_reactions(); ++a) {
    const Reaction& r = net.reactions[a];
    R[a] = r.k_f * monomial(c, r.alpha) - r.k_b * monomial(c, r.beta);
  }
  return R;
}

Vec mass_action_rate(const ReactionNetwork& net, const Vec& c) {
  const Vec R = reaction_velocities(net, c);
  Vec r = Vec::Zero(net.n_species());
  for (int a = 0; a < net.n_reactions(); ++a)
    r += R[a] * (net.reactions[a].beta - net.reactions[a].alpha).cast<double>();
  return r;
}

Mat mass_action_jacobian(const ReactionNetwork& net, const Vec& c) {
  const int n = net.n_species();
  Mat J = Mat::Zero(n, n);
  for (int a = 0; a < net.n_reactions(); ++a) {
    const Reaction& r = net.reactions[a];
    const Vec nu = (r.beta - r.alpha).cast<double>();
    for (int j = 0; j < n; ++j) {
      const double dR = r.k_f * monomial_derivative(c, r.alpha, j) -
                        r.k_b * monomial_derivative(c, r.beta, j);
      if (dR != 0.0) J.col(j) += dR * nu;
    }
  }
  return J;
}

Vec affinity(const ReactionNetwork& net, const ThermoParams& thermo, const Vec& c) {
  if (c.size() != net.n_species())
    throw std::invalid_argument("concentration vector has wrong dimension");
  if ((c.array() <= 0.0).any())
    throw std::domain_error("affinity requires strictly positive concentrations");
  Vec mu = thermo.mu0 + c.array().log().matrix();
  Vec A(net.n_reactions());
  for (int a = 0; a < net.n_reactions(); ++a)
    A[a] = mu.dot((net.reactions[a].beta - net.reactions[a].alpha).cast<double>());
  return A;
}

ConservationBasis conservation_basis(const ReactionNetwork& net) {
  const int n = net.n_species();
  const Mat span = orthonormal_row_span(net.stoichiometry());
  ConservationBasis basis;
  basis.projector = Mat::Identity(n, n) - span * span.transpose();

  // Orthogonalize the canonical basis against the nu span, fixed pivot order.
  std::vector<Vec> kept;
  const double tol = 1e-10;
  for (int i = 0; i < n; ++i) {
    Vec v = basis.projector.col(i);
    for (const Vec& b : kept) v -= b.dot(v) * b;
    for (const Vec& b : kept) v -= b.dot(v) * b;
    if (v.norm() > tol) kept.push_back(v.normalized());
  }
  basis.vectors = Mat(n, static_cast<int>(kept.size()));
  for (int k = 0; k < basis.vectors.cols(); ++k) basis.vectors.col(k) = kept[k];
  return basis;
}

RankReport detailed_balance_check(const ReactionNetwork& net) {
  RankReport report;
  report.n_reactions = net.n_reactions();
  orthonormal_row_span(net.stoichiometry(), &report.rank);
  report.detailed_balanced = (report.rank == report.n_reactions);
  return report;
}

std::optional<Vec> positive_conservation_vector(const ReactionNetwork& net,
                                                int* certificate_species) {
  const int n = net.n_species();
  const ConservationBasis basis = conservation_basis(net);
  const Mat& E = basis.vectors;
  const int p = basis.dim();

  auto certify_failure = [&]() {
    if (certificate_species) {
      *certificate_species = 0;
      double best = basis.projector(0, 0);
      for (int i = 1; i < n; ++i) {
        if (basis.projector(i, i) < best) {
          best = basis.projector(i, i);
          *certificate_species = i;
        }
      }
    }
    return std::nullopt;
  };

  if (p == 0) return certify_failure();

  auto strictly_positive = [](const Vec& v) { return (v.array() > 1e-12 * std::max(1.0, v.cwiseAbs().maxCoeff())).all(); };

  // Primary construction: projection of the all-ones vector.
  Vec candidate = basis.projector * Vec::Ones(n);
  if (strictly_positive(candidate)) return candidate;

  // Fallback: enumerate the vertices {-1,0,1}^p of the coefficient box.
  const long total = static_cast<long>(std::pow(3.0, p));
  if (p <= 12) {
    for (long code = 1; code < total; ++code) {
      long rem = code;
      Vec y(p);
      for (int k = 0; k < p; ++k) {
        y[k] = static_cast<double>(rem % 3 - 1);
        rem /= 3;
      }
      Vec v = E * y;
      if (strictly_positive(v)) return v;
    }
  }
  return certify_failure();
}

} // namespace bulksurf
