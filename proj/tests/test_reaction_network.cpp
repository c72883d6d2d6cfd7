#include <doctest.h>

#include <cmath>
#include <random>

#include "bulksurf/reaction_network.hpp"

using namespace bulksurf;

namespace {

ReactionNetwork make_network(int n, const std::vector<Reaction>& reactions) {
  ReactionNetwork net;
  for (int i = 0; i < n; ++i) net.species.names.push_back("A" + std::to_string(i + 1));
  net.reactions = reactions;
  return net;
}

Reaction make_reaction(const std::vector<int>& a, const std::vector<int>& b, double kf,
                       double kb) {
  Reaction r;
  r.alpha = Eigen::Map<const IVec>(a.data(), a.size());
  r.beta = Eigen::Map<const IVec>(b.data(), b.size());
  r.k_f = kf;
  r.k_b = kb;
  return r;
}

Vec make_vec(std::initializer_list<double> v) {
  Vec out(v.size());
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

const ReactionNetwork kMpNet =
    make_network(3, {make_reaction({1, 1, 0}, {0, 0, 1}, 2.0, 1.0)});

} // namespace

TEST_CASE("mass action rate: hand-evaluated A1+A2<->A3") {
  const Vec r = mass_action_rate(kMpNet, make_vec({1.0, 2.0, 3.0}));
  // R = 2*1*2 - 1*3 = 1
  CHECK(r[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(r[1] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(r[2] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("mass action rate: equilibrium state gives zero") {
  ReactionNetwork net = make_network(3, {make_reaction({1, 1, 0}, {0, 0, 1}, 1.0, 1.0)});
  const Vec r = mass_action_rate(net, make_vec({1.0, 1.0, 1.0}));
  CHECK(r.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
}

TEST_CASE("mass action rate: empty reaction list") {
  ReactionNetwork net = make_network(2, {});
  CHECK(mass_action_rate(net, make_vec({0.7, 1.3})).isZero());
}

TEST_CASE("mass action rate rejects negative concentrations") {
  CHECK_THROWS(mass_action_rate(kMpNet, make_vec({1.0, -0.1, 1.0})));
}

TEST_CASE("monomial convention 0^0 = 1") {
  IVec e(2);
  e << 0, 2;
  CHECK(monomial(make_vec({0.0, 3.0}), e) == doctest::Approx(9.0));
  e << 1, 0;
  CHECK(monomial(make_vec({0.0, 3.0}), e) == doctest::Approx(0.0));
}

TEST_CASE("affinity: zero at unit concentrations with zero mu0") {
  const Vec a = affinity(kMpNet, ThermoParams::zero(3), make_vec({1.0, 1.0, 1.0}));
  CHECK(a.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
}

TEST_CASE("affinity: hand-evaluated logarithms") {
  const Vec a = affinity(kMpNet, ThermoParams::zero(3), make_vec({1.0, 2.0, 3.0}));
  CHECK(a[0] == doctest::Approx(std::log(3.0) - std::log(2.0)).epsilon(1e-12));

  ThermoParams t;
  t.mu0 = make_vec({0.0, 0.0, std::log(2.0)});
  const Vec a2 = affinity(kMpNet, t, make_vec({1.0, 1.0, 2.0}));
  CHECK(a2[0] == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("affinity: zero concentration is a domain error") {
  CHECK_THROWS(affinity(kMpNet, ThermoParams::zero(3), make_vec({1.0, 0.0, 1.0})));
}

TEST_CASE("conservation basis: MP network spans {(1,0,1),(0,1,1)}") {
  const ConservationBasis basis = conservation_basis(kMpNet);
  REQUIRE(basis.dim() == 2);
  // projector leaves the reference vectors invariant
  for (const Vec& e : {make_vec({1.0, 0.0, 1.0}), make_vec({0.0, 1.0, 1.0})})
    CHECK((basis.projector * e - e).lpNorm<Eigen::Infinity>() <= 1e-12);
  // orthonormality and annihilation of nu
  CHECK((basis.vectors.transpose() * basis.vectors - Mat::Identity(2, 2))
            .lpNorm<Eigen::Infinity>() <= 1e-12);
  const Vec nu = make_vec({-1.0, -1.0, 1.0});
  CHECK((basis.vectors.transpose() * nu).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("conservation basis: projector idempotent and symmetric") {
  const ConservationBasis basis = conservation_basis(kMpNet);
  CHECK((basis.projector * basis.projector - basis.projector).lpNorm<Eigen::Infinity>() <=
        1e-12);
  CHECK((basis.projector - basis.projector.transpose()).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("conservation basis: no reactions gives the identity") {
  ReactionNetwork net = make_network(3, {});
  const ConservationBasis basis = conservation_basis(net);
  CHECK(basis.dim() == 3);
  CHECK((basis.projector - Mat::Identity(3, 3)).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("conservation basis: two reactions leave span{(1,1,2)}") {
  ReactionNetwork net = make_network(3, {make_reaction({1, 1, 0}, {0, 0, 1}, 1.0, 1.0),
                                         make_reaction({0, 1, 0}, {1, 0, 0}, 1.0, 1.0)});
  const ConservationBasis basis = conservation_basis(net);
  REQUIRE(basis.dim() == 1);
  Vec e = make_vec({1.0, 1.0, 2.0});
  e.normalize();
  CHECK(std::abs(std::abs(basis.vectors.col(0).dot(e)) - 1.0) <= 1e-12);
}

TEST_CASE("detailed balance check rank cases") {
  CHECK(detailed_balance_check(kMpNet).detailed_balanced);
  ReactionNetwork dup = make_network(3, {make_reaction({1, 1, 0}, {0, 0, 1}, 1.0, 1.0),
                                         make_reaction({1, 1, 0}, {0, 0, 1}, 2.0, 1.0)});
  const RankReport rd = detailed_balance_check(dup);
  CHECK_FALSE(rd.detailed_balanced);
  CHECK(rd.rank == 1);
  ReactionNetwork anti = make_network(3, {make_reaction({1, 1, 0}, {0, 0, 1}, 1.0, 1.0),
                                          make_reaction({0, 0, 1}, {1, 1, 0}, 1.0, 1.0)});
  CHECK_FALSE(detailed_balance_check(anti).detailed_balanced);
}

TEST_CASE("positive conservation vector: MP network") {
  const auto e = positive_conservation_vector(kMpNet);
  REQUIRE(e.has_value());
  CHECK(e->minCoeff() > 0.0);
  CHECK(std::abs(e->dot(make_vec({-1.0, -1.0, 1.0}))) <= 1e-12);
}

TEST_CASE("positive conservation vector: nonexistence for nu = (1,0,0)") {
  ReactionNetwork net = make_network(3, {make_reaction({0, 1, 1}, {1, 1, 1}, 1.0, 1.0)});
  int certificate = -1;
  const auto e = positive_conservation_vector(net, &certificate);
  CHECK_FALSE(e.has_value());
  CHECK(certificate == 0);
}

TEST_CASE("positive conservation vector: no reactions gives all-ones") {
  ReactionNetwork net = make_network(4, {});
  const auto e = positive_conservation_vector(net);
  REQUIRE(e.has_value());
  CHECK(e->minCoeff() > 0.0);
}

TEST_CASE("rate lies in the stoichiometric span") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> uc(0.1, 3.0);
  ReactionNetwork net = make_network(4, {make_reaction({1, 1, 0, 0}, {0, 0, 1, 0}, 1.3, 0.7),
                                         make_reaction({0, 0, 1, 0}, {0, 0, 0, 2}, 0.5, 2.0)});
  const ConservationBasis basis = conservation_basis(net);
  for (int trial = 0; trial < 50; ++trial) {
    Vec c(4);
    for (int i = 0; i < 4; ++i) c[i] = uc(rng);
    const Vec r = mass_action_rate(net, c);
    CHECK((basis.projector * r).lpNorm<Eigen::Infinity>() <=
          1e-12 * std::max(1.0, r.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("detailed-balanced constants dissipate: sum_a A_a R_a <= 0") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uc(0.05, 4.0), umu(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    ThermoParams t;
    t.mu0 = Vec(3);
    for (int i = 0; i < 3; ++i) t.mu0[i] = umu(rng);
    Reaction r = make_reaction({1, 1, 0}, {0, 0, 1}, 1.7, 1.0);
    const IVec nu = r.nu();
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += nu[i] * t.mu0[i];
    r.k_b = r.k_f * std::exp(s);
    ReactionNetwork net = make_network(3, {r});
    Vec c(3);
    for (int i = 0; i < 3; ++i) c[i] = uc(rng);
    const Vec A = affinity(net, t, c);
    const Vec vel = reaction_velocities(net, c);
    CHECK(A.dot(vel) <= 1e-12);
  }
}

TEST_CASE("affinity sign opposes the net velocity for balanced constants") {
  // k_b/k_f = exp(sum nu mu0); then R_a > 0 <=> A_a < 0
  ThermoParams t;
  t.mu0 = make_vec({0.2, -0.1, 0.4});
  Reaction r = make_reaction({1, 1, 0}, {0, 0, 1}, 1.0, 1.0);
  double s = 0.0;
  const IVec nu = r.nu();
  for (int i = 0; i < 3; ++i) s += nu[i] * t.mu0[i];
  r.k_b = r.k_f * std::exp(s);
  ReactionNetwork net = make_network(3, {r});
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> uc(0.05, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vec c(3);
    for (int i = 0; i < 3; ++i) c[i] = uc(rng);
    const double A = affinity(net, t, c)[0];
    const double R = reaction_velocities(net, c)[0];
    if (std::abs(A) > 1e-12) CHECK(A * R < 0.0);
  }
}

TEST_CASE("mass action jacobian matches finite differences") {
  ReactionNetwork net = make_network(3, {make_reaction({2, 0, 0}, {0, 1, 1}, 1.2, 0.4)});
  const Vec c = make_vec({0.8, 1.4, 0.6});
  const Mat J = mass_action_jacobian(net, c);
  const double h = 1e-7;
  for (int j = 0; j < 3; ++j) {
    Vec cp = c, cm = c;
    cp[j] += h;
    cm[j] -= h;
    const Vec d = (mass_action_rate(net, cp) - mass_action_rate(net, cm)) / (2 * h);
    for (int i = 0; i < 3; ++i) CHECK(J(i, j) == doctest::Approx(d[i]).epsilon(1e-6));
  }
}
