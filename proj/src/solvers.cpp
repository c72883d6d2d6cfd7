#include "bulksurf/solvers.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace bulksurf {

namespace {

struct Layout {
  int n_cells{0};
  int N{0};
  int B{0};
  int T{0};  // theta unknowns per boundary node
  int theta_base{0};
  int ghost_base{0};
  int total{0};

  Layout(const FullProblem& p, VariantTag tag) {
    n_cells = p.mesh.n_cells;
    N = p.n_species();
    B = p.mesh.n_bnodes();
    switch (tag) {
      case VariantTag::FastSurfaceDiffusion: T = 1; break;
      case VariantTag::ThreeParamMP:
      case VariantTag::FastAccumulation: T = 0; break;
      default: T = N; break;
    }
    theta_base = n_cells * N;
    ghost_base = theta_base + B * T;
    total = ghost_base + B * N;
  }

  int bulk(int c, int s) const { return c * N + s; }
  int th(int b, int j) const { return theta_base + b * T + j; }
  int gh(int b, int s) const { return ghost_base + b * N + s; }
};

Vec bulk_rate_raw(const ReactionNetwork& net, const Vec& c) {
  Vec r = Vec::Zero(net.n_species());
  for (const Reaction& rx : net.reactions) {
    const double R = rx.k_f * monomial(c, rx.alpha) - rx.k_b * monomial(c, rx.beta);
    r += R * (rx.beta - rx.alpha).cast<double>();
  }
  return r;
}

SurfaceState state_from_reduced(const Eigen::RowVectorXd& th_red) {
  SurfaceState s;
  s.theta = Vec(th_red.size() + 1);
  s.theta[0] = 1.0 - th_red.sum();
  s.theta.tail(th_red.size()) = th_red.transpose();
  return s;
}

SurfaceState state_from_vacancy(double theta0, int N) {
  SurfaceState s;
  s.theta = Vec::Constant(N + 1, (1.0 - theta0) / N);
  s.theta[0] = theta0;
  return s;
}

Vec pack_state(const FullProblem& p, const Layout& L, const SystemState& s) {
  Vec u(L.total);
  for (int c = 0; c < L.n_cells; ++c)
    for (int sp = 0; sp < L.N; ++sp) u[L.bulk(c, sp)] = s.bulk(c, sp);
  if (L.T == L.N) {
    for (int b = 0; b < L.B; ++b)
      for (int j = 0; j < L.N; ++j) u[L.th(b, j)] = s.theta_red(b, j);
  } else if (L.T == 1) {
    for (int b = 0; b < L.B; ++b) u[L.th(b, 0)] = 1.0 - s.theta_red.row(b).sum();
  }
  for (int b = 0; b < L.B; ++b)
    for (int sp = 0; sp < L.N; ++sp) u[L.gh(b, sp)] = s.ghosts(b, sp);
  return u;
}

SystemState unpack_state(const FullProblem& p, const Layout& L, const Vec& u,
                         const SystemState& proto) {
  SystemState s = proto;
  for (int c = 0; c < L.n_cells; ++c)
    for (int sp = 0; sp < L.N; ++sp) s.bulk(c, sp) = u[L.bulk(c, sp)];
  if (L.T == L.N) {
    for (int b = 0; b < L.B; ++b)
      for (int j = 0; j < L.N; ++j) s.theta_red(b, j) = u[L.th(b, j)];
  } else if (L.T == 1) {
    for (int b = 0; b < L.B; ++b)
      s.theta_red.row(b).setConstant((1.0 - u[L.th(b, 0)]) / L.N);
  }
  for (int b = 0; b < L.B; ++b)
    for (int sp = 0; sp < L.N; ++sp) s.ghosts(b, sp) = u[L.gh(b, sp)];
  return s;
}

double theta_monomial_u(const Vec& theta, const IVec& e) {
  double p = 1.0;
  for (int i = 0; i < theta.size(); ++i)
    for (int k = 0; k < e[i]; ++k) p *= theta[i];
  return p;
}

double theta_monomial_du(const Vec& theta, const IVec& e, int j) {
  if (e[j] == 0) return 0.0;
  double p = static_cast<double>(e[j]);
  for (int k = 0; k < e[j] - 1; ++k) p *= theta[j];
  for (int i = 0; i < theta.size(); ++i) {
    if (i == j) continue;
    for (int k = 0; k < e[i]; ++k) p *= theta[i];
  }
  return p;
}

/// Surface diffusion divergence term and its frozen-coefficient Jacobian
/// blocks for one boundary node (strip geometry; zero on the interval).
struct SurfDiffTerm {
  Vec term;           // N
  Mat d_self, d_left, d_right;  // N x N, derivative wrt reduced occupancies
  bool active{false};
};

SurfDiffTerm surface_diffusion_term(const FullProblem& p, const Layout& L, const Vec& u,
                                    int node) {
  SurfDiffTerm out;
  const Mesh::BoundaryNode& bn = p.mesh.bnodes[node];
  if (bn.left < 0) return out;
  out.active = true;
  const int N = L.N;
  auto theta_at = [&](int b) {
    Eigen::RowVectorXd th(N);
    for (int j = 0; j < N; ++j) th[j] = u[L.th(b, j)];
    return state_from_reduced(th).theta;
  };
  const Vec tk = theta_at(node);
  const Vec tl = theta_at(bn.left);
  const Vec tr = theta_at(bn.right);
  const SurfaceState mid_l{0.5 * (tk + tl)}, mid_r{0.5 * (tk + tr)};
  const Mat Dl = p.d_sigma.evaluator(mid_l);
  const Mat Dr = p.d_sigma.evaluator(mid_r);
  const double w = bn.inv_hs2;
  const Vec full = w * (Dr * (tr - tk) - Dl * (tk - tl));
  out.term = full.tail(N);
  out.d_self = Mat(N, N);
  out.d_left = Mat(N, N);
  out.d_right = Mat(N, N);
  for (int j = 0; j < N; ++j) {
    for (int m = 0; m < N; ++m) {
      // chain rule through theta_0 = 1 - sum theta_red
      out.d_right(j, m) = w * (Dr(j + 1, m + 1) - Dr(j + 1, 0));
      out.d_left(j, m) = w * (Dl(j + 1, m + 1) - Dl(j + 1, 0));
      out.d_self(j, m) = -w * ((Dr(j + 1, m + 1) - Dr(j + 1, 0)) +
                               (Dl(j + 1, m + 1) - Dl(j + 1, 0)));
    }
  }
  return out;
}

void assemble(const FullProblem& p, const ModelVariant& v, const Layout& L, const Vec& u,
              const Vec& u_old, double dt, const Mat* theta_inf, Vec& F,
              std::vector<Triplet>& trips) {
  const int N = L.N;
  const double ita = p.inv_tau_acc;
  const double itd = p.inv_tau_diff;
  const double itr = p.inv_tau_react;
  const double itds = p.inv_tau_diff_sigma;
  const double itrs = p.inv_tau_react_sigma;
  const double its = p.inv_tau_sorp;
  const double itt = p.inv_tau_trans;
  const double c_s = p.surf_params.c_s;
  F.setZero(L.total);
  trips.clear();

  // bulk rows
  Vec cvec(N);
  for (int c = 0; c < L.n_cells; ++c) {
    for (int sp = 0; sp < N; ++sp) cvec[sp] = u[L.bulk(c, sp)];
    const Vec r = bulk_rate_raw(p.bulk, cvec);
    const Mat Jr = mass_action_jacobian(p.bulk, cvec);
    for (int sp = 0; sp < N; ++sp) {
      const int row = L.bulk(c, sp);
      F[row] = ita * (u[row] - u_old[row]) / dt - itr * r[sp];
      trips.emplace_back(row, row, ita / dt);
      for (int m = 0; m < N; ++m)
        if (Jr(sp, m) != 0.0) trips.emplace_back(row, L.bulk(c, m), -itr * Jr(sp, m));
      for (const Mesh::Face& face : p.mesh.cell_faces[c]) {
        const double w = itd * p.d[sp] * face.inv_h2;
        trips.emplace_back(row, row, w);
        if (face.neighbor >= 0) {
          F[row] -= (u[L.bulk(face.neighbor, sp)] - u[row]) * w;
          trips.emplace_back(row, L.bulk(face.neighbor, sp), -w);
        } else {
          F[row] -= (u[L.gh(face.bnode, sp)] - u[row]) * w;
          trips.emplace_back(row, L.gh(face.bnode, sp), -w);
        }
      }
    }
  }

  // precomputed effective constraint constants (ThreeParamMP)
  std::vector<double> kf_eff(p.surface.n_reactions()), kb_eff(p.surface.n_reactions());
  if (v.tag == VariantTag::ThreeParamMP)
    for (int a = 0; a < p.surface.n_reactions(); ++a)
      effective_constraint_constants(p, a, kf_eff[a], kb_eff[a]);

  // boundary node rows
  for (int b = 0; b < L.B; ++b) {
    const Mesh::BoundaryNode& bn = p.mesh.bnodes[b];
    const int cell = bn.cell;
    const double h = bn.h;
    Eigen::RowVectorXd cb(N), g(N);
    for (int sp = 0; sp < N; ++sp) {
      cb[sp] = u[L.bulk(cell, sp)];
      g[sp] = u[L.gh(b, sp)];
    }
    const Vec tr = 0.5 * (cb + g).transpose();

    SurfaceState st;
    if (L.T == N) {
      Eigen::RowVectorXd th(N);
      for (int j = 0; j < N; ++j) th[j] = u[L.th(b, j)];
      st = state_from_reduced(th);
    } else if (L.T == 1) {
      st = state_from_vacancy(u[L.th(b, 0)], N);
    } else if (v.tag == VariantTag::FastAccumulation) {
      st = state_from_reduced(theta_inf->row(b));
    }

    const bool needs_sorption = v.tag != VariantTag::ThreeParamMP;
    Vec s_rate;
    Mat dsdth, dsdc;
    if (needs_sorption) {
      s_rate = sorption_rate(tr, st, p.sorption, c_s);
      dsdth = sorption_rate_dtheta_red(tr, p.sorption, c_s);
      dsdc = sorption_rate_dc(st, p.sorption, c_s);
    }

    switch (v.tag) {
      case VariantTag::Full: {
        const Vec r_ext = surface_mass_action(p.surface, st, c_s);
        const Mat Jred = surface_mass_action_jacobian_red(p.surface, st, c_s);
        const SurfDiffTerm sd = surface_diffusion_term(p, L, u, b);
        for (int j = 0; j < N; ++j) {
          const int row = L.th(b, j);
          F[row] = ita * (u[row] - u_old[row]) / dt - itrs * r_ext[j + 1] - its * s_rate[j];
          if (sd.active) F[row] -= itds * sd.term[j];
          trips.emplace_back(row, row, ita / dt);
          for (int m = 0; m < N; ++m) {
            double val = -itrs * Jred(j + 1, m) - its * dsdth(j, m);
            if (sd.active) val -= itds * sd.d_self(j, m);
            if (val != 0.0) trips.emplace_back(row, L.th(b, m), val);
            if (sd.active) {
              trips.emplace_back(row, L.th(bn.left, m), -itds * sd.d_left(j, m));
              trips.emplace_back(row, L.th(bn.right, m), -itds * sd.d_right(j, m));
            }
          }
          trips.emplace_back(row, L.bulk(cell, j), -its * dsdc(j, j) * 0.5);
          trips.emplace_back(row, L.gh(b, j), -its * dsdc(j, j) * 0.5);
        }
        for (int sp = 0; sp < N; ++sp) {
          const int row = L.gh(b, sp);
          F[row] = itt * p.d[sp] * (cb[sp] - g[sp]) / h - its * s_rate[sp];
          trips.emplace_back(row, L.bulk(cell, sp), itt * p.d[sp] / h - its * dsdc(sp, sp) * 0.5);
          trips.emplace_back(row, L.gh(b, sp), -itt * p.d[sp] / h - its * dsdc(sp, sp) * 0.5);
          for (int m = 0; m < N; ++m)
            if (dsdth(sp, m) != 0.0) trips.emplace_back(row, L.th(b, m), -its * dsdth(sp, m));
        }
        break;
      }
      case VariantTag::FastSorption: {
        const Vec r_ext = surface_mass_action(p.surface, st, c_s);
        const Mat Jred = surface_mass_action_jacobian_red(p.surface, st, c_s);
        const SurfDiffTerm sd = surface_diffusion_term(p, L, u, b);
        for (int j = 0; j < N; ++j) {
          const int row = L.th(b, j);
          F[row] = ita * (u[row] - u_old[row]) / dt - itrs * r_ext[j + 1] -
                   itt * p.d[j] * (cb[j] - g[j]) / h;
          if (sd.active) F[row] -= itds * sd.term[j];
          trips.emplace_back(row, row, ita / dt);
          for (int m = 0; m < N; ++m) {
            double val = -itrs * Jred(j + 1, m);
            if (sd.active) val -= itds * sd.d_self(j, m);
            if (val != 0.0) trips.emplace_back(row, L.th(b, m), val);
            if (sd.active) {
              trips.emplace_back(row, L.th(bn.left, m), -itds * sd.d_left(j, m));
              trips.emplace_back(row, L.th(bn.right, m), -itds * sd.d_right(j, m));
            }
          }
          trips.emplace_back(row, L.bulk(cell, j), -itt * p.d[j] / h);
          trips.emplace_back(row, L.gh(b, j), itt * p.d[j] / h);
        }
        for (int sp = 0; sp < N; ++sp) {
          const int row = L.gh(b, sp);
          F[row] = s_rate[sp];
          trips.emplace_back(row, L.bulk(cell, sp), dsdc(sp, sp) * 0.5);
          trips.emplace_back(row, L.gh(b, sp), dsdc(sp, sp) * 0.5);
          for (int m = 0; m < N; ++m)
            if (dsdth(sp, m) != 0.0) trips.emplace_back(row, L.th(b, m), dsdth(sp, m));
        }
        break;
      }
      case VariantTag::FastSurfaceChemistry:
      case VariantTag::TwoParamSorpChem: {
        const Mat& E = v.surface_basis;
        const SurfDiffTerm sd = surface_diffusion_term(p, L, u, b);
        const bool two_param = v.tag == VariantTag::TwoParamSorpChem;
        for (int k = 0; k < v.n_sigma; ++k) {
          const int row = L.th(b, k);
          double val = 0.0;
          for (int j = 0; j < N; ++j) {
            double dyn = ita * (u[L.th(b, j)] - u_old[L.th(b, j)]) / dt;
            if (sd.active) dyn -= itds * sd.term[j];
            if (two_param)
              dyn -= itt * p.d[j] * (cb[j] - g[j]) / h;
            else
              dyn -= its * s_rate[j];
            val += E(j, k) * dyn;
          }
          F[row] = val;
          for (int m = 0; m < N; ++m) {
            double self = E(m, k) * ita / dt;
            double left = 0.0, right = 0.0;
            for (int j = 0; j < N; ++j) {
              if (sd.active) {
                self -= E(j, k) * itds * sd.d_self(j, m);
                left -= E(j, k) * itds * sd.d_left(j, m);
                right -= E(j, k) * itds * sd.d_right(j, m);
              }
              if (!two_param) self -= E(j, k) * its * dsdth(j, m);
            }
            if (self != 0.0) trips.emplace_back(row, L.th(b, m), self);
            if (sd.active) {
              trips.emplace_back(row, L.th(bn.left, m), left);
              trips.emplace_back(row, L.th(bn.right, m), right);
            }
          }
          for (int j = 0; j < N; ++j) {
            if (two_param) {
              trips.emplace_back(row, L.bulk(cell, j), -E(j, k) * itt * p.d[j] / h);
              trips.emplace_back(row, L.gh(b, j), E(j, k) * itt * p.d[j] / h);
            } else {
              trips.emplace_back(row, L.bulk(cell, j), -E(j, k) * its * dsdc(j, j) * 0.5);
              trips.emplace_back(row, L.gh(b, j), -E(j, k) * its * dsdc(j, j) * 0.5);
            }
          }
        }
        for (int a = 0; a < v.m_sigma; ++a) {
          const int row = L.th(b, v.n_sigma + a);
          const SurfaceReaction& rx = p.surface.reactions[a];
          F[row] = rx.k_f * theta_monomial_u(st.theta, rx.alpha_ext) -
                   rx.k_b * theta_monomial_u(st.theta, rx.beta_ext);
          for (int m = 0; m < N; ++m) {
            const double dval =
                rx.k_f * (theta_monomial_du(st.theta, rx.alpha_ext, m + 1) -
                          theta_monomial_du(st.theta, rx.alpha_ext, 0)) -
                rx.k_b * (theta_monomial_du(st.theta, rx.beta_ext, m + 1) -
                          theta_monomial_du(st.theta, rx.beta_ext, 0));
            if (dval != 0.0) trips.emplace_back(row, L.th(b, m), dval);
          }
        }
        // ghost rows
        for (int sp = 0; sp < N; ++sp) {
          const int row = L.gh(b, sp);
          if (two_param) {
            F[row] = s_rate[sp];
            trips.emplace_back(row, L.bulk(cell, sp), dsdc(sp, sp) * 0.5);
            trips.emplace_back(row, L.gh(b, sp), dsdc(sp, sp) * 0.5);
            for (int m = 0; m < N; ++m)
              if (dsdth(sp, m) != 0.0) trips.emplace_back(row, L.th(b, m), dsdth(sp, m));
          } else {
            F[row] = itt * p.d[sp] * (cb[sp] - g[sp]) / h - its * s_rate[sp];
            trips.emplace_back(row, L.bulk(cell, sp),
                               itt * p.d[sp] / h - its * dsdc(sp, sp) * 0.5);
            trips.emplace_back(row, L.gh(b, sp), -itt * p.d[sp] / h - its * dsdc(sp, sp) * 0.5);
            for (int m = 0; m < N; ++m)
              if (dsdth(sp, m) != 0.0) trips.emplace_back(row, L.th(b, m), -its * dsdth(sp, m));
          }
        }
        break;
      }
      case VariantTag::ThreeParamMP: {
        const Mat& E = v.surface_basis;
        for (int k = 0; k < v.n_sigma; ++k) {
          const int row = L.gh(b, k);
          double val = 0.0;
          for (int sp = 0; sp < N; ++sp) {
            val += E(sp, k) * p.d[sp] * (cb[sp] - g[sp]) / h;
            trips.emplace_back(row, L.bulk(cell, sp), E(sp, k) * p.d[sp] / h);
            trips.emplace_back(row, L.gh(b, sp), -E(sp, k) * p.d[sp] / h);
          }
          F[row] = val;
        }
        for (int a = 0; a < v.m_sigma; ++a) {
          const int row = L.gh(b, v.n_sigma + a);
          const SurfaceReaction& rx = p.surface.reactions[a];
          const IVec alpha_red = rx.alpha_ext.tail(N);
          const IVec beta_red = rx.beta_ext.tail(N);
          F[row] = kf_eff[a] * monomial(tr, alpha_red) - kb_eff[a] * monomial(tr, beta_red);
          for (int sp = 0; sp < N; ++sp) {
            const double dval = kf_eff[a] * monomial_derivative(tr, alpha_red, sp) -
                                kb_eff[a] * monomial_derivative(tr, beta_red, sp);
            if (dval != 0.0) {
              trips.emplace_back(row, L.bulk(cell, sp), 0.5 * dval);
              trips.emplace_back(row, L.gh(b, sp), 0.5 * dval);
            }
          }
        }
        break;
      }
      case VariantTag::FastSurfaceDiffusion: {
        const Vec r_ext = surface_mass_action(p.surface, st, c_s);
        const Mat Jfull = surface_mass_action_jacobian(p.surface, st, c_s);
        // direction of the constrained state: d theta_hat / d theta_0
        Vec w = Vec::Constant(N + 1, -1.0 / N);
        w[0] = 1.0;
        const double dr0 = Jfull.row(0).dot(w);
        double ds0 = 0.0;  // d s_0 / d theta_0
        for (int i = 0; i < N; ++i)
          ds0 -= c_s * (p.sorption.k_ad[i] * tr[i] + p.sorption.k_de[i] / N);
        const int row = L.th(b, 0);
        F[row] = ita * (u[row] - u_old[row]) / dt - itrs * r_ext[0] + its * s_rate.sum();
        trips.emplace_back(row, row, ita / dt - itrs * dr0 - its * ds0);
        for (int sp = 0; sp < N; ++sp) {
          // d s_0 / d c_sp = -c_s k_ad theta_0
          const double d = its * c_s * p.sorption.k_ad[sp] * st.theta[0] * 0.5;
          trips.emplace_back(row, L.bulk(cell, sp), d);
          trips.emplace_back(row, L.gh(b, sp), d);
        }
        for (int sp = 0; sp < N; ++sp) {
          const int grow = L.gh(b, sp);
          F[grow] = itt * p.d[sp] * (cb[sp] - g[sp]) / h - its * s_rate[sp];
          trips.emplace_back(grow, L.bulk(cell, sp),
                             itt * p.d[sp] / h - its * dsdc(sp, sp) * 0.5);
          trips.emplace_back(grow, L.gh(b, sp), -itt * p.d[sp] / h - its * dsdc(sp, sp) * 0.5);
          const double dsp = c_s * (p.sorption.k_ad[sp] * tr[sp] + p.sorption.k_de[sp] / N);
          trips.emplace_back(grow, L.th(b, 0), -its * dsp);
        }
        break;
      }
      case VariantTag::FastAccumulation: {
        for (int sp = 0; sp < N; ++sp) {
          const int row = L.gh(b, sp);
          F[row] = itt * p.d[sp] * (cb[sp] - g[sp]) / h - its * s_rate[sp];
          trips.emplace_back(row, L.bulk(cell, sp), itt * p.d[sp] / h - its * dsdc(sp, sp) * 0.5);
          trips.emplace_back(row, L.gh(b, sp), -itt * p.d[sp] / h - its * dsdc(sp, sp) * 0.5);
        }
        break;
      }
    }
  }
}

bool newton_solve(const FullProblem& p, const ModelVariant& v, const Layout& L, Vec& u,
                  const Vec& u_old, double dt, const StepperConfig& cfg, const Mat* theta_inf,
                  double* res_out, int* iters_out) {
  Vec F;
  std::vector<Triplet> trips;
  Eigen::SparseLU<SpMat> lu;
  double res = 0.0;
  Vec row_scale;
  for (int iter = 0; iter <= cfg.newton_max_iter; ++iter) {
    assemble(p, v, L, u, u_old, dt, theta_inf, F, trips);
    // residual scaled per row by the Jacobian magnitude, so stiff constraint
    // rows with large 1/tau prefactors converge to the same relative level
    row_scale = Vec::Ones(L.total);
    for (const Triplet& t : trips)
      row_scale[t.row()] = std::max(row_scale[t.row()], std::abs(t.value()));
    res = (F.array().abs() / row_scale.array()).maxCoeff();
    if (res_out) *res_out = res;
    if (iters_out) *iters_out = iter;
    if (!std::isfinite(res)) return false;
    if (res <= cfg.newton_tol) return true;
    if (iter == cfg.newton_max_iter) break;
    SpMat J(L.total, L.total);
    J.setFromTriplets(trips.begin(), trips.end());
    lu.compute(J);
    if (lu.info() != Eigen::Success) return false;
    const Vec delta = lu.solve(-F);
    if (lu.info() != Eigen::Success || !delta.allFinite()) return false;
    u += delta;
  }
  return false;
}

void fail_step(StepStats* stats, const std::string& message, double res) {
  if (stats) {
    stats->ok = false;
    stats->message = message;
    stats->newton_res = res;
  }
  throw std::runtime_error(message);
}

bool substep_fast_accumulation(const FullProblem& p, const ModelVariant& v, const Layout& L,
                               const Vec& u0, Vec& u, double dt, const StepperConfig& cfg,
                               Mat& theta_inf, double* res_out, int* inner_out) {
  int inner = 0;
  for (inner = 1; inner <= 50; ++inner) {
    u = u0;
    int iters = 0;
    if (!newton_solve(p, v, L, u, u0, dt, cfg, &theta_inf, res_out, &iters)) return false;
    Mat traces(L.B, L.N);
    for (int b = 0; b < L.B; ++b)
      for (int sp = 0; sp < L.N; ++sp)
        traces(b, sp) = 0.5 * (u[L.bulk(p.mesh.bnodes[b].cell, sp)] + u[L.gh(b, sp)]);
    const AttractorResult ar = surface_attractor(p, traces, cfg, &theta_inf);
    if (!ar.converged) return false;
    const double change = (ar.theta_red - theta_inf).cwiseAbs().maxCoeff();
    theta_inf = ar.theta_red;
    if (change <= 1e-10) break;
  }
  if (inner_out) *inner_out += inner;
  return inner <= 50;
}

} // namespace

SystemState prepare_initial_state(const FullProblem& p, const ModelVariant& v,
                                  const SystemState& s, const StepperConfig& cfg,
                                  ProjectionReport* report) {
  SystemState out = s;
  if (out.ghosts.rows() != p.mesh.n_bnodes() || out.ghosts.cols() != p.n_species()) {
    out.ghosts = Mat(p.mesh.n_bnodes(), p.n_species());
    for (int b = 0; b < p.mesh.n_bnodes(); ++b)
      out.ghosts.row(b) = out.bulk.row(p.mesh.bnodes[b].cell);
  }
  ProjectionReport rep;
  const Mat traces = ghost_trace(p, out);
  const int N = p.n_species();
  switch (v.tag) {
    case VariantTag::Full:
      break;
    case VariantTag::FastSorption:
    case VariantTag::TwoParamSorpChem:
    case VariantTag::FastAccumulation: {
      for (int b = 0; b < p.mesh.n_bnodes(); ++b) {
        const SurfaceState iso = sorption_equilibrium_solve(traces.row(b), p.sorption);
        const Eigen::RowVectorXd old = out.theta_red.row(b);
        out.theta_red.row(b) = iso.theta.tail(N).transpose();
        rep.distance = std::max(rep.distance, (out.theta_red.row(b) - old).cwiseAbs().maxCoeff());
        if (v.tag == VariantTag::TwoParamSorpChem) {
          const Vec r = surface_mass_action(p.surface, iso, p.surf_params.c_s);
          if (r.cwiseAbs().maxCoeff() > 1e-8)
            rep.warning = "initial data not compatible with the surface-chemistry constraint; "
                          "residual " + std::to_string(r.cwiseAbs().maxCoeff());
        }
      }
      break;
    }
    case VariantTag::FastSurfaceChemistry: {
      // per-node damped Newton: R_a(theta) = 0 plus conservation of the e^k
      // components of the initial occupancies
      const Mat& E = v.surface_basis;
      for (int b = 0; b < p.mesh.n_bnodes(); ++b) {
        Vec th = out.theta_red.row(b).transpose();
        const Vec target = E.transpose() * th;
        for (int iter = 0; iter < 100; ++iter) {
          SurfaceState st = state_from_reduced(th.transpose());
          Vec G(N);
          Mat J = Mat::Zero(N, N);
          for (int k = 0; k < v.n_sigma; ++k) {
            G[k] = E.col(k).dot(th) - target[k];
            J.row(k) = E.col(k).transpose();
          }
          for (int a = 0; a < v.m_sigma; ++a) {
            const SurfaceReaction& rx = p.surface.reactions[a];
            G[v.n_sigma + a] = rx.k_f * theta_monomial_u(st.theta, rx.alpha_ext) -
                               rx.k_b * theta_monomial_u(st.theta, rx.beta_ext);
            for (int m = 0; m < N; ++m)
              J(v.n_sigma + a, m) =
                  rx.k_f * (theta_monomial_du(st.theta, rx.alpha_ext, m + 1) -
                            theta_monomial_du(st.theta, rx.alpha_ext, 0)) -
                  rx.k_b * (theta_monomial_du(st.theta, rx.beta_ext, m + 1) -
                            theta_monomial_du(st.theta, rx.beta_ext, 0));
          }
          if (G.lpNorm<Eigen::Infinity>() <= 1e-13) break;
          Vec delta = J.fullPivLu().solve(-G);
          double damp = 1.0;
          // keep the iterate inside the closed simplex
          for (int tries = 0; tries < 30; ++tries) {
            Vec cand = th + damp * delta;
            if ((cand.array() >= -1e-14).all() && cand.sum() <= 1.0 + 1e-14) break;
            damp *= 0.5;
          }
          th += damp * delta;
        }
        rep.distance = std::max(
            rep.distance, (th.transpose() - out.theta_red.row(b)).cwiseAbs().maxCoeff());
        out.theta_red.row(b) = th.transpose();
      }
      break;
    }
    case VariantTag::FastSurfaceDiffusion: {
      for (int b = 0; b < p.mesh.n_bnodes(); ++b) {
        const double theta0 = 1.0 - out.theta_red.row(b).sum();
        const Eigen::RowVectorXd old = out.theta_red.row(b);
        out.theta_red.row(b).setConstant((1.0 - theta0) / N);
        rep.distance = std::max(rep.distance, (out.theta_red.row(b) - old).cwiseAbs().maxCoeff());
      }
      break;
    }
    case VariantTag::ThreeParamMP: {
      double worst = 0.0;
      for (int b = 0; b < p.mesh.n_bnodes(); ++b) {
        const Vec tr = traces.row(b).transpose();
        for (int a = 0; a < p.surface.n_reactions(); ++a) {
          double kf = 0.0, kb = 0.0;
          effective_constraint_constants(p, a, kf, kb);
          const SurfaceReaction& rx = p.surface.reactions[a];
          const double fwd = kf * monomial(tr, IVec(rx.alpha_ext.tail(N)));
          const double bwd = kb * monomial(tr, IVec(rx.beta_ext.tail(N)));
          worst = std::max(worst, std::abs(fwd - bwd) / std::max(1.0, std::abs(fwd)));
        }
      }
      rep.distance = worst;
      if (worst > 1e-8) {
        if (cfg.strict_compatibility)
          throw std::invalid_argument(
              "initial data violates the boundary compatibility condition (residual " +
              std::to_string(worst) + ")");
        rep.warning = "initial data violates the boundary compatibility condition; residual " +
                      std::to_string(worst);
      }
      break;
    }
  }
  if (report) *report = rep;
  return out;
}

SystemState step(const FullProblem& p, const ModelVariant& v, const SystemState& s,
                 const StepperConfig& cfg, StepStats* stats) {
  cfg.validate();
  const bool needs_constraints = v.tag == VariantTag::FastSurfaceChemistry ||
                                 v.tag == VariantTag::TwoParamSorpChem ||
                                 v.tag == VariantTag::ThreeParamMP;
  if (needs_constraints && v.n_sigma + v.m_sigma != p.n_species())
    throw std::invalid_argument("constraint variant must be created via ModelVariant::make");
  const Layout L(p, v.tag);
  StepStats local;
  SystemState scur = s;
  Mat theta_inf = s.theta_red;
  double remaining = cfg.dt;
  double cur = cfg.dt;
  while (remaining > 1e-15 * cfg.dt) {
    cur = std::min(cur, remaining);
    const Vec u0 = pack_state(p, L, scur);
    Vec u = u0;
    double res = 0.0;
    int iters = 0;
    bool ok;
    if (v.tag == VariantTag::FastAccumulation)
      ok = substep_fast_accumulation(p, v, L, u0, u, cur, cfg, theta_inf, &res,
                                     &local.inner_iters);
    else
      ok = newton_solve(p, v, L, u, u0, cur, cfg, nullptr, &res, &iters);
    local.newton_res = res;
    local.newton_iters += iters;
    if (!ok) {
      if (cur * 0.5 < cfg.dt_min) {
        if (stats) *stats = local;
        fail_step(stats, "Newton did not converge at dt_min (residual " + std::to_string(res) +
                             ")", res);
      }
      cur *= 0.5;
      ++local.dt_halvings;
      continue;
    }
    SystemState snew = unpack_state(p, L, u, scur);
    if (v.tag == VariantTag::FastAccumulation) snew.theta_red = theta_inf;
    const double mn = snew.min_value();
    if (mn < -1e-12) {
      if (stats) *stats = local;
      fail_step(stats, "positivity violation: minimum value " + std::to_string(mn), res);
    }
    snew.time = scur.time + cur;
    scur = snew;
    remaining -= cur;
  }
  if (stats) {
    local.ok = true;
    *stats = local;
  }
  return scur;
}

SystemState step_full(const FullProblem& p, const SystemState& s, const StepperConfig& cfg,
                      StepStats* stats) {
  return step(p, ModelVariant::make(VariantTag::Full, p), s, cfg, stats);
}
SystemState step_fast_sorption(const FullProblem& p, const SystemState& s,
                               const StepperConfig& cfg, StepStats* stats) {
  return step(p, ModelVariant::make(VariantTag::FastSorption, p), s, cfg, stats);
}
SystemState step_fast_chemistry(const FullProblem& p, const SystemState& s,
                                const StepperConfig& cfg, StepStats* stats) {
  return step(p, ModelVariant::make(VariantTag::FastSurfaceChemistry, p), s, cfg, stats);
}
SystemState step_two_param(const FullProblem& p, const SystemState& s, const StepperConfig& cfg,
                           StepStats* stats) {
  return step(p, ModelVariant::make(VariantTag::TwoParamSorpChem, p), s, cfg, stats);
}
SystemState step_three_param_mp(const FullProblem& p, const SystemState& s,
                                const StepperConfig& cfg, StepStats* stats) {
  return step(p, ModelVariant::make(VariantTag::ThreeParamMP, p), s, cfg, stats);
}
SystemState step_fast_surface_diffusion(const FullProblem& p, const SystemState& s,
                                        const StepperConfig& cfg, StepStats* stats) {
  return step(p, ModelVariant::make(VariantTag::FastSurfaceDiffusion, p), s, cfg, stats);
}
SystemState step_fast_accumulation(const FullProblem& p, const SystemState& s,
                                   const StepperConfig& cfg, StepStats* stats) {
  return step(p, ModelVariant::make(VariantTag::FastAccumulation, p), s, cfg, stats);
}

namespace {

/// Steady-state residual of the frozen-trace surface system.
Vec attractor_rhs(const FullProblem& p, const Mat& traces, const Mat& theta) {
  const int B = static_cast<int>(theta.rows());
  const int N = static_cast<int>(theta.cols());
  Vec rhs(B * N);
  for (int b = 0; b < B; ++b) {
    const SurfaceState st = state_from_reduced(theta.row(b));
    const Vec r = surface_mass_action(p.surface, st, p.surf_params.c_s);
    const Vec sr = sorption_rate(traces.row(b).transpose(), st, p.sorption, p.surf_params.c_s);
    for (int j = 0; j < N; ++j)
      rhs[b * N + j] = p.inv_tau_react_sigma * r[j + 1] + p.inv_tau_sorp * sr[j];
    const Mesh::BoundaryNode& bn = p.mesh.bnodes[b];
    if (bn.left >= 0) {
      const SurfaceState sl = state_from_reduced(theta.row(bn.left));
      const SurfaceState sr2 = state_from_reduced(theta.row(bn.right));
      const SurfaceState ml{0.5 * (st.theta + sl.theta)}, mr{0.5 * (st.theta + sr2.theta)};
      const Vec flux = bn.inv_hs2 * (p.d_sigma.evaluator(mr) * (sr2.theta - st.theta) -
                                     p.d_sigma.evaluator(ml) * (st.theta - sl.theta));
      for (int j = 0; j < N; ++j) rhs[b * N + j] += p.inv_tau_diff_sigma * flux[j + 1];
    }
  }
  return rhs;
}

bool attractor_integrate(const FullProblem& p, const Mat& traces, Mat& theta, double* residual,
                         int* iterations) {
  const int B = static_cast<int>(theta.rows());
  const int N = static_cast<int>(theta.cols());
  const int n = B * N;
  const double rate_scale =
      std::max({p.inv_tau_react_sigma, p.inv_tau_sorp, p.inv_tau_diff_sigma, 1.0});
  double dtau = 0.1 / rate_scale;
  int it = 0;
  for (it = 0; it < 500; ++it) {
    const Vec rhs = attractor_rhs(p, traces, theta);
    *residual = rhs.lpNorm<Eigen::Infinity>();
    if (*residual <= 1e-10) {
      if (iterations) *iterations = it;
      return true;
    }
    // implicit Euler pseudo-step with finite-difference Jacobian of the
    // (small) coupled surface system
    Mat theta_new = theta;
    bool newton_ok = false;
    for (int ni = 0; ni < 30; ++ni) {
      const Vec rhs_new = attractor_rhs(p, traces, theta_new);
      Vec G(n);
      for (int b = 0; b < B; ++b)
        for (int j = 0; j < N; ++j)
          G[b * N + j] = p.inv_tau_acc * (theta_new(b, j) - theta(b, j)) / dtau -
                         rhs_new[b * N + j];
      if (G.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, p.inv_tau_acc / dtau)) {
        newton_ok = true;
        break;
      }
      Mat J = Mat::Zero(n, n);
      const double eps = 1e-7;
      for (int col = 0; col < n; ++col) {
        Mat pert = theta_new;
        pert(col / N, col % N) += eps;
        const Vec rp = attractor_rhs(p, traces, pert);
        for (int row = 0; row < n; ++row) J(row, col) = -(rp[row] - rhs_new[row]) / eps;
        J(col, col) += p.inv_tau_acc / dtau;
      }
      const Vec delta = J.fullPivLu().solve(-G);
      if (!delta.allFinite()) break;
      for (int b = 0; b < B; ++b)
        for (int j = 0; j < N; ++j) theta_new(b, j) += delta[b * N + j];
      if (delta.lpNorm<Eigen::Infinity>() <= 1e-14) {
        newton_ok = true;
        break;
      }
    }
    if (!newton_ok) {
      dtau *= 0.5;
      if (dtau < 1e-14) break;
      continue;
    }
    theta = theta_new;
    dtau = std::min(dtau * 2.0, 1e6 / rate_scale);
  }
  if (iterations) *iterations = it;
  return false;
}

} // namespace

AttractorResult surface_attractor(const FullProblem& p, const Mat& traces,
                                  const StepperConfig& cfg, const Mat* warm_start,
                                  bool double_start) {
  const int B = static_cast<int>(traces.rows());
  const int N = static_cast<int>(traces.cols());
  AttractorResult out;
  Mat theta = warm_start ? *warm_start : Mat::Zero(B, N);
  out.converged = attractor_integrate(p, traces, theta, &out.residual, &out.iterations);
  out.theta_red = theta;
  if (!out.converged) return out;
  if (double_start) {
    Mat theta2 = Mat::Constant(B, N, 1.0 / (N + 1));
    double res2 = 0.0;
    int it2 = 0;
    if (attractor_integrate(p, traces, theta2, &res2, &it2)) {
      out.start_disagreement = (theta2 - theta).cwiseAbs().maxCoeff();
      out.unique = out.start_disagreement <= 1e-8;
    } else {
      out.unique = false;
    }
  }
  return out;
}

SystemState phi_fixed_point(const FullProblem& p, const SystemState& s, const StepperConfig& cfg,
                            StepStats* stats) {
  cfg.validate();
  if (!is_mp_problem(p))
    throw std::invalid_argument("phi_fixed_point requires the MP problem shape");
  const double kappa = mp_kappa(p);
  const int n_cells = p.mesh.n_cells;
  const int B = p.mesh.n_bnodes();
  const int n = n_cells + B;  // per-species unknowns: cells then ghosts
  const double ita = p.inv_tau_acc;
  const double itd = p.inv_tau_diff;

  // per-species system matrices; species 1, 2 carry Neumann ghost rows,
  // species 3 a Dirichlet ghost row
  std::array<Eigen::SparseLU<SpMat>*, 3> lus{};
  std::vector<Eigen::SparseLU<SpMat>> lu_store(3);
  std::array<SpMat, 3> mats;
  for (int sp = 0; sp < 3; ++sp) {
    std::vector<Triplet> trips;
    for (int c = 0; c < n_cells; ++c) {
      trips.emplace_back(c, c, ita / cfg.dt);
      for (const Mesh::Face& face : p.mesh.cell_faces[c]) {
        const double w = itd * p.d[sp] * face.inv_h2;
        trips.emplace_back(c, c, w);
        if (face.neighbor >= 0)
          trips.emplace_back(c, face.neighbor, -w);
        else
          trips.emplace_back(c, n_cells + face.bnode, -w);
      }
    }
    for (int b = 0; b < B; ++b) {
      const Mesh::BoundaryNode& bn = p.mesh.bnodes[b];
      const int row = n_cells + b;
      if (sp < 2) {
        trips.emplace_back(row, row, p.d[sp] / bn.h);
        trips.emplace_back(row, bn.cell, -p.d[sp] / bn.h);
      } else {
        trips.emplace_back(row, row, 0.5);
        trips.emplace_back(row, bn.cell, 0.5);
      }
    }
    mats[sp] = SpMat(n, n);
    mats[sp].setFromTriplets(trips.begin(), trips.end());
    lu_store[sp].compute(mats[sp]);
    if (lu_store[sp].info() != Eigen::Success)
      throw std::runtime_error("phi_fixed_point: factorization failed");
    lus[sp] = &lu_store[sp];
  }

  auto pack_species = [&](const SystemState& st, int sp) {
    Vec u(n);
    for (int c = 0; c < n_cells; ++c) u[c] = st.bulk(c, sp);
    for (int b = 0; b < B; ++b) u[n_cells + b] = st.ghosts(b, sp);
    return u;
  };

  std::array<Vec, 3> u{pack_species(s, 0), pack_species(s, 1), pack_species(s, 2)};
  const std::array<Vec, 3> u_old = u;

  double prev_delta = -1.0;
  double contraction = 0.0;
  bool converged = false;
  int it = 0;
  for (it = 1; it <= cfg.phi_max_iter; ++it) {
    std::array<Vec, 3> u_next = u;
    // Neumann data from the current species-3 iterate
    for (int sp = 0; sp < 2; ++sp) {
      Vec rhs(n);
      for (int c = 0; c < n_cells; ++c) rhs[c] = ita * u_old[sp][c] / cfg.dt;
      for (int b = 0; b < B; ++b) {
        const Mesh::BoundaryNode& bn = p.mesh.bnodes[b];
        const double phi = p.d[2] * (u[2][n_cells + b] - u[2][bn.cell]) / bn.h;
        rhs[n_cells + b] = -phi;
      }
      u_next[sp] = lus[sp]->solve(rhs);
    }
    // Dirichlet data from the freshly solved species 1, 2 traces
    {
      Vec rhs(n);
      for (int c = 0; c < n_cells; ++c) rhs[c] = ita * u_old[2][c] / cfg.dt;
      for (int b = 0; b < B; ++b) {
        const Mesh::BoundaryNode& bn = p.mesh.bnodes[b];
        const double tr1 = 0.5 * (u_next[0][bn.cell] + u_next[0][n_cells + b]);
        const double tr2 = 0.5 * (u_next[1][bn.cell] + u_next[1][n_cells + b]);
        rhs[n_cells + b] = tr1 * tr2 / kappa;
      }
      u_next[2] = lus[2]->solve(rhs);
    }
    double delta = 0.0;
    for (int sp = 0; sp < 3; ++sp)
      delta = std::max(delta, (u_next[sp] - u[sp]).lpNorm<Eigen::Infinity>());
    if (!std::isfinite(delta))
      throw std::runtime_error("phi iteration diverged (update no longer finite); the "
                               "contraction condition on the boundary data fails");
    u = u_next;
    if (prev_delta > 0.0) contraction = delta / prev_delta;
    prev_delta = delta;
    if (delta <= cfg.phi_tol) {
      converged = true;
      break;
    }
  }

  if (stats) {
    stats->ok = converged;
    stats->inner_iters = it;
    stats->contraction = contraction;
  }
  if (!converged)
    throw std::runtime_error("phi iteration did not contract within the iteration budget "
                             "(last ratio " + std::to_string(contraction) + ")");

  SystemState out = s;
  for (int sp = 0; sp < 3; ++sp) {
    for (int c = 0; c < n_cells; ++c) out.bulk(c, sp) = u[sp][c];
    for (int b = 0; b < B; ++b) out.ghosts(b, sp) = u[sp][n_cells + b];
  }
  const double mn = out.bulk.minCoeff();
  if (mn < -1e-12) throw std::runtime_error("positivity violation in phi iteration");
  out.time = s.time + cfg.dt;
  return out;
}

} // namespace bulksurf
