#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "shla/leaf_form.hpp"
#include "shla/transverse_field.hpp"

namespace shla {

/// Chart point extended with fiber values p_α (coordinates on U ⊂ E*).
struct ThickenedPoint {
  Point base;
  std::vector<double> p;  // size r
};

namespace detail {

/// Coordinate layout on U: y^1..y^{2k}, q^1..q^r, p_1..p_r.
struct ThickenedFrame {
  int two_k, r;
  int dim() const { return two_k + 2 * r; }
  int y(int i) const { return i; }
  int q(int a) const { return two_k + a; }
  int p(int a) const { return two_k + r + a; }
};

inline EvalEnv thickened_env(const ChartSpec& chart, const ThickenedPoint& tp) {
  EvalEnv env = chart.env(tp.base);
  for (int a = 0; a < chart.r; ++a) env["__p" + std::to_string(a)] = tp.p[a];
  return env;
}

}  // namespace detail

/// ω̃_ij = ω_U(e_i, e_j) = ω_ij + p_β F^β_ij at a thickened point.  The sign
/// follows from expanding π*ω - dθ_G directly: the lifted frame pairs to
/// ω_ab + p_β(∂_a R_b^β - ∂_b R_a^β + R_a^γ∂_γR_b^β - R_b^γ∂_γR_a^β).
inline Eigen::MatrixXd omega_tilde_at(const ChartSpec& chart, const TransverseField& F,
                                      const Point& base, const std::vector<double>& p) {
  int n = chart.dim_transverse();
  Eigen::MatrixXd wt = chart.omega_at(base);
  EvalEnv env = chart.env(base);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double f = 0.0;
      for (int b = 0; b < chart.r; ++b) f += p[b] * F.at({i, j})[b].eval(env);
      wt(i, j) += f;
      wt(j, i) -= f;
    }
  return wt;
}

inline bool thickened_point_valid(const ChartSpec& chart, const TransverseField& F,
                                  const ThickenedPoint& tp, double tol = 1e-10) {
  return std::abs(omega_tilde_at(chart, F, tp.base, tp.p).determinant()) > tol;
}

/// The matrix of ω_U = π*ω - dθ_G in the coordinate basis (∂y, ∂q, ∂p),
/// assembled from the raw expansion of dθ_G (no re-grouping):
///   ω_U = ½ ω_ij dy^i∧dy^j - dp_β∧dq^β + R_i^β dp_β∧dy^i
///         + p_β ∂R_i^β/∂y^j dy^j∧dy^i + p_β ∂R_i^β/∂q^γ dq^γ∧dy^i.
inline Eigen::MatrixXd omega_U_at(const ChartSpec& chart, const TransverseField& F,
                                  const ThickenedPoint& tp) {
  detail::ThickenedFrame fr{chart.dim_transverse(), chart.r};
  if (!thickened_point_valid(chart, F, tp))
    throw ChartError("thickened point outside validity radius (omega~ nearly singular)");
  int n2k = fr.two_k, r = fr.r;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(fr.dim(), fr.dim());
  auto add_term = [&](double c, int a, int b) {
    M(a, b) += c;
    M(b, a) -= c;
  };
  EvalEnv env = chart.env(tp.base);

  Eigen::MatrixXd w = chart.omega_at(tp.base);
  for (int i = 0; i < n2k; ++i)
    for (int j = 0; j < n2k; ++j) add_term(0.5 * w(i, j), fr.y(i), fr.y(j));

  for (int b = 0; b < r; ++b) add_term(-1.0, fr.p(b), fr.q(b));
  for (int b = 0; b < r; ++b)
    for (int i = 0; i < n2k; ++i) add_term(chart.R[i][b].eval(env), fr.p(b), fr.y(i));
  for (int i = 0; i < n2k; ++i)
    for (int j = 0; j < n2k; ++j) {
      double acc = 0.0;
      for (int b = 0; b < r; ++b)
        acc += tp.p[b] * chart.R[i][b].diff(chart.y_names[j]).eval(env);
      add_term(acc, fr.y(j), fr.y(i));
    }
  for (int i = 0; i < n2k; ++i)
    for (int g = 0; g < r; ++g) {
      double acc = 0.0;
      for (int b = 0; b < r; ++b)
        acc += tp.p[b] * chart.R[i][b].diff(chart.q_names[g]).eval(env);
      add_term(acc, fr.q(g), fr.y(i));
    }
  return M;
}

/// Finite-difference residual of dω_U at a thickened point (Richardson
/// extrapolated central differences, h = 1e-4).
inline double omega_U_closedness_residual(const ChartSpec& chart, const TransverseField& F,
                                          const ThickenedPoint& tp, double h = 1e-4) {
  detail::ThickenedFrame fr{chart.dim_transverse(), chart.r};
  int dim = fr.dim();
  auto names = chart.coord_names();
  auto shifted = [&](int coord, double eps) {
    ThickenedPoint s = tp;
    if (coord < fr.two_k + fr.r) {
      s.base[names[coord]] += eps;
    } else {
      s.p[coord - fr.two_k - fr.r] += eps;
    }
    return omega_U_at(chart, F, s);
  };
  auto deriv = [&](int coord, double step) {
    return (shifted(coord, step) - shifted(coord, -step)) / (2 * step);
  };
  double worst = 0.0;
  // Cache all first derivatives once; dω(∂a,∂b,∂c) = ∂_a M_{bc} - ∂_b M_{ac} + ∂_c M_{ab}.
  std::vector<Eigen::MatrixXd> d(dim);
  for (int a = 0; a < dim; ++a) {
    Eigen::MatrixXd d1 = deriv(a, h);
    Eigen::MatrixXd d2 = deriv(a, h / 2);
    d[a] = (4.0 * d2 - d1) / 3.0;
  }
  for (int a = 0; a < dim; ++a)
    for (int b = a + 1; b < dim; ++b)
      for (int c = b + 1; c < dim; ++c) {
        double v = d[a](b, c) - d[b](a, c) + d[c](a, b);
        worst = std::max(worst, std::abs(v));
      }
  return worst;
}

namespace detail {

/// Orthonormal basis of the null space of B (rows = constraints).
inline Eigen::MatrixXd null_space(const Eigen::MatrixXd& B, double tol = 1e-10) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cutoff = tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return svd.matrixV().rightCols(B.cols() - rank);
}

/// Largest principal-angle sine between span(K) and span(T).
inline double subspace_defect(const Eigen::MatrixXd& K, const Eigen::MatrixXd& T) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(T);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(T.rows(), T.cols());
  Eigen::MatrixXd res = K - Q * (Q.transpose() * K);
  return res.norm() == 0.0 ? 0.0 : res.jacobiSvd().singularValues()(0);
}

}  // namespace detail

/// Largest scale λ <= 1 keeping λ·s inside the validity radius (|det ω̃| above
/// threshold) at every sample point; bisection to 1% resolution.
inline double validity_scale(const ChartSpec& chart, const TransverseField& F,
                             const LeafForm& s, const std::vector<Point>& pts,
                             double det_tol = 1e-10) {
  auto valid_at = [&](double lambda) {
    for (const auto& pt : pts) {
      EvalEnv env = chart.env(pt);
      std::vector<double> sv(chart.r);
      for (int a = 0; a < chart.r; ++a) sv[a] = lambda * s.at({a}).eval(env);
      if (std::abs(omega_tilde_at(chart, F, pt, sv).determinant()) <= det_tol) return false;
    }
    return true;
  };
  if (valid_at(1.0)) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 40 && hi - lo > 0.01 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (valid_at(mid) ? lo : hi) = mid;
  }
  return lo;
}

/// Tangent frame of Graph(s) at a thickened point: columns are
/// ∂/∂y^i + Σ ∂s_α/∂y^i ∂/∂p_α and ∂/∂q^β + Σ ∂s_α/∂q^β ∂/∂p_α.
inline Eigen::MatrixXd graph_frame(const ChartSpec& chart, const LeafForm& s, const Point& pt) {
  detail::ThickenedFrame fr{chart.dim_transverse(), chart.r};
  EvalEnv env = chart.env(pt);
  auto names = chart.coord_names();
  int cols = fr.two_k + fr.r;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(fr.dim(), cols);
  for (int c = 0; c < cols; ++c) {
    T(c, c) = 1.0;
    for (int a = 0; a < fr.r; ++a)
      T(fr.p(a), c) = s.at({a}).diff(names[c]).eval(env);
  }
  return T;
}

/// Direct linear-algebra coisotropy test: distance of (T Graph)^{ω_U} from
/// T Graph, maximized over the sample points.
inline double graph_coisotropy_defect(const ChartSpec& chart, const TransverseField& F,
                                      const LeafForm& s, const std::vector<Point>& pts) {
  double worst = 0.0;
  for (const auto& pt : pts) {
    EvalEnv env = chart.env(pt);
    ThickenedPoint tp;
    tp.base = pt;
    tp.p.resize(chart.r);
    for (int a = 0; a < chart.r; ++a) tp.p[a] = s.at({a}).eval(env);
    Eigen::MatrixXd M = omega_U_at(chart, F, tp);
    Eigen::MatrixXd T = graph_frame(chart, s, pt);
    Eigen::JacobiSVD<Eigen::MatrixXd> tsvd(T);
    if (tsvd.rank() < T.cols())
      throw ChartError("graph frame is rank deficient; invalid chart data");
    Eigen::MatrixXd B = T.transpose() * M;  // rows: ω_U(u_c, ·)
    Eigen::MatrixXd K = detail::null_space(B);
    worst = std::max(worst, detail::subspace_defect(K, T));
  }
  return worst;
}

/// Pointwise master-equation residual: the quadratic pairing of covariant
/// derivatives through ω̃^{-1} minus the leafwise differential,
///   E(s)_{αβ} = Σ_{ij} ∇_i s_α ω̃^{ij} ∇_j s_β - (d_F s)_{αβ},  α < β,
/// with ∇_i s_α = e_i(s_α) + s_β ∂R_i^β/∂q^α and ω̃_ij = ω_ij + s_β F^β_ij
/// the graph pairing of the lifted frame, inverted numerically.  The relative
/// orientation of the two terms is pinned by the SVD coisotropy oracle
/// (docs/signs.md).
inline double master_residual(const ChartSpec& chart, const TransverseField& F,
                              const LeafForm& s, const std::vector<Point>& pts) {
  int n2k = chart.dim_transverse();
  int r = chart.r;
  // Precompute symbolic ∇_i s_α once.
  std::vector<std::vector<Expr>> grad(n2k, std::vector<Expr>(r));
  for (int i = 0; i < n2k; ++i) {
    LeafForm ns = nabla(chart, s, i);
    for (int a = 0; a < r; ++a) grad[i][a] = ns.at({a});
  }
  LeafForm ds = d_F(chart, s);
  double worst = 0.0;
  for (const auto& pt : pts) {
    EvalEnv env = chart.env(pt);
    std::vector<double> sv(r);
    for (int a = 0; a < r; ++a) sv[a] = s.at({a}).eval(env);
    Eigen::MatrixXd wt = omega_tilde_at(chart, F, pt, sv);
    double det = wt.determinant();
    if (std::abs(det) < 1e-10)
      throw ChartError("omega~ singular along the section; rescale the section");
    Eigen::MatrixXd wti = wt.inverse();
    Eigen::MatrixXd G(n2k, r);
    for (int i = 0; i < n2k; ++i)
      for (int a = 0; a < r; ++a) G(i, a) = grad[i][a].eval(env);
    for (int a = 0; a < r; ++a)
      for (int b = a + 1; b < r; ++b) {
        double quad = G.col(a).dot(wti * G.col(b));
        double lin = ds.at({a, b}).eval(env);
        worst = std::max(worst, std::abs(quad - lin));
      }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Coisotropic Grassmannian
// ---------------------------------------------------------------------------

/// Graph data of a linear subspace C_A = {(x, Ax)} near the model coisotropic
/// subspace C = ℂ^k ⊕ ℝ^{n-k} of ℂ^n.  Real coordinates are ordered
/// (a_1..a_k, b_1..b_k | x_1..x_{n-k} | y_1..y_{n-k}) with z' = a + ib and
/// the last block spanning C^⊥ = i·ℝ^{n-k}.
struct GrassmannPoint {
  int n = 1, k = 0;
  Eigen::MatrixXd Ah;  // (n-k) x 2k
  Eigen::MatrixXd Ai;  // (n-k) x (n-k)
};

namespace detail {

inline Eigen::MatrixXd ambient_symplectic(int n, int k) {
  int m = n - k;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int i = 0; i < k; ++i) {
    J(i, k + i) = 1.0;  // ω(∂a_i, ∂b_i) = 1
    J(k + i, i) = -1.0;
  }
  for (int i = 0; i < m; ++i) {
    J(2 * k + i, 2 * k + m + i) = 1.0;  // ω(∂x_i, ∂y_i) = 1
    J(2 * k + m + i, 2 * k + i) = -1.0;
  }
  return J;
}

inline Eigen::MatrixXd grassmann_frame(const GrassmannPoint& gp) {
  int m = gp.n - gp.k;
  int cols = 2 * gp.k + m;
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(2 * gp.n, cols);
  for (int c = 0; c < cols; ++c) V(c, c) = 1.0;
  for (int row = 0; row < m; ++row) {
    for (int c = 0; c < 2 * gp.k; ++c) V(cols + row, c) = gp.Ah(row, c);
    for (int c = 0; c < m; ++c) V(cols + row, 2 * gp.k + c) = gp.Ai(row, c);
  }
  return V;
}

}  // namespace detail

/// Matrix identity A_I - A_I^T + A_H π_H A_H^T = 0 with π_H the inverse of the
/// index-lowering map of the ℂ^k block; returns (satisfied, Frobenius defect).
inline std::pair<bool, double> grassmann_is_coisotropic(const GrassmannPoint& gp,
                                                        double tol = 1e-10) {
  int m = gp.n - gp.k;
  // Varying the graph equation over the ℂ^k block gives w_H = J_H^{-1} A_H^T w_x,
  // so the middle factor is the inverse block J_H^{-1} = -J_H.
  Eigen::MatrixXd piH = Eigen::MatrixXd::Zero(2 * gp.k, 2 * gp.k);
  for (int i = 0; i < gp.k; ++i) {
    piH(i, gp.k + i) = -1.0;
    piH(gp.k + i, i) = 1.0;
  }
  Eigen::MatrixXd defect = gp.Ai - gp.Ai.transpose() + gp.Ah * piH * gp.Ah.transpose();
  double norm = m == 0 ? 0.0 : defect.norm();
  return {norm < tol, norm};
}

/// Brute-force oracle: assemble C_A, compute its symplectic orthogonal by
/// numeric linear algebra and test containment in C_A.
inline bool grassmann_is_coisotropic_bruteforce(const GrassmannPoint& gp, double tol = 1e-8) {
  Eigen::MatrixXd V = detail::grassmann_frame(gp);
  Eigen::MatrixXd J = detail::ambient_symplectic(gp.n, gp.k);
  Eigen::MatrixXd B = V.transpose() * J;
  Eigen::MatrixXd K = detail::null_space(B);
  return detail::subspace_defect(K, V) < tol;
}

/// dim Γ_k(R^{2n}, ω) = (n+3k+1)(n-k)/2, cross-checked by counting the free
/// parameters of the linearized graph condition at A = 0.
inline long grassmann_dimension(int n, int k) {
  if (k < 0 || k > n) throw std::invalid_argument("grassmann_dimension requires 0 <= k <= n");
  long formula = static_cast<long>(n + 3 * k + 1) * (n - k) / 2;
  int m = n - k;
  long params = static_cast<long>(m) * (n + k);
  // Linearization at A = 0: A_I - A_I^T = 0. Build the constraint matrix on
  // the full parameter space and count its rank.
  long rows = static_cast<long>(m) * m;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(rows, params);
  auto ai_col = [&](int r0, int c0) { return 2 * k * m + r0 * m + c0; };
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      long row = static_cast<long>(i) * m + j;
      L(row, ai_col(i, j)) += 1.0;
      L(row, ai_col(j, i)) -= 1.0;
    }
  long rank = 0;
  if (rows > 0 && params > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(L);
    const auto& sv = svd.singularValues();
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > 1e-10) ++rank;
  }
  long counted = params - rank;
  if (counted != formula)
    throw std::logic_error("grassmann dimension mismatch: formula " + std::to_string(formula) +
                           " vs rank count " + std::to_string(counted));
  return formula;
}

// ---------------------------------------------------------------------------
// Pullback identities
// ---------------------------------------------------------------------------

/// (a) max defect of s*θ_G = p_G^* s, computed through two code paths:
/// a genuine pullback of θ_G through the graph map versus the adjoint
/// formula s_β dq^β - s_β R_i^β dy^i.
inline double theta_pullback_defect_a(const ChartSpec& chart, const LeafForm& s,
                                      const std::vector<Point>& pts) {
  detail::ThickenedFrame fr{chart.dim_transverse(), chart.r};
  auto names = chart.coord_names();
  double worst = 0.0;
  for (const auto& pt : pts) {
    EvalEnv env = chart.env(pt);
    // θ_G components on U at the section image
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(fr.dim());
    for (int b = 0; b < chart.r; ++b) {
      double sb = s.at({b}).eval(env);
      theta(fr.q(b)) += sb;
      for (int i = 0; i < fr.two_k; ++i) theta(fr.y(i)) -= sb * chart.R[i][b].eval(env);
    }
    Eigen::MatrixXd T = graph_frame(chart, s, pt);  // columns: images of ∂y, ∂q
    Eigen::VectorXd pulled = T.transpose() * theta;
    for (int c = 0; c < fr.two_k + fr.r; ++c) {
      double adjoint;
      if (c < fr.two_k) {
        adjoint = 0.0;
        for (int b = 0; b < chart.r; ++b)
          adjoint -= s.at({b}).eval(env) * chart.R[c][b].eval(env);
      } else {
        adjoint = s.at({c - fr.two_k}).eval(env);
      }
      worst = std::max(worst, std::abs(pulled(c) - adjoint));
    }
  }
  return worst;
}

/// (b) max defect of s*ω_U = ω - d(p_G^*s), the exterior derivative taken by
/// Richardson-extrapolated central differences.
inline double theta_pullback_defect_b(const ChartSpec& chart, const TransverseField& F,
                                      const LeafForm& s, const std::vector<Point>& pts,
                                      double h = 1e-4) {
  detail::ThickenedFrame fr{chart.dim_transverse(), chart.r};
  auto names = chart.coord_names();
  int dimY = fr.two_k + fr.r;
  // components of p_G^* s as expressions
  std::vector<Expr> pg(dimY, Expr::integer(0));
  for (int i = 0; i < fr.two_k; ++i) {
    Expr acc = Expr::integer(0);
    for (int b = 0; b < chart.r; ++b) acc = acc - s.at({b}) * chart.R[i][b];
    pg[i] = acc;
  }
  for (int b = 0; b < chart.r; ++b) pg[fr.two_k + b] = s.at({b});

  double worst = 0.0;
  for (const auto& pt : pts) {
    EvalEnv env = chart.env(pt);
    // LHS: pullback of ω_U through the graph map
    ThickenedPoint tp;
    tp.base = pt;
    tp.p.resize(chart.r);
    for (int a = 0; a < chart.r; ++a) tp.p[a] = s.at({a}).eval(env);
    Eigen::MatrixXd M = omega_U_at(chart, F, tp);
    Eigen::MatrixXd T = graph_frame(chart, s, pt);
    Eigen::MatrixXd lhs = T.transpose() * M * T;

    // RHS: ω on Y minus finite-difference d(p_G^*s)
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(dimY, dimY);
    Eigen::MatrixXd w = chart.omega_at(pt);
    rhs.topLeftCorner(fr.two_k, fr.two_k) = w;
    auto comp_at = [&](int c, int coord, double eps) {
      EvalEnv e2 = env;
      e2[names[coord]] += eps;
      return pg[c].eval(e2);
    };
    for (int a = 0; a < dimY; ++a)
      for (int b = 0; b < dimY; ++b) {
        auto fd = [&](double step) {
          return (comp_at(b, a, step) - comp_at(b, a, -step)) / (2 * step);
        };
        double dab = (4.0 * fd(h / 2) - fd(h)) / 3.0;  // ∂_a (p_G^*s)_b
        rhs(a, b) -= dab;
        rhs(b, a) += dab;
      }
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Flat-case pre-Hamiltonian extension
// ---------------------------------------------------------------------------

/// Vector field data on Y: ξ = Σ xi_G^j (∂/∂y^j + R_j^α ∂/∂q^α) + Σ xi_E^α ∂/∂q^α.
struct PreHamiltonianField {
  std::vector<Expr> xi_G;  // size 2k
  std::vector<Expr> xi_E;  // size r
};

/// FD residual of d(ξ⌟ω) on Y (the locally pre-Hamiltonian condition).
inline double contraction_closedness_residual(const ChartSpec& chart,
                                              const PreHamiltonianField& xi,
                                              const std::vector<Point>& pts, double h = 1e-4) {
  int n2k = chart.dim_transverse();
  auto names = chart.coord_names();
  int dimY = chart.dim();
  // (ξ⌟ω)_j = xi_G^i ω_ij on dy^j; leaf components vanish.
  std::vector<Expr> comp(dimY, Expr::integer(0));
  for (int j = 0; j < n2k; ++j) {
    Expr acc = Expr::integer(0);
    for (int i = 0; i < n2k; ++i) acc = acc + xi.xi_G[i] * chart.omega[i][j];
    comp[j] = acc;
  }
  double worst = 0.0;
  for (const auto& pt : pts) {
    EvalEnv env = chart.env(pt);
    for (int a = 0; a < dimY; ++a)
      for (int b = a + 1; b < dimY; ++b) {
        auto d_of = [&](int cc, int coord, double step) {
          EvalEnv e2 = env;
          e2[names[coord]] += step;
          return comp[cc].eval(e2);
        };
        auto fd = [&](int cc, int coord, double step) {
          return (d_of(cc, coord, step) - d_of(cc, coord, -step)) / (2 * step);
        };
        double v = (4.0 * fd(b, a, h / 2) - fd(b, a, h)) / 3.0 -
                   ((4.0 * fd(a, b, h / 2) - fd(a, b, h)) / 3.0);
        worst = std::max(worst, std::abs(v));
      }
  }
  return worst;
}

/// Corollary-style flat extension Ξ = ξ_G^♯ + X_{f_ξ} with f_ξ(α) = ⟨α, ξ_E⟩;
/// returns max ‖L_Ξ ω_U‖ = max ‖d(Ξ⌟ω_U)‖ by finite differences over the
/// supplied thickened sample points.
inline double extend_prehamiltonian_flat(const ChartSpec& chart, const TransverseField& F,
                                         const PreHamiltonianField& xi,
                                         const std::vector<ThickenedPoint>& pts,
                                         double h = 1e-4) {
  // Preconditions: flat curvature, closed contraction.
  std::vector<Point> bases;
  for (const auto& tp : pts) bases.push_back(tp.base);
  if (F.max_abs_at(chart, bases) > 1e-12)
    throw ChartError("pre-Hamiltonian extension requires flat transverse curvature");
  if (contraction_closedness_residual(chart, xi, bases) > 1e-8)
    throw ChartError("field is not locally pre-Hamiltonian: d(xi . omega) != 0");

  detail::ThickenedFrame fr{chart.dim_transverse(), chart.r};
  auto names = chart.coord_names();

  // Ξ components at a thickened point.
  auto Xi_at = [&](const ThickenedPoint& tp) {
    EvalEnv env = detail::thickened_env(chart, tp);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(fr.dim());
    // lifted basis e_j = ∂y^j + R_j^α ∂q^α - p_β ∂R_j^β/∂q^ν ∂p_ν
    for (int j = 0; j < fr.two_k; ++j) {
      double c = xi.xi_G[j].eval(env);
      v(fr.y(j)) += c;
      for (int a = 0; a < fr.r; ++a) v(fr.q(a)) += c * chart.R[j][a].eval(env);
      for (int nu = 0; nu < fr.r; ++nu) {
        double acc = 0.0;
        for (int b = 0; b < fr.r; ++b)
          acc += tp.p[b] * chart.R[j][b].diff(chart.q_names[nu]).eval(env);
        v(fr.p(nu)) -= c * acc;
      }
    }
    // Hamiltonian field of f = p_α xi_E^α w.r.t. ω_U: solve M^T X = df.
    Eigen::VectorXd df = Eigen::VectorXd::Zero(fr.dim());
    for (int a = 0; a < fr.r; ++a) {
      double xe = xi.xi_E[a].eval(env);
      df(fr.p(a)) += xe;
      for (int c = 0; c < fr.two_k + fr.r; ++c)
        df(c) += tp.p[a] * xi.xi_E[a].diff(names[c]).eval(env);
    }
    Eigen::MatrixXd M = omega_U_at(chart, F, tp);
    v += M.transpose().fullPivLu().solve(df);
    return v;
  };

  // θ_Ξ = Ξ⌟ω_U; defect = max |dθ_Ξ| by Richardson central differences.
  auto theta_at = [&](ThickenedPoint tp) -> Eigen::VectorXd {
    Eigen::MatrixXd M = omega_U_at(chart, F, tp);
    return M.transpose() * Xi_at(tp);
  };
  auto shift = [&](ThickenedPoint tp, int coord, double eps) {
    if (coord < fr.two_k + fr.r) {
      tp.base[names[coord]] += eps;
    } else {
      tp.p[coord - fr.two_k - fr.r] += eps;
    }
    return tp;
  };
  double worst = 0.0;
  for (const auto& tp : pts) {
    std::vector<Eigen::VectorXd> d(fr.dim());
    for (int a = 0; a < fr.dim(); ++a) {
      auto fd = [&](double step) {
        return ((theta_at(shift(tp, a, step)) - theta_at(shift(tp, a, -step))) / (2 * step))
            .eval();
      };
      d[a] = (4.0 * fd(h / 2) - fd(h)) / 3.0;
    }
    for (int a = 0; a < fr.dim(); ++a)
      for (int b = a + 1; b < fr.dim(); ++b)
        worst = std::max(worst, std::abs(d[a](b) - d[b](a)));
  }
  return worst;
}

}  // namespace shla
