#pragma once

#include <optional>

#include "shla/linfty.hpp"
#include "shla/spectral.hpp"

namespace shla {

/// Formal deformation series Σ ε^k Γ_k of degree-1 leaf forms, orders
/// contiguous from 1.
struct DeformationSeries {
  std::vector<LeafForm> orders;  // orders[k-1] = Γ_k
};

struct ObstructionReport {
  int order = 0;
  LeafForm representative;                  // the closed degree-2 right-hand side
  std::function<double(const Point&)> profile;  // q-zero-mode y-profile
  double class_l2 = 0.0;
};

struct McResult {
  bool obstructed = false;
  DeformationSeries series;
  std::optional<ObstructionReport> report;
};

/// Kuranishi representative m₂(Γ₁, Γ₁); requires d_F Γ₁ ≈ 0.
inline LeafForm kuranishi(const LInftyContext& ctx, const LeafForm& gamma1,
                          double closed_tol = 1e-10) {
  auto pts = ctx.chart.sample_points(64);
  double closed = d_F(ctx.chart, gamma1).max_abs_at(ctx.chart, pts);
  if (closed > closed_tol)
    throw ExprError("kuranishi: input is not d_F-closed (residual " + std::to_string(closed) +
                    ")");
  return m2(ctx, gamma1, gamma1);
}

/// q-zero-mode y-profile of the top-degree coefficient of a degree-2 form
/// (the cohomology-class representative on torus charts).
inline double kuranishi_profile_at(const ChartSpec& chart, const LeafForm& rep,
                                   const Point& ypoint, int qres = 33) {
  if (chart.r != 2)
    throw ExprError("class profile extraction implemented for two-dimensional leaves");
  return fiber_average(chart, rep.at({0, 1}), ypoint, qres);
}

/// L² norm over the transverse torus of the q-zero-mode of a form, by grid
/// quadrature (exact for band-limited data below half the grid resolution).
inline double qzero_class_l2(const ChartSpec& chart, const LeafForm& form, int ygrid = 33,
                             int qres = 33) {
  auto names = chart.coord_names();
  long ycount = 1;
  for (int i = 0; i < chart.dim_transverse(); ++i) ycount *= ygrid;
  double acc = 0.0;
  std::vector<int> g(chart.dim_transverse(), 0);
  for (long flat = 0; flat < ycount; ++flat) {
    long rem = flat;
    for (int d = chart.dim_transverse() - 1; d >= 0; --d) {
      g[d] = static_cast<int>(rem % ygrid);
      rem /= ygrid;
    }
    Point y;
    for (int d = 0; d < chart.dim_transverse(); ++d) {
      double period = chart.periods.at(names[d]) ? *chart.periods.at(names[d]) : 1.0;
      y[names[d]] = period * g[d] / ygrid;
    }
    for (std::size_t rank = 0; rank < form.size(); ++rank) {
      double avg = fiber_average(chart, form.coeff(static_cast<int>(rank)), y, qres);
      acc += avg * avg;
    }
  }
  return std::sqrt(acc / static_cast<double>(ycount));
}

namespace detail {

/// Order-k part of Σ_{ℓ>=2} (1/ℓ!) m_ℓ(Γ,...,Γ): compositions of k into ℓ
/// parts over the available orders.
inline LeafForm mc_rhs_order(const LInftyContext& ctx, const std::vector<LeafForm>& orders,
                             const std::vector<bool>& is_zero, int k) {
  LeafForm rhs(ctx.chart.r, 2);
  int max_len = k;
  std::vector<int> parts;
  std::function<void(int, int)> recurse = [&](int remaining, int min_part) {
    int len = static_cast<int>(parts.size());
    if (remaining == 0) {
      if (len < 2 || len > max_len) return;
      bool zero = false;
      for (int p : parts)
        zero = zero || p > static_cast<int>(orders.size()) || is_zero[p - 1];
      if (zero) return;  // orders beyond the stored series are implicit zeros
      // multiplicity of this multiset among ordered ℓ-tuples
      std::map<int, int> mult;
      for (int p : parts) ++mult[p];
      Rational count(1);
      for (int i = 2; i <= len; ++i) count = count * Rational(i);  // ℓ!
      for (auto& [v, c] : mult)
        for (int i = 2; i <= c; ++i) count = count / Rational(i);
      Rational lfact(1);
      for (int i = 2; i <= len; ++i) lfact = lfact * Rational(i);
      std::vector<LeafForm> args;
      for (int p : parts) args.push_back(orders[p - 1]);
      LeafForm term = m_ell(ctx, args);
      rhs = rhs + Expr::constant(count / lfact) * term;
      return;
    }
    if (len >= max_len) return;
    for (int p = min_part; p <= remaining; ++p) {
      parts.push_back(p);
      recurse(remaining - p, p);
      parts.pop_back();
    }
  };
  recurse(k, 1);
  return rhs;
}

}  // namespace detail

/// Inductive Maurer-Cartan solver on torus charts.  At each order k >= 2 the
/// equation m₁(Γ_k) + RHS_k = 0 (i.e. d_F Γ_k = RHS_k) is solved spectrally;
/// a nonvanishing q-zero-mode of the right-hand side is the obstruction class
/// and aborts with a report.
inline McResult mc_solve(const LInftyContext& ctx, const LeafForm& gamma1, int max_order,
                         int truncation = 16, double tol = 1e-9) {
  const ChartSpec& chart = ctx.chart;
  for (const auto& name : chart.coord_names())
    if (!chart.periods.at(name))
      throw ChartError("mc_solve needs a torus chart (inverting d_F uses the spectral "
                       "model); coordinate '" + name + "' is not periodic");
  auto pts = chart.sample_points(64);
  if (d_F(chart, gamma1).max_abs_at(chart, pts) > 1e-10)
    throw ExprError("mc_solve: Γ₁ must be d_F-closed");

  McResult out;
  out.series.orders.push_back(gamma1);
  std::vector<bool> is_zero = {gamma1.max_abs_at(chart, pts) < tol};

  for (int k = 2; k <= max_order; ++k) {
    LeafForm rhs = detail::mc_rhs_order(ctx, out.series.orders, is_zero, k);

    // fast path: the order contributes nothing
    if (rhs.max_abs_at(chart, pts) < tol) {
      out.series.orders.push_back(LeafForm(chart.r, 1));
      is_zero.push_back(true);
      continue;
    }

    // the L∞ relations force closedness of the right-hand side; a failure
    // here signals an implementation sign error, not bad user input
    double closed = d_F(chart, rhs).max_abs_at(chart, pts);
    if (closed > tol)
      throw ExprError("mc_solve: order-" + std::to_string(k) +
                      " right-hand side is not closed (residual " + std::to_string(closed) +
                      "); this indicates an internal sign defect, not a bad input");

    // the q-zero-mode of the right-hand side is the obstruction class; test it
    // by quadrature before paying for the full spectral transform
    double class_l2 = qzero_class_l2(chart, rhs);
    if (class_l2 > tol) {
      ObstructionReport rep;
      rep.order = k;
      rep.representative = rhs;
      rep.class_l2 = class_l2;
      ChartSpec chart_copy = chart;
      LeafForm rhs_copy = rhs;
      rep.profile = [chart_copy, rhs_copy](const Point& y) {
        return kuranishi_profile_at(chart_copy, rhs_copy, y);
      };
      out.obstructed = true;
      out.report = rep;
      return out;
    }

    // equation: -d_F Γ_k + RHS_k = 0, so solve d_F Γ_k = RHS_k.
    SpectralForm eta = to_spectral(chart, Expr::integer(-1) * rhs, truncation);
    DFSolveResult sol = solve_dF(chart, eta, tol);
    if (sol.obstructed)
      throw ExprError("mc_solve: spectral solver re-detected an obstruction the quadrature "
                      "pre-check missed; truncation too small for this input");
    out.series.orders.push_back(spectral_to_leafform(chart, sol.primitive));
    is_zero.push_back(false);
  }
  return out;
}

/// Max-norm over sample points of the ε-expansion of Σ (1/ℓ!) m_ℓ(Γ,…,Γ)
/// through the given order.
inline double mc_residual(const LInftyContext& ctx, const DeformationSeries& series,
                          int max_order, const std::vector<Point>& pts) {
  const ChartSpec& chart = ctx.chart;
  std::vector<bool> is_zero;
  for (const auto& g : series.orders) is_zero.push_back(g.max_abs_at(chart, pts) == 0.0);
  double worst = 0.0;
  for (int k = 1; k <= max_order; ++k) {
    LeafForm coeff = detail::mc_rhs_order(ctx, series.orders, is_zero, k);
    if (k <= static_cast<int>(series.orders.size()))
      coeff = coeff + m1(ctx, series.orders[k - 1]);
    worst = std::max(worst, coeff.max_abs_at(chart, pts));
  }
  return worst;
}

/// Non-formal evaluation of the twisted constant term Σ (1/ℓ!) m_ℓ(Γ̂,…,Γ̂)
/// at Γ̂ = 2εΓ, halved — under the frozen normalization this equals the
/// master-equation residual of the genuine section s = εΓ (docs/signs.md).
/// The curvature chain is summed until the bound on the tail drops below
/// 1e-12; a contraction factor >= 1 aborts (the series radius is exceeded).
inline double twisted_m0_residual(const LInftyContext& ctx, const LeafForm& gamma, double eps,
                                  const std::vector<Point>& pts) {
  const ChartSpec& chart = ctx.chart;
  int n = chart.dim_transverse();
  int r = chart.r;
  // symbolic pieces of Γ̂ = 2εΓ evaluated pointwise
  std::vector<std::vector<Expr>> grad(n, std::vector<Expr>(r));
  for (int i = 0; i < n; ++i) {
    LeafForm ns = nabla(chart, gamma, i);
    for (int a = 0; a < r; ++a) grad[i][a] = ns.at({a});
  }
  LeafForm dg = d_F(chart, gamma);
  double worst = 0.0;
  for (const auto& p : pts) {
    EvalEnv e = chart.env(p);
    double scale = 2.0 * eps;
    Eigen::MatrixXd W = chart.omega_inverse_at(p);
    Eigen::MatrixXd G(n, r);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < r; ++a) G(i, a) = scale * grad[i][a].eval(e);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);  // F⌟Γ̂
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int b = 0; b < r; ++b)
          acc += scale * gamma.at({b}).eval(e) * ctx.F.signed_at({i, j}, b).eval(e);
        B(i, j) = acc;
      }
    Eigen::MatrixXd ratio = -0.5 * B * W;  // successive chain factor
    double rho = ratio.cwiseAbs().rowwise().sum().maxCoeff();
    if (rho >= 1.0)
      throw ExprError("twisted m0: curvature chain does not converge at this scale "
                      "(contraction factor " + std::to_string(rho) + ")");
    for (int a = 0; a < r; ++a)
      for (int b = a + 1; b < r; ++b) {
        // Σ_{ℓ>=2} (1/ℓ!) m_ℓ diagonal = ½ Σ_t G_a^T W (-BW/2)^t G_b
        Eigen::MatrixXd chainW = W;
        double total = -scale * dg.at({a, b}).eval(e);
        double gnorm = G.col(a).norm() * G.col(b).norm() * W.norm();
        for (int t = 0;; ++t) {
          total += 0.5 * G.col(a).dot(chainW * G.col(b));
          double tail = 0.5 * gnorm * std::pow(rho, t + 1) / (1.0 - rho);
          if (tail < 1e-12) break;
          if (t > 400)
            throw ExprError("twisted m0: curvature chain failed to converge");
          chainW = chainW * ratio;
        }
        worst = std::max(worst, std::abs(0.5 * total));
      }
  }
  return worst;
}

}  // namespace shla
