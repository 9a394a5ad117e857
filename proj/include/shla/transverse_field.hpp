#pragma once

#include <vector>

#include "shla/chart.hpp"
#include "shla/multiindex.hpp"

namespace shla {

/// Λ^ℓ N*F ⊗ TF valued field: components B^β_{i1..iℓ} with strictly
/// increasing transverse indices, β ranging over leaf directions ∂/∂q^β.
class TransverseField {
public:
  TransverseField() = default;
  TransverseField(int two_k, int r, int degree)
      : two_k_(two_k), r_(r), degree_(degree), index_set_(combinations(two_k, degree)),
        coeff_(index_set_.size(), std::vector<Expr>(r, Expr::integer(0))) {}

  int two_k() const { return two_k_; }
  int r() const { return r_; }
  int degree() const { return degree_; }
  const std::vector<Index>& indices() const { return index_set_; }

  const std::vector<Expr>& at(const Index& idx) const {
    int rank = combination_rank(index_set_, idx);
    if (rank < 0) throw ExprError("transverse field index out of range");
    return coeff_[rank];
  }
  std::vector<Expr>& at(const Index& idx) {
    int rank = combination_rank(index_set_, idx);
    if (rank < 0) throw ExprError("transverse field index out of range");
    return coeff_[rank];
  }
  const std::vector<Expr>& comp(int rank) const { return coeff_[rank]; }
  std::vector<Expr>& comp(int rank) { return coeff_[rank]; }

  /// Component for an arbitrary tuple with antisymmetry sign.
  Expr signed_at(Index idx, int beta) const {
    int sign = permutation_sign(idx);
    if (sign == 0) return Expr::integer(0);
    std::sort(idx.begin(), idx.end());
    const Expr& c = at(idx)[beta];
    return sign == 1 ? c : -c;
  }

  bool is_structurally_zero() const {
    for (const auto& comp : coeff_)
      for (const auto& c : comp)
        if (!structurally_zero(c)) return false;
    return true;
  }

  friend TransverseField operator+(const TransverseField& a, const TransverseField& b) {
    TransverseField out(a.two_k_, a.r_, a.degree_);
    for (std::size_t t = 0; t < out.coeff_.size(); ++t)
      for (int beta = 0; beta < a.r_; ++beta)
        out.coeff_[t][beta] = a.coeff_[t][beta] + b.coeff_[t][beta];
    return out;
  }
  friend TransverseField operator-(const TransverseField& a, const TransverseField& b) {
    TransverseField out(a.two_k_, a.r_, a.degree_);
    for (std::size_t t = 0; t < out.coeff_.size(); ++t)
      for (int beta = 0; beta < a.r_; ++beta)
        out.coeff_[t][beta] = a.coeff_[t][beta] - b.coeff_[t][beta];
    return out;
  }
  friend TransverseField operator*(const Expr& s, const TransverseField& a) {
    TransverseField out(a.two_k_, a.r_, a.degree_);
    for (std::size_t t = 0; t < out.coeff_.size(); ++t)
      for (int beta = 0; beta < a.r_; ++beta) out.coeff_[t][beta] = s * a.coeff_[t][beta];
    return out;
  }

  double max_abs_at(const ChartSpec& chart, const std::vector<Point>& pts) const {
    double m = 0.0;
    for (const auto& p : pts) {
      EvalEnv e = chart.env(p);
      for (const auto& comp : coeff_)
        for (const auto& c : comp) m = std::max(m, std::abs(c.eval(e)));
    }
    return m;
  }

private:
  int two_k_ = 0;
  int r_ = 0;
  int degree_ = 0;
  std::vector<Index> index_set_;
  std::vector<std::vector<Expr>> coeff_;
};

/// F^β_ij = ∂R^β_j/∂y^i - ∂R^β_i/∂y^j + R^γ_i ∂R^β_j/∂q^γ - R^γ_j ∂R^β_i/∂q^γ.
inline TransverseField transverse_curvature(const ChartSpec& chart) {
  int n = chart.dim_transverse();
  TransverseField F(n, chart.r, 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      std::vector<Expr>& comp = F.at({i, j});
      for (int beta = 0; beta < chart.r; ++beta) {
        Expr acc = chart.R[j][beta].diff(chart.y_names[i]) -
                   chart.R[i][beta].diff(chart.y_names[j]);
        for (int g = 0; g < chart.r; ++g) {
          acc = acc + chart.R[i][g] * chart.R[j][beta].diff(chart.q_names[g]) -
                chart.R[j][g] * chart.R[i][beta].diff(chart.q_names[g]);
        }
        comp[beta] = acc;
      }
    }
  return F;
}

/// Lie derivative of the coefficient leaf field along the basic field
/// Y_j = ∂/∂y^j + R_j^γ ∂/∂q^γ:  [Y_j, B]^β = Y_j(B^β) - B^α ∂R_j^β/∂q^α.
inline std::vector<Expr> pi_lie_coeff(const ChartSpec& chart, int j,
                                      const std::vector<Expr>& comp) {
  std::vector<Expr> out(chart.r, Expr::integer(0));
  for (int beta = 0; beta < chart.r; ++beta) {
    Expr acc = comp[beta].diff(chart.y_names[j]);
    for (int g = 0; g < chart.r; ++g)
      acc = acc + chart.R[j][g] * comp[beta].diff(chart.q_names[g]);
    for (int alpha = 0; alpha < chart.r; ++alpha)
      acc = acc - comp[alpha] * chart.R[j][beta].diff(chart.q_names[alpha]);
    out[beta] = acc;
  }
  return out;
}

/// d^Π B = Σ_j dy^j ∧ L^Π_{Y_j} B on antisymmetric components.  Above the top
/// transverse degree the result carries no components and reads as zero.
inline TransverseField pi_differential(const ChartSpec& chart, const TransverseField& B) {
  int n = chart.dim_transverse();
  TransverseField out(n, chart.r, B.degree() + 1);
  for (std::size_t t = 0; t < out.indices().size(); ++t) {
    const Index& target = out.indices()[t];
    std::vector<Expr>& comp = out.comp(static_cast<int>(t));
    for (std::size_t a = 0; a < target.size(); ++a) {
      Index rest;
      for (std::size_t b = 0; b < target.size(); ++b)
        if (b != a) rest.push_back(target[b]);
      std::vector<Expr> lie = pi_lie_coeff(chart, target[a], B.at(rest));
      for (int beta = 0; beta < chart.r; ++beta)
        comp[beta] = (a % 2 == 0) ? comp[beta] + lie[beta] : comp[beta] - lie[beta];
    }
  }
  return out;
}

/// Vertical Lie bracket of coefficient fields: [u,v]^β = u^α ∂v^β/∂q^α - v^α ∂u^β/∂q^α.
inline std::vector<Expr> vertical_bracket(const ChartSpec& chart, const std::vector<Expr>& u,
                                          const std::vector<Expr>& v) {
  std::vector<Expr> out(chart.r, Expr::integer(0));
  for (int beta = 0; beta < chart.r; ++beta) {
    Expr acc = Expr::integer(0);
    for (int alpha = 0; alpha < chart.r; ++alpha)
      acc = acc + u[alpha] * v[beta].diff(chart.q_names[alpha]) -
            v[alpha] * u[beta].diff(chart.q_names[alpha]);
    out[beta] = acc;
  }
  return out;
}

/// [B,C]_Π as the signed unshuffle sum of vertical brackets of components.
/// This is the normalization for which (d^Π)² B = [F_Π, B]_Π holds in every
/// degree; the splitting transformation law then reads
/// F' = F + d^Π B + ½[B,B]_Π (derivation in docs/brackets.md).
inline TransverseField pi_bracket(const ChartSpec& chart, const TransverseField& B,
                                  const TransverseField& C) {
  int n = chart.dim_transverse();
  int l1 = B.degree(), l2 = C.degree();
  TransverseField out(n, chart.r, l1 + l2);
  for (std::size_t t = 0; t < out.indices().size(); ++t) {
    const Index& target = out.indices()[t];
    std::vector<Expr>& comp = out.comp(static_cast<int>(t));
    for (const auto& split : unshuffles(target, l1)) {
      std::vector<Expr> br = vertical_bracket(chart, B.at(split.left), C.at(split.right));
      for (int beta = 0; beta < chart.r; ++beta)
        comp[beta] = split.sign == 1 ? comp[beta] + br[beta] : comp[beta] - br[beta];
    }
  }
  return out;
}

/// New chart with splitting coefficients R' = R + B (degree-1 B).
inline ChartSpec splitting_transform(const ChartSpec& chart, const TransverseField& B) {
  if (B.degree() != 1) throw ExprError("splitting_transform expects a degree-1 field");
  ChartSpec out = chart;
  for (int i = 0; i < chart.dim_transverse(); ++i) {
    const std::vector<Expr>& comp = B.at({i});
    for (int beta = 0; beta < chart.r; ++beta) out.R[i][beta] = chart.R[i][beta] + comp[beta];
  }
  return out;
}

/// ρ_Π = (1/2k) F^β_ij ω^{ij} ∂/∂q^β with (ω^{ij}) the matrix inverse of
/// (ω_ij); symbolic for 2k <= 4.
inline TransverseField mean_curvature(const ChartSpec& chart) {
  auto F = transverse_curvature(chart);
  auto winv = chart.omega_inverse_symbolic();
  int n = chart.dim_transverse();
  TransverseField rho(n, chart.r, 0);
  std::vector<Expr>& comp = rho.at({});
  for (int beta = 0; beta < chart.r; ++beta) {
    Expr acc = Expr::integer(0);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        // Σ over all (i,j) = 2 Σ over i<j by antisymmetry of both factors.
        acc = acc + Expr::integer(2) * F.at({i, j})[beta] * winv[i][j];
      }
    comp[beta] = acc / Expr::integer(n);
  }
  return rho;
}

/// Pointwise ρ_Π for any 2k (numeric inverse).
inline std::vector<double> mean_curvature_at(const ChartSpec& chart, const TransverseField& F,
                                             const Point& p) {
  int n = chart.dim_transverse();
  Eigen::MatrixXd winv = chart.omega_inverse_at(p);
  EvalEnv e = chart.env(p);
  std::vector<double> rho(chart.r, 0.0);
  for (int beta = 0; beta < chart.r; ++beta) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) acc += 2.0 * F.at({i, j})[beta].eval(e) * winv(i, j);
    rho[beta] = acc / n;
  }
  return rho;
}

}  // namespace shla
