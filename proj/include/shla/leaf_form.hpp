#pragma once

#include <functional>
#include <vector>

#include "shla/chart.hpp"
#include "shla/multiindex.hpp"
#include "shla/transverse_field.hpp"

namespace shla {

/// Leafwise ℓ-form in the frame f*_α = dq^α - R^α_i dy^i.  Coefficients are
/// Exprs in (y,q), stored for strictly increasing leaf multi-indices.
class LeafForm {
public:
  LeafForm() = default;
  LeafForm(int r, int degree)
      : r_(r), degree_(degree), index_set_(combinations(r, degree)),
        coeff_(index_set_.size(), Expr::integer(0)) {}

  static LeafForm zero(int r, int degree) { return LeafForm(r, degree); }

  int r() const { return r_; }
  int degree() const { return degree_; }
  const std::vector<Index>& indices() const { return index_set_; }

  const Expr& coeff(int rank) const { return coeff_[rank]; }
  Expr& coeff(int rank) { return coeff_[rank]; }
  std::size_t size() const { return coeff_.size(); }

  const Expr& at(const Index& idx) const {
    int rank = combination_rank(index_set_, idx);
    if (rank < 0) throw ExprError("leaf form index out of range");
    return coeff_[rank];
  }
  void set(const Index& idx, const Expr& e) {
    int rank = combination_rank(index_set_, idx);
    if (rank < 0) throw ExprError("leaf form index out of range");
    coeff_[rank] = e;
  }

  /// Coefficient for an arbitrary (possibly unsorted) tuple, with sign.
  Expr signed_at(Index idx) const {
    int sign = permutation_sign(idx);
    if (sign == 0) return Expr::integer(0);
    std::sort(idx.begin(), idx.end());
    const Expr& c = at(idx);
    return sign == 1 ? c : -c;
  }

  bool is_structurally_zero() const {
    for (const auto& c : coeff_)
      if (!structurally_zero(c)) return false;
    return true;
  }

  LeafForm map(const std::function<Expr(const Expr&)>& f) const {
    LeafForm out(r_, degree_);
    for (std::size_t i = 0; i < coeff_.size(); ++i) out.coeff_[i] = f(coeff_[i]);
    return out;
  }

  friend LeafForm operator+(const LeafForm& a, const LeafForm& b) {
    LeafForm out(a.r_, a.degree_);
    for (std::size_t i = 0; i < out.coeff_.size(); ++i) out.coeff_[i] = a.coeff_[i] + b.coeff_[i];
    return out;
  }
  friend LeafForm operator-(const LeafForm& a, const LeafForm& b) {
    LeafForm out(a.r_, a.degree_);
    for (std::size_t i = 0; i < out.coeff_.size(); ++i) out.coeff_[i] = a.coeff_[i] - b.coeff_[i];
    return out;
  }
  friend LeafForm operator*(const Expr& s, const LeafForm& a) {
    LeafForm out(a.r_, a.degree_);
    for (std::size_t i = 0; i < out.coeff_.size(); ++i) out.coeff_[i] = s * a.coeff_[i];
    return out;
  }

  std::vector<double> eval(const ChartSpec& chart, const Point& p) const {
    EvalEnv e = chart.env(p);
    std::vector<double> out(coeff_.size());
    for (std::size_t i = 0; i < coeff_.size(); ++i) out[i] = coeff_[i].eval(e);
    return out;
  }

  double max_abs_at(const ChartSpec& chart, const std::vector<Point>& pts) const {
    double m = 0.0;
    for (const auto& p : pts)
      for (double v : eval(chart, p)) m = std::max(m, std::abs(v));
    return m;
  }

private:
  int r_ = 0;
  int degree_ = 0;
  std::vector<Index> index_set_;
  std::vector<Expr> coeff_;
};

/// Degrees above the leaf dimension carry no components and read as zero.
inline LeafForm wedge(const LeafForm& a, const LeafForm& b) {
  int r = a.r();
  int d = a.degree() + b.degree();
  LeafForm out(r, d);
  for (std::size_t t = 0; t < out.indices().size(); ++t) {
    const Index& target = out.indices()[t];
    Expr acc = Expr::integer(0);
    for (const auto& split : unshuffles(target, a.degree())) {
      Expr term = a.at(split.left) * b.at(split.right);
      acc = split.sign == 1 ? acc + term : acc - term;
    }
    out.coeff(t) = acc;
  }
  return out;
}

/// Interior product with ∂/∂q^α (0-based α).
inline LeafForm iota(int alpha, const LeafForm& xi) {
  if (xi.degree() == 0) throw ExprError("interior product needs degree >= 1");
  LeafForm out(xi.r(), xi.degree() - 1);
  for (std::size_t t = 0; t < out.indices().size(); ++t) {
    const Index& rest = out.indices()[t];
    Index merged;
    int sign = insert_index(rest, alpha, merged);
    if (sign == 0) continue;  // alpha already present
    const Expr& c = xi.at(merged);
    out.coeff(t) = sign == 1 ? c : -c;
  }
  return out;
}

/// Leafwise exterior derivative: (d_F ξ)_{γ0<...<γℓ} = Σ_a (-1)^a ∂ξ_{..ĝa..}/∂q^{γa}.
/// Top-degree input yields the empty zero form one degree up.
inline LeafForm d_F(const ChartSpec& chart, const LeafForm& xi) {
  LeafForm out(chart.r, xi.degree() + 1);
  for (std::size_t t = 0; t < out.indices().size(); ++t) {
    const Index& target = out.indices()[t];
    Expr acc = Expr::integer(0);
    for (std::size_t a = 0; a < target.size(); ++a) {
      Index rest;
      for (std::size_t b = 0; b < target.size(); ++b)
        if (b != a) rest.push_back(target[b]);
      Expr term = xi.at(rest).diff(chart.q_names[target[a]]);
      acc = (a % 2 == 0) ? acc + term : acc - term;
    }
    out.coeff(t) = acc;
  }
  return out;
}

/// The scalar operator e_i = ∂/∂y^i + R_i^γ ∂/∂q^γ.
inline Expr horizontal_derivative(const ChartSpec& chart, int i, const Expr& f) {
  Expr acc = f.diff(chart.y_names[i]);
  for (int g = 0; g < chart.r; ++g) acc = acc + chart.R[i][g] * f.diff(chart.q_names[g]);
  return acc;
}

/// Transverse covariant derivative ∇_i.  Degree 1:
/// (∇_i ξ)_α = e_i(ξ_α) + ξ_β ∂R_i^β/∂q^α, extended to degree ℓ as a
/// derivation acting on each slot.
inline LeafForm nabla(const ChartSpec& chart, const LeafForm& xi, int i) {
  LeafForm out(xi.r(), xi.degree());
  for (std::size_t t = 0; t < out.indices().size(); ++t) {
    const Index& idx = out.indices()[t];
    Expr acc = horizontal_derivative(chart, i, xi.coeff(t));
    for (std::size_t slot = 0; slot < idx.size(); ++slot) {
      int alpha = idx[slot];
      for (int beta = 0; beta < chart.r; ++beta) {
        Expr m = chart.R[i][beta].diff(chart.q_names[alpha]);
        if (m.is_zero()) continue;
        Index replaced = idx;
        replaced[slot] = beta;
        int sign = permutation_sign(replaced);
        if (sign == 0) continue;
        std::sort(replaced.begin(), replaced.end());
        Expr term = xi.at(replaced) * m;
        acc = sign == 1 ? acc + term : acc - term;
      }
    }
    out.coeff(t) = acc;
  }
  return out;
}

/// 2k x 2k matrix of leafwise forms of a common degree.
class MatrixLeafForm {
public:
  MatrixLeafForm() = default;
  MatrixLeafForm(int n, int r, int degree)
      : n_(n), entries_(n, std::vector<LeafForm>(n, LeafForm(r, degree))) {}

  int n() const { return n_; }
  int degree() const { return entries_.empty() ? 0 : entries_[0][0].degree(); }
  const LeafForm& operator()(int i, int j) const { return entries_[i][j]; }
  LeafForm& operator()(int i, int j) { return entries_[i][j]; }

  /// Entrywise wedge, matrix-product contraction.
  friend MatrixLeafForm operator*(const MatrixLeafForm& a, const MatrixLeafForm& b) {
    int r = a.entries_[0][0].r();
    MatrixLeafForm out(a.n_, r, a.degree() + b.degree());
    for (int i = 0; i < a.n_; ++i)
      for (int j = 0; j < a.n_; ++j) {
        LeafForm acc = LeafForm::zero(r, a.degree() + b.degree());
        for (int m = 0; m < a.n_; ++m) acc = acc + wedge(a.entries_[i][m], b.entries_[m][j]);
        out.entries_[i][j] = acc;
      }
    return out;
  }

private:
  int n_ = 0;
  std::vector<std::vector<LeafForm>> entries_;
};

/// F^#⌟ξ: entry (i,j) = Σ_α F^{αj}_i (ι_{∂/∂q^α} ξ) with raised curvature
/// F^{αj}_i = F^α_{ik} ω^{kj}, (ω^{kj}) the symbolic matrix inverse.
inline MatrixLeafForm fsharp_contract(const ChartSpec& chart, const TransverseField& F,
                                      const LeafForm& xi) {
  if (xi.degree() < 1) throw ExprError("fsharp contraction needs a form of degree >= 1");
  int n = chart.dim_transverse();
  auto winv = chart.omega_inverse_symbolic();
  MatrixLeafForm out(n, chart.r, xi.degree() - 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      LeafForm acc = LeafForm::zero(chart.r, xi.degree() - 1);
      for (int alpha = 0; alpha < chart.r; ++alpha) {
        Expr coeff = Expr::integer(0);
        for (int k2 = 0; k2 < n; ++k2) {
          if (k2 == i) continue;
          coeff = coeff + F.signed_at({i, k2}, alpha) * winv[k2][j];
        }
        if (coeff.is_zero()) continue;
        acc = acc + coeff * iota(alpha, xi);
      }
      out(i, j) = acc;
    }
  return out;
}

/// Numeric evaluation of a MatrixLeafForm of degree 0 (scalar entries).
inline Eigen::MatrixXd eval_scalar_matrix(const ChartSpec& chart, const MatrixLeafForm& M,
                                          const Point& p) {
  EvalEnv env = chart.env(p);
  Eigen::MatrixXd out(M.n(), M.n());
  for (int i = 0; i < M.n(); ++i)
    for (int j = 0; j < M.n(); ++j) out(i, j) = M(i, j).at({}).eval(env);
  return out;
}

}  // namespace shla
