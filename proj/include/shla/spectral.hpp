#pragma once

#include <complex>
#include <cstdio>
#include <vector>

#include "shla/leaf_form.hpp"

namespace shla {

/// Truncated Fourier representation of a leafwise form on a torus chart:
/// per antisymmetric component, complex coefficients indexed by integer
/// frequency vectors over all 2k+r coordinates with |m|_∞ <= N.
class SpectralForm {
public:
  SpectralForm() = default;
  SpectralForm(const ChartSpec& chart, int degree, int truncation)
      : two_k_(chart.dim_transverse()), r_(chart.r), degree_(degree), N_(truncation),
        index_set_(combinations(chart.r, degree)) {
    dims_ = two_k_ + r_;
    G_ = 2 * N_ + 1;
    std::size_t total = 1;
    for (int d = 0; d < dims_; ++d) total *= G_;
    modes_.assign(index_set_.size(), std::vector<std::complex<double>>(total, 0.0));
  }

  int degree() const { return degree_; }
  int truncation() const { return N_; }
  int grid_per_axis() const { return G_; }
  int dims() const { return dims_; }
  const std::vector<Index>& indices() const { return index_set_; }
  std::size_t mode_count() const { return modes_.empty() ? 0 : modes_[0].size(); }

  std::vector<std::complex<double>>& component(int rank) { return modes_[rank]; }
  const std::vector<std::complex<double>>& component(int rank) const { return modes_[rank]; }

  int component_rank(const Index& idx) const { return combination_rank(index_set_, idx); }

  /// Frequency vector of a flat mode index, entries in [-N, N].
  std::vector<int> freq_of(std::size_t flat) const {
    std::vector<int> m(dims_);
    for (int d = dims_ - 1; d >= 0; --d) {
      m[d] = static_cast<int>(flat % G_) - N_;
      flat /= G_;
    }
    return m;
  }
  std::size_t flat_of(const std::vector<int>& m) const {
    std::size_t flat = 0;
    for (int d = 0; d < dims_; ++d) flat = flat * G_ + static_cast<std::size_t>(m[d] + N_);
    return flat;
  }

  double max_mode_abs() const {
    double worst = 0.0;
    for (const auto& comp : modes_)
      for (const auto& c : comp) worst = std::max(worst, std::abs(c));
    return worst;
  }

  /// L² norm of the q-zero-mode part (Parseval, unit torus volume).
  double qzero_l2() const {
    double acc = 0.0;
    for (const auto& comp : modes_)
      for (std::size_t t = 0; t < comp.size(); ++t) {
        auto m = freq_of(t);
        bool qzero = true;
        for (int d = two_k_; d < dims_; ++d) qzero = qzero && m[d] == 0;
        if (qzero) acc += std::norm(comp[t]);
      }
    return std::sqrt(acc);
  }

  /// Zero out (or keep only) the q-zero modes.
  SpectralForm qzero_part(bool keep) const {
    SpectralForm out = *this;
    for (auto& comp : out.modes_)
      for (std::size_t t = 0; t < comp.size(); ++t) {
        auto m = out.freq_of(t);
        bool qzero = true;
        for (int d = out.two_k_; d < out.dims_; ++d) qzero = qzero && m[d] == 0;
        if (qzero != keep) comp[t] = 0.0;
      }
    return out;
  }

  int two_k() const { return two_k_; }
  int r() const { return r_; }

private:
  int two_k_ = 0, r_ = 0, degree_ = 0, N_ = 0, dims_ = 0, G_ = 1;
  std::vector<Index> index_set_;
  std::vector<std::vector<std::complex<double>>> modes_;
};

namespace detail {

/// In-place separable forward DFT (grid values -> normalized modes).
inline void forward_dft(std::vector<std::complex<double>>& data, int dims, int G) {
  std::vector<std::complex<double>> twiddle(G);
  for (int t = 0; t < G; ++t)
    twiddle[t] = std::exp(std::complex<double>(0.0, -2.0 * M_PI * t / G));
  std::size_t total = data.size();
  std::vector<std::complex<double>> scratch(G);
  std::size_t stride = 1;
  for (int axis = dims - 1; axis >= 0; --axis) {
    std::size_t outer = total / (stride * G);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t s = 0; s < stride; ++s) {
        std::size_t base = o * stride * G + s;
        for (int m = 0; m < G; ++m) {
          std::complex<double> acc = 0.0;
          int shift = m - (G - 1) / 2;  // modes stored from -N to N
          for (int g = 0; g < G; ++g) {
            int t = static_cast<int>((static_cast<long long>(shift) * g % G + G) % G);
            acc += data[base + g * stride] * twiddle[t];
          }
          scratch[m] = acc / static_cast<double>(G);
        }
        for (int m = 0; m < G; ++m) data[base + m * stride] = scratch[m];
      }
    stride *= G;
  }
}

}  // namespace detail

/// Sample a symbolic leaf form on the (2N+1)^{2k+r} grid and transform to
/// Fourier modes.  Requires every chart coordinate to be periodic.
inline SpectralForm to_spectral(const ChartSpec& chart, const LeafForm& xi, int N) {
  for (const auto& name : chart.coord_names()) {
    auto it = chart.periods.find(name);
    if (it == chart.periods.end() || !it->second)
      throw ChartError("spectral representation needs a fully periodic chart (coordinate '" +
                       name + "' is not periodic)");
  }
  SpectralForm out(chart, xi.degree(), N);
  int G = out.grid_per_axis();
  int dims = out.dims();
  auto names = chart.coord_names();
  std::vector<double> slots(dims);
  for (std::size_t rank = 0; rank < xi.size(); ++rank) {
    // bind chart parameters before compiling
    std::map<std::string, Expr> params;
    for (const auto& [pname, pval] : chart.params) params[pname] = Expr::constant(pval);
    CompiledExpr ce(xi.coeff(static_cast<int>(rank)).substitute(params), names);
    auto& data = out.component(static_cast<int>(rank));
    std::vector<int> g(dims, 0);
    for (std::size_t flat = 0; flat < data.size(); ++flat) {
      std::size_t rem = flat;
      for (int d = dims - 1; d >= 0; --d) {
        g[d] = static_cast<int>(rem % G);
        rem /= G;
      }
      for (int d = 0; d < dims; ++d) {
        double period = *chart.periods.at(names[d]);
        slots[d] = period * g[d] / G;
      }
      data[flat] = ce.eval(slots.data());
    }
    detail::forward_dft(data, dims, G);
  }
  return out;
}

/// Evaluate a spectral form component at a point (mode sum).
inline double spectral_eval(const ChartSpec& chart, const SpectralForm& sf, int rank,
                            const Point& p) {
  auto names = chart.coord_names();
  std::vector<double> x(sf.dims());
  Point rp = chart.reduce(p);
  for (int d = 0; d < sf.dims(); ++d) {
    double period = *chart.periods.at(names[d]);
    x[d] = rp.at(names[d]) / period;
  }
  const auto& comp = sf.component(rank);
  std::complex<double> acc = 0.0;
  for (std::size_t t = 0; t < comp.size(); ++t) {
    if (comp[t] == std::complex<double>(0.0)) continue;
    auto m = sf.freq_of(t);
    double phase = 0.0;
    for (int d = 0; d < sf.dims(); ++d) phase += m[d] * x[d];
    acc += comp[t] * std::exp(std::complex<double>(0.0, 2.0 * M_PI * phase));
  }
  return acc.real();
}

/// d_F on modes: (d_F ξ)_{γ0<...<γl} = Σ_a (-1)^a (2πi n_{γa}) ξ_{..ĝa..}.
inline SpectralForm spectral_d_F(const ChartSpec& chart, const SpectralForm& xi) {
  SpectralForm out(chart, xi.degree() + 1, xi.truncation());
  for (std::size_t t = 0; t < out.indices().size(); ++t) {
    const Index& target = out.indices()[t];
    auto& comp = out.component(static_cast<int>(t));
    for (std::size_t a = 0; a < target.size(); ++a) {
      Index rest;
      for (std::size_t b = 0; b < target.size(); ++b)
        if (b != a) rest.push_back(target[b]);
      int src = xi.component_rank(rest);
      const auto& in = xi.component(src);
      double sgn = (a % 2 == 0) ? 1.0 : -1.0;
      for (std::size_t f = 0; f < in.size(); ++f) {
        if (in[f] == std::complex<double>(0.0)) continue;
        auto m = xi.freq_of(f);
        int n = m[xi.two_k() + target[a]];
        comp[f] += sgn * std::complex<double>(0.0, 2.0 * M_PI * n) * in[f];
      }
    }
  }
  return out;
}

struct DFSolveResult {
  bool obstructed = false;
  SpectralForm primitive;     // Γ with d_F Γ = -η (zero q-zero-mode gauge)
  SpectralForm obstruction;   // q-zero-mode part of η
  double class_l2 = 0.0;      // L² norm of the obstruction class profile
};

/// Solve d_F Γ = -η for a closed degree-2 spectral form η on a torus chart.
/// Every mode with a nonzero q-frequency is exactly solvable; the q-zero
/// modes are the cohomology and are reported as the obstruction when present.
inline DFSolveResult solve_dF(const ChartSpec& chart, const SpectralForm& eta,
                              double tol = 1e-10) {
  if (eta.degree() != 2) throw ExprError("solve_dF expects a degree-2 form");
  // closedness: alt(n ⊗ η) must vanish modewise
  if (eta.degree() < chart.r) {
    SpectralForm deta = spectral_d_F(chart, eta);
    if (deta.max_mode_abs() > tol)
      throw ExprError("solve_dF: right-hand side is not d_F-closed (residual " +
                      std::to_string(deta.max_mode_abs()) + ")");
  }
  DFSolveResult res;
  res.obstruction = eta.qzero_part(true);
  res.class_l2 = eta.qzero_l2();
  if (res.class_l2 > tol) {
    res.obstructed = true;
    return res;
  }
  SpectralForm gamma(chart, 1, eta.truncation());
  int r = chart.r;
  for (std::size_t f = 0; f < eta.mode_count(); ++f) {
    auto m = eta.freq_of(f);
    double n2 = 0.0;
    for (int a = 0; a < r; ++a) {
      double na = m[eta.two_k() + a];
      n2 += na * na;
    }
    if (n2 == 0.0) continue;  // zero-mode part already below tol
    // Γ_β = Σ_γ n_γ c_{γβ} / |n|²  with  c_{αβ} = -η_{αβ}/(2πi)
    for (int beta = 0; beta < r; ++beta) {
      std::complex<double> acc = 0.0;
      for (int gamma_i = 0; gamma_i < r; ++gamma_i) {
        if (gamma_i == beta) continue;
        Index idx = {std::min(gamma_i, beta), std::max(gamma_i, beta)};
        int rank = eta.component_rank(idx);
        std::complex<double> c = eta.component(rank)[f];
        if (gamma_i > beta) c = -c;
        c = -c / std::complex<double>(0.0, 2.0 * M_PI);
        acc += static_cast<double>(m[eta.two_k() + gamma_i]) * c;
      }
      gamma.component(beta)[f] = acc / n2;
    }
  }
  res.primitive = gamma;
  return res;
}

/// Sparse reconstruction of a spectral form as a trigonometric polynomial.
/// Coefficients become rational approximants with error below 1e-24, far
/// under the solver tolerances.
inline LeafForm spectral_to_leafform(const ChartSpec& chart, const SpectralForm& sf,
                                     double drop_tol = 1e-13,
                                     std::size_t max_terms = 4096) {
  auto names = chart.coord_names();
  LeafForm out(chart.r, sf.degree());
  auto to_expr = [&](double v) { return Expr::constant(Rational::approximate(v)); };
  for (std::size_t rank = 0; rank < out.size(); ++rank) {
    Expr acc = Expr::integer(0);
    std::size_t terms = 0;
    const auto& comp = sf.component(static_cast<int>(rank));
    for (std::size_t f = 0; f < comp.size(); ++f) {
      if (std::abs(comp[f]) <= drop_tol) continue;
      auto m = sf.freq_of(f);
      // canonical half-space: first nonzero frequency positive
      int lead = 0;
      for (int d = 0; d < sf.dims(); ++d)
        if (m[d] != 0) {
          lead = m[d];
          break;
        }
      if (lead < 0) continue;  // conjugate partner handles it
      if (++terms > max_terms)
        throw ExprError("spectral form too dense for symbolic reconstruction; "
                        "raise the drop tolerance or lower the truncation");
      if (lead == 0) {
        acc = acc + to_expr(comp[f].real());
        continue;
      }
      Expr phase = Expr::integer(0);
      for (int d = 0; d < sf.dims(); ++d) {
        if (m[d] == 0) continue;
        double period = *chart.periods.at(names[d]);
        Expr unit = Expr::symbol(names[d]);
        if (period != 1.0) unit = unit / to_expr(period);
        phase = phase + Expr::integer(m[d]) * unit;
      }
      phase = Expr::integer(2) * Expr::pi() * phase;
      acc = acc + to_expr(2.0 * comp[f].real()) * cos(phase) -
            to_expr(2.0 * comp[f].imag()) * sin(phase);
    }
    out.coeff(static_cast<int>(rank)) = acc;
  }
  return out;
}

/// Fiber integration over the leaf torus: the q-average of a coefficient as a
/// function of the transverse point.  Exact for band-limited integrands once
/// qres exceeds twice the band.
inline double fiber_average(const ChartSpec& chart, const Expr& coeff, const Point& ypoint,
                            int qres = 33) {
  std::map<std::string, Expr> params;
  for (const auto& [pname, pval] : chart.params) params[pname] = Expr::constant(pval);
  auto names = chart.coord_names();
  CompiledExpr ce(coeff.substitute(params), names);
  std::vector<double> slots(names.size());
  Point rp = chart.reduce(ypoint);
  for (std::size_t d = 0; d < names.size(); ++d) {
    auto it = rp.find(names[d]);
    slots[d] = it == rp.end() ? 0.0 : it->second;
  }
  long count = 1;
  for (int a = 0; a < chart.r; ++a) count *= qres;
  double acc = 0.0;
  std::vector<int> g(chart.r, 0);
  for (long flat = 0; flat < count; ++flat) {
    long rem = flat;
    for (int a = chart.r - 1; a >= 0; --a) {
      g[a] = static_cast<int>(rem % qres);
      rem /= qres;
    }
    for (int a = 0; a < chart.r; ++a) {
      const std::string& qn = chart.q_names[a];
      double period = chart.periods.at(qn) ? *chart.periods.at(qn) : 1.0;
      slots[chart.dim_transverse() + a] = period * g[a] / qres;
    }
    acc += ce.eval(slots.data());
  }
  return acc / static_cast<double>(count);
}

}  // namespace shla
