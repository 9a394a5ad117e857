#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shla/expr.hpp"
#include "shla/sampling.hpp"

namespace shla {

/// Named coordinate values.  For evaluation, periodic coordinates are reduced
/// modulo their period by the owning chart.
using Point = std::map<std::string, double>;

class ChartError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A pre-symplectic foliation chart: transverse coordinates y^1..y^{2k} with a
/// closed nondegenerate ω_ij(y), leaf coordinates q^1..q^r, and a splitting
/// given by coefficients R_i^α(y,q).
class ChartSpec {
public:
  int k = 0;  // half transverse rank
  int r = 1;  // leaf dimension

  std::vector<std::string> y_names;
  std::vector<std::string> q_names;
  std::map<std::string, std::optional<double>> periods;
  // Sampling interval per coordinate; defaults to [0, period) or [0, 1).
  std::map<std::string, std::pair<double, double>> domains;

  std::vector<std::vector<Expr>> omega;  // 2k x 2k, entries ω_ij(y)
  std::vector<std::vector<Expr>> R;      // 2k x r, entries R_i^α(y,q)
  std::map<std::string, Rational> params;

  std::string name = "chart";

  int dim_transverse() const { return 2 * k; }
  int dim_leaf() const { return r; }
  int dim() const { return 2 * k + r; }

  std::vector<std::string> coord_names() const {
    std::vector<std::string> names = y_names;
    names.insert(names.end(), q_names.begin(), q_names.end());
    return names;
  }

  std::pair<double, double> domain_of(const std::string& coord) const {
    auto it = domains.find(coord);
    if (it != domains.end()) return it->second;
    auto p = periods.find(coord);
    if (p != periods.end() && p->second) return {0.0, *p->second};
    return {0.0, 1.0};
  }

  Point reduce(Point p) const {
    for (auto& [name, value] : p) {
      auto it = periods.find(name);
      if (it != periods.end() && it->second) {
        double period = *it->second;
        value -= period * std::floor(value / period);
      }
    }
    return p;
  }

  EvalEnv env(const Point& p) const {
    EvalEnv e;
    for (const auto& [name, value] : reduce(p)) e[name] = value;
    for (const auto& [name, value] : params)
      if (!e.count(name)) e[name] = value.to_double();
    return e;
  }

  Point sample_point(WeylSampler& sampler) const {
    auto u = sampler.next();
    Point p;
    auto names = coord_names();
    for (std::size_t d = 0; d < names.size(); ++d) {
      auto [lo, hi] = domain_of(names[d]);
      p[names[d]] = lo + u[d] * (hi - lo);
    }
    return p;
  }

  std::vector<Point> sample_points(int count, std::uint64_t skip = 0) const {
    WeylSampler sampler(dim(), skip);
    std::vector<Point> pts;
    pts.reserve(count);
    for (int i = 0; i < count; ++i) pts.push_back(sample_point(sampler));
    return pts;
  }

  Eigen::MatrixXd omega_at(const Point& p) const {
    EvalEnv e = env(p);
    int n = dim_transverse();
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = omega[i][j].eval(e);
    return m;
  }

  /// Exact numeric inverse of (ω_ij) at p; throws on |det| < 1e-12.
  Eigen::MatrixXd omega_inverse_at(const Point& p) const {
    Eigen::MatrixXd m = omega_at(p);
    double det = m.determinant();
    if (std::abs(det) < 1e-12)
      throw ChartError("omega is singular at sample point (|det| = " + std::to_string(det) + ")");
    return m.inverse();
  }

  /// Symbolic inverse via adjugate/determinant; supported for 2k <= 4.
  std::vector<std::vector<Expr>> omega_inverse_symbolic() const;

  void validate(int sample_count = 64) const;
};

// ---------------------------------------------------------------------------

inline std::vector<std::vector<Expr>> ChartSpec::omega_inverse_symbolic() const {
  int n = dim_transverse();
  if (n > 4) throw ChartError("symbolic omega inverse supported only for 2k <= 4");
  std::vector<std::vector<Expr>> inv(n, std::vector<Expr>(n));
  if (n == 2) {
    Expr det = omega[0][0] * omega[1][1] - omega[0][1] * omega[1][0];
    inv[0][0] = omega[1][1] / det;
    inv[0][1] = -omega[0][1] / det;
    inv[1][0] = -omega[1][0] / det;
    inv[1][1] = omega[0][0] / det;
    return inv;
  }
  // n == 4: cofactor expansion.
  auto minor3 = [&](int row, int col) {
    std::vector<int> rows, cols;
    for (int i = 0; i < n; ++i)
      if (i != row) rows.push_back(i);
    for (int j = 0; j < n; ++j)
      if (j != col) cols.push_back(j);
    Expr det = Expr::integer(0);
    // 3x3 determinant by Sarrus
    auto& a = omega;
    auto e = [&](int i, int j) { return a[rows[i]][cols[j]]; };
    det = e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) -
          e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0)) +
          e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
    return det;
  };
  Expr det = Expr::integer(0);
  for (int j = 0; j < n; ++j) {
    Expr term = omega[0][j] * minor3(0, j);
    det = (j % 2 == 0) ? det + term : det - term;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Expr cof = minor3(j, i);
      inv[i][j] = ((i + j) % 2 == 0) ? cof / det : -cof / det;
    }
  return inv;
}

inline void ChartSpec::validate(int sample_count) const {
  int n2k = dim_transverse();
  if (static_cast<int>(omega.size()) != n2k)
    throw ChartError("omega must be a 2k x 2k array");
  for (const auto& row : omega)
    if (static_cast<int>(row.size()) != n2k) throw ChartError("omega must be a 2k x 2k array");
  if (static_cast<int>(R.size()) != n2k) throw ChartError("R must be a 2k x r array");
  for (const auto& row : R)
    if (static_cast<int>(row.size()) != r) throw ChartError("R must be a 2k x r array");

  // Free symbols of every entry must be chart coordinates (params are bound).
  auto names = coord_names();
  auto check_symbols = [&](const Expr& e, const std::string& what) {
    for (const auto& sym : e.free_symbols()) {
      if (std::find(names.begin(), names.end(), sym) == names.end())
        throw ChartError(what + " references unknown symbol '" + sym + "'");
    }
  };

  // ω skew-symmetry, symbolically after folding/collection.
  for (int i = 0; i < n2k; ++i)
    for (int j = 0; j < n2k; ++j) {
      check_symbols(omega[i][j], "omega[" + std::to_string(i) + "][" + std::to_string(j) + "]");
      if (!structurally_zero(omega[i][j] + omega[j][i]))
        throw ChartError("omega is not skew-symmetric: entry (" + std::to_string(i + 1) + "," +
                         std::to_string(j + 1) + ")");
      // ω_ij must not involve leaf coordinates.
      for (const auto& qn : q_names)
        if (omega[i][j].depends_on(qn))
          throw ChartError("omega[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) +
                           "] depends on leaf coordinate '" + qn + "'");
    }
  for (int i = 0; i < n2k; ++i)
    for (int a = 0; a < r; ++a)
      check_symbols(R[i][a], "R[" + std::to_string(i) + "][" + std::to_string(a) + "]");

  // Pointwise checks on a fixed low-discrepancy sample.
  auto points = sample_points(sample_count);
  for (const auto& p : points) {
    EvalEnv e = env(p);
    // closedness: cyclic sums of y-derivatives vanish
    for (int a = 0; a < n2k; ++a)
      for (int b = a + 1; b < n2k; ++b)
        for (int c = b + 1; c < n2k; ++c) {
          double cyc = omega[b][c].diff(y_names[a]).eval(e) +
                       omega[c][a].diff(y_names[b]).eval(e) +
                       omega[a][b].diff(y_names[c]).eval(e);
          if (std::abs(cyc) > 1e-12) {
            std::ostringstream os;
            os << "omega is not closed: cyclic derivative (" << a + 1 << "," << b + 1 << ","
               << c + 1 << ") = " << cyc << " at point";
            for (const auto& [k2, v] : p) os << " " << k2 << "=" << v;
            throw ChartError(os.str());
          }
        }
    double det = omega_at(p).determinant();
    if (std::abs(det) < 1e-12) {
      std::ostringstream os;
      os << "omega is degenerate (|det| = " << det << ") at point";
      for (const auto& [k2, v] : p) os << " " << k2 << "=" << v;
      throw ChartError(os.str());
    }
  }
}

// ---------------------------------------------------------------------------
// Built-in charts
// ---------------------------------------------------------------------------

/// Flat 4-torus: k=1, r=2, unit periods, ω = dy1 ∧ dy2, trivial splitting.
inline ChartSpec builtin_flat_torus() {
  ChartSpec c;
  c.name = "flat_torus";
  c.k = 1;
  c.r = 2;
  c.y_names = {"y1", "y2"};
  c.q_names = {"q1", "q2"};
  for (const auto& n : c.coord_names()) c.periods[n] = 1.0;
  Expr zero = Expr::integer(0);
  Expr one = Expr::integer(1);
  c.omega = {{zero, one}, {-one, zero}};
  c.R = {{zero, zero}, {zero, zero}};
  return c;
}

/// Energy-surface chart of the resonant oscillator family: k=1, r=2,
/// ω_12 = 1/(2(α-1)), R²₂ = -α(H₁-H₂)/(α²H₂+H₁) with H₁, H₂ linear in y2.
/// The y2 domain is gated to the open interval (1/4, (2α-1)/(4α)).
inline ChartSpec builtin_oscillator(const Rational& alpha) {
  if (!(alpha.to_double() > 1.0))
    throw ChartError("oscillator chart requires alpha > 1");
  ChartSpec c;
  c.name = "oscillator";
  c.k = 1;
  c.r = 2;
  c.y_names = {"y1", "y2"};
  c.q_names = {"q1", "q2"};
  c.periods["y1"] = std::nullopt;
  c.periods["y2"] = std::nullopt;
  c.periods["q1"] = 1.0;
  c.periods["q2"] = 1.0;
  c.params["alpha"] = alpha;

  Expr a = Expr::constant(alpha);
  Expr y2 = Expr::symbol("y2");
  Expr one = Expr::integer(1);
  Expr quarter = Expr::constant(Rational(1, 4));
  // H1 = ((2a-1)/4 - a*y2)/(a-1), H2 = (y2 - 1/4)/(a-1), H3 = y2
  Expr am1 = a - one;
  Expr H1 = ((Expr::integer(2) * a - one) / Expr::integer(4) - a * y2) / am1;
  Expr H2 = (y2 - quarter) / am1;

  Expr w12 = one / (Expr::integer(2) * am1);
  Expr zero = Expr::integer(0);
  c.omega = {{zero, w12}, {-w12, zero}};

  Expr R22 = -(a * (H1 - H2)) / (a * a * H2 + H1);
  c.R = {{zero, zero}, {zero, R22}};

  double lo = 0.25;
  double hi = (2.0 * alpha.to_double() - 1.0) / (4.0 * alpha.to_double());
  double margin = 0.02 * (hi - lo);
  c.domains["y2"] = {lo + margin, hi - margin};
  c.domains["y1"] = {0.0, 1.0};
  return c;
}

/// The bound 1/4 <= H3 <= (2α-1)/(4α) that gates the oscillator sample domain.
inline bool oscillator_y2_admissible(const Rational& alpha, double y2) {
  double hi = (2.0 * alpha.to_double() - 1.0) / (4.0 * alpha.to_double());
  return y2 >= 0.25 && y2 <= hi;
}

}  // namespace shla
