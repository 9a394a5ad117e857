#pragma once

#include <random>

#include "shla/chart.hpp"
#include "shla/leaf_form.hpp"
#include "shla/transverse_field.hpp"

namespace shla::testutil {

/// Dyadic rational in [-1/2, 1/2], deterministic given the rng state.
inline Rational dyadic_coeff(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> d(-(1 << 19), 1 << 19);
  return Rational(d(rng), 1 << 20);
}

/// Random trigonometric polynomial of total frequency degree <= 2 in the
/// given coordinates, coefficients in [-1/2, 1/2].  Frequencies are drawn
/// directly from the admissible set so every term oscillates.
inline Expr random_trig_poly(std::mt19937_64& rng, const std::vector<std::string>& coords,
                             int terms = 3) {
  std::uniform_int_distribution<int> deg(1, 2);
  std::uniform_int_distribution<int> sgn(0, 1);
  std::uniform_int_distribution<std::size_t> which(0, coords.size() - 1);
  Expr acc = Expr::constant(dyadic_coeff(rng));
  for (int t = 0; t < terms; ++t) {
    std::vector<int> m(coords.size(), 0);
    int degree = deg(rng);
    for (int d = 0; d < degree; ++d) m[which(rng)] += sgn(rng) ? 1 : -1;
    bool zero = true;
    for (int v : m) zero = zero && v == 0;
    if (zero) m[which(rng)] = 1;
    Expr phase = Expr::integer(0);
    for (std::size_t d = 0; d < coords.size(); ++d) {
      if (m[d] == 0) continue;
      phase = phase + Expr::integer(m[d]) * Expr::symbol(coords[d]);
    }
    phase = Expr::integer(2) * Expr::pi() * phase;
    Expr osc = sgn(rng) ? sin(phase) : cos(phase);
    acc = acc + Expr::constant(dyadic_coeff(rng)) * osc;
  }
  return acc;
}

/// T⁴-type chart (k=1, r=2, unit periods, ω = dy1∧dy2) with a random
/// analytic splitting; the splitting makes the transverse curvature nonzero.
inline ChartSpec curved_torus_chart(std::uint64_t salt, int leaf_dim = 2) {
  ChartSpec c;
  c.name = "curved_torus";
  c.k = 1;
  c.r = leaf_dim;
  c.y_names = {"y1", "y2"};
  c.q_names.clear();
  for (int a = 0; a < leaf_dim; ++a) c.q_names.push_back("q" + std::to_string(a + 1));
  for (const auto& n : c.coord_names()) c.periods[n] = 1.0;
  Expr z = Expr::integer(0);
  Expr one = Expr::integer(1);
  c.omega = {{z, one}, {-one, z}};
  auto rng = make_rng(salt);
  c.R.assign(2, std::vector<Expr>(leaf_dim, z));
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < leaf_dim; ++a) c.R[i][a] = random_trig_poly(rng, c.coord_names());
  return c;
}

/// k=2 variant exercising transverse degrees above 2.
inline ChartSpec curved_k2_chart(std::uint64_t salt) {
  ChartSpec c;
  c.name = "curved_k2";
  c.k = 2;
  c.r = 2;
  c.y_names = {"y1", "y2", "y3", "y4"};
  c.q_names = {"q1", "q2"};
  for (const auto& n : c.coord_names()) c.periods[n] = 1.0;
  Expr z = Expr::integer(0);
  Expr one = Expr::integer(1);
  c.omega.assign(4, std::vector<Expr>(4, z));
  c.omega[0][1] = one;
  c.omega[1][0] = -one;
  c.omega[2][3] = one;
  c.omega[3][2] = -one;
  auto rng = make_rng(salt);
  c.R.assign(4, std::vector<Expr>(2, z));
  for (int i = 0; i < 4; ++i)
    for (int a = 0; a < 2; ++a) c.R[i][a] = random_trig_poly(rng, c.coord_names());
  return c;
}

/// Random degree-l transverse field with trig-polynomial components.
inline TransverseField random_transverse_field(const ChartSpec& chart, int degree,
                                               std::uint64_t salt) {
  auto rng = make_rng(salt);
  TransverseField B(chart.dim_transverse(), chart.r, degree);
  for (std::size_t t = 0; t < B.indices().size(); ++t)
    for (int beta = 0; beta < chart.r; ++beta)
      B.comp(static_cast<int>(t))[beta] = random_trig_poly(rng, chart.coord_names());
  return B;
}

/// Random degree-l leaf form with trig-polynomial coefficients.
inline LeafForm random_leaf_form(const ChartSpec& chart, int degree, std::uint64_t salt) {
  auto rng = make_rng(salt);
  LeafForm xi(chart.r, degree);
  for (std::size_t t = 0; t < xi.size(); ++t)
    xi.coeff(static_cast<int>(t)) = random_trig_poly(rng, chart.coord_names());
  return xi;
}

}  // namespace shla::testutil
