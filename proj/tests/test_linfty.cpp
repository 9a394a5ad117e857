#include <catch2/catch_amalgamated.hpp>

#include "shla/linfty.hpp"
#include "util.hpp"

using namespace shla;
using namespace shla::testutil;

namespace {

/// Flat-but-nontrivial splitting: R_i^α = ∂Φ^α/∂y^i for random trig Φ^α(y)
/// gives F ≡ 0 with nonzero Christoffel data.
ChartSpec flat_gradient_chart(std::uint64_t salt, int leaf_dim) {
  ChartSpec c = curved_torus_chart(salt, leaf_dim);
  auto rng = make_rng(salt + 7);
  for (int a = 0; a < leaf_dim; ++a) {
    Expr phi = random_trig_poly(rng, c.y_names);
    for (int i = 0; i < 2; ++i) c.R[i][a] = phi.diff(c.y_names[i]);
  }
  return c;
}

/// Independent brute-force evaluation of m₃ on degree-1 inputs: plain index
/// loops over the permutation sum, no shared form/wedge machinery.
double m3_bruteforce_component(const LInftyContext& ctx, const std::vector<LeafForm>& xs,
                               int alpha, int beta, const Point& p) {
  const ChartSpec& c = ctx.chart;
  EvalEnv env = c.env(p);
  int n = c.dim_transverse();
  int r = c.r;
  Eigen::MatrixXd winv = c.omega_inverse_at(p);
  std::vector<Eigen::MatrixXd> Fv(r, Eigen::MatrixXd::Zero(n, n));
  for (int b = 0; b < r; ++b)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) Fv[b](i, j) = ctx.F.signed_at({i, j}, b).eval(env);
  auto grad = [&](const LeafForm& s) {
    Eigen::MatrixXd G(n, r);
    for (int i = 0; i < n; ++i) {
      LeafForm ns = nabla(c, s, i);
      for (int a = 0; a < r; ++a) G(i, a) = ns.at({a}).eval(env);
    }
    return G;
  };
  std::vector<Eigen::MatrixXd> G;
  std::vector<Eigen::VectorXd> val;
  for (const auto& s : xs) {
    G.push_back(grad(s));
    Eigen::VectorXd v(r);
    for (int a = 0; a < r; ++a) v(a) = s.at({a}).eval(env);
    val.push_back(v);
  }
  double acc = 0.0;
  int perm[3] = {0, 1, 2};
  do {
    // F^#⌟ξ_{σ(2)}: sharp(m,j) = Σ_{γ,k} ξ_γ F^γ_{mk} ω^{kj}
    Eigen::MatrixXd sharp = Eigen::MatrixXd::Zero(n, n);
    for (int g = 0; g < r; ++g) sharp += val[perm[1]](g) * (Fv[g] * winv);
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < n; ++m)
        for (int j = 0; j < n; ++j) {
          double mid = winv(i, m) * sharp(m, j);
          acc += mid * (G[perm[0]](i, alpha) * G[perm[2]](j, beta) -
                        G[perm[0]](i, beta) * G[perm[2]](j, alpha));
        }
  } while (std::next_permutation(perm, perm + 3));
  return -acc / 8.0;  // all Koszul signs are +1 for shifted-degree-0 inputs
}

}  // namespace

TEST_CASE("m1 is the signed leafwise differential") {
  ChartSpec flat = builtin_flat_torus();
  LInftyContext ctx(flat);

  LeafForm gamma(2, 1);
  gamma.coeff(0) = parse_expr("sin(2*pi*y1)");
  gamma.coeff(1) = parse_expr("sin(2*pi*y2)");
  CHECK(m1(ctx, gamma).is_structurally_zero());  // y-only coefficients

  LeafForm xi = random_leaf_form(flat, 1, 300);
  LeafForm lhs = m1(ctx, xi);
  LeafForm rhs = Expr::integer(-1) * d_F(flat, xi);
  auto pts = flat.sample_points(15);
  CHECK((lhs - rhs).max_abs_at(flat, pts) == 0.0);

  // m1∘m1 = 0 across degrees
  ChartSpec curved = curved_torus_chart(301, 3);
  LInftyContext cctx(curved);
  auto cpts = curved.sample_points(15);
  for (int d : {0, 1, 2}) {
    LeafForm x = random_leaf_form(curved, d, 302 + d);
    CHECK(m1(cctx, m1(cctx, x)).max_abs_at(curved, cpts) < 1e-12);
  }
}

TEST_CASE("m2 on the flat torus is the transverse bracket of the coefficients") {
  ChartSpec flat = builtin_flat_torus();
  LInftyContext ctx(flat);
  auto rng = make_rng(310);
  LeafForm gamma(2, 1);
  Expr a1 = random_trig_poly(rng, flat.coord_names());
  Expr a2 = random_trig_poly(rng, flat.coord_names());
  gamma.coeff(0) = a1;
  gamma.coeff(1) = a2;
  LeafForm br = m2(ctx, gamma, gamma);
  // expected coefficient: ∂a1/∂y2 ∂a2/∂y1 - ∂a2/∂y2 ∂a1/∂y1 on f*1∧f*2,
  // the ω^{12} = -1 contraction of the y-gradients (R = 0 here).
  Expr expect = a1.diff("y2") * a2.diff("y1") - a2.diff("y2") * a1.diff("y1");
  auto pts = flat.sample_points(40);
  for (const auto& p : pts) {
    EvalEnv e = flat.env(p);
    CHECK(br.at({0, 1}).eval(e) == Catch::Approx(expect.eval(e)).margin(1e-12));
  }

  // constants bracket to zero
  LeafForm cst(2, 1);
  cst.coeff(0) = Expr::constant(Rational(2, 3));
  cst.coeff(1) = Expr::constant(Rational(-1, 5));
  CHECK(m2(ctx, cst, cst).is_structurally_zero());
}

TEST_CASE("m2 on the oscillator matches the reduced-space Poisson bracket") {
  Rational alpha(3, 2);
  ChartSpec osc = builtin_oscillator(alpha);
  LInftyContext ctx(osc);
  auto rng = make_rng(311);
  Expr g = random_trig_poly(rng, osc.y_names);
  Expr h = random_trig_poly(rng, osc.y_names);
  LeafForm gamma(2, 1);
  gamma.coeff(0) = g;
  gamma.coeff(1) = h;
  LeafForm br = m2(ctx, gamma, gamma);
  // ω^{12} of the inverted pair is -2(α-1); the coefficient is
  // ω^{12}(∂₁g∂₂h - ∂₁h∂₂g), the transverse Poisson bracket of (g,h).
  double w12 = -2.0 * (alpha.to_double() - 1.0);
  Expr expect = g.diff("y1") * h.diff("y2") - h.diff("y1") * g.diff("y2");
  auto pts = osc.sample_points(100);
  for (const auto& p : pts) {
    EvalEnv e = osc.env(p);
    CHECK(br.at({0, 1}).eval(e) == Catch::Approx(w12 * expect.eval(e)).margin(1e-9));
  }
}

TEST_CASE("m_ell vanishes identically on flat splittings") {
  for (ChartSpec chart : {builtin_flat_torus(), flat_gradient_chart(320, 3)}) {
    LInftyContext ctx(chart);
    REQUIRE(ctx.F.max_abs_at(chart, chart.sample_points(30)) < 1e-12);
    auto pts = chart.sample_points(10);
    for (int l : {3, 4}) {
      std::vector<LeafForm> forms;
      for (int t = 0; t < l; ++t) forms.push_back(random_leaf_form(chart, 1, 321 + 10 * l + t));
      CHECK(m_ell(ctx, forms).max_abs_at(chart, pts) < 1e-14);
    }
  }
}

TEST_CASE("m3 against the brute-force index-loop oracle") {
  ChartSpec chart = curved_torus_chart(330, 3);
  LInftyContext ctx(chart);
  std::vector<LeafForm> xs = {random_leaf_form(chart, 1, 331),
                              random_leaf_form(chart, 1, 332),
                              random_leaf_form(chart, 1, 333)};
  LeafForm m3 = m_ell(ctx, xs);
  auto pts = chart.sample_points(20);
  for (const auto& p : pts) {
    EvalEnv e = chart.env(p);
    for (int a = 0; a < chart.r; ++a)
      for (int b = a + 1; b < chart.r; ++b)
        CHECK(m3.at({a, b}).eval(e) ==
              Catch::Approx(m3_bruteforce_component(ctx, xs, a, b, p)).margin(1e-9));
  }

  // degree-0 inputs are rejected, not silently reinterpreted
  std::vector<LeafForm> bad = {LeafForm(chart.r, 0), xs[1], xs[2]};
  CHECK_THROWS_MATCHES(m_ell(ctx, bad), ExprError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("degree-0")));
}

TEST_CASE("m3 symmetry: swapping shifted-degree-0 inputs is invisible") {
  ChartSpec chart = curved_torus_chart(340, 3);
  LInftyContext ctx(chart);
  std::vector<LeafForm> xs = {random_leaf_form(chart, 1, 341),
                              random_leaf_form(chart, 1, 342),
                              random_leaf_form(chart, 1, 343)};
  std::vector<LeafForm> sw = {xs[1], xs[0], xs[2]};
  LeafForm a = m_ell(ctx, xs);
  LeafForm b = m_ell(ctx, sw);
  CHECK((a - b).max_abs_at(chart, chart.sample_points(10)) < 1e-12);
}

TEST_CASE("L-infinity relations n = 1, 2, 3") {
  // Curved charts: the n=3 relation mixes m1, m2, m3 and is the decisive
  // convention check.
  for (std::uint64_t salt : {350ull, 351ull}) {
    ChartSpec chart = curved_torus_chart(salt, 3);
    LInftyContext ctx(chart);
    auto pts = chart.sample_points(50);
    for (int tuple = 0; tuple < 5; ++tuple) {
      std::vector<LeafForm> xs = {random_leaf_form(chart, 1, 360 + 10 * tuple),
                                  random_leaf_form(chart, 1, 361 + 10 * tuple),
                                  random_leaf_form(chart, 1, 362 + 10 * tuple)};
      CHECK(linfty_residual(ctx, {xs[0]}, pts) < 1e-12);
      CHECK(linfty_residual(ctx, {xs[0], xs[1]}, pts) < 1e-8);
      CHECK(linfty_residual(ctx, xs, pts) < 1e-8);
    }
    // mixed-degree Leibniz instances
    LeafForm f = random_leaf_form(chart, 0, 370);
    LeafForm one = random_leaf_form(chart, 1, 371);
    LeafForm two = random_leaf_form(chart, 2, 372);
    CHECK(linfty_residual(ctx, {f, one}, pts) < 1e-9);
    CHECK(linfty_residual(ctx, {f, f}, pts) < 1e-9);
    CHECK(linfty_residual(ctx, {two, one}, pts) < 1e-9);
  }

  // Flat case: the structure degenerates to a DGLA (Leibniz + graded Jacobi).
  ChartSpec flat = flat_gradient_chart(380, 3);
  LInftyContext fctx(flat);
  auto fpts = flat.sample_points(50);
  for (int tuple = 0; tuple < 3; ++tuple) {
    std::vector<LeafForm> xs = {random_leaf_form(flat, 1, 381 + 10 * tuple),
                                random_leaf_form(flat, 1, 382 + 10 * tuple),
                                random_leaf_form(flat, 1, 383 + 10 * tuple)};
    CHECK(linfty_residual(fctx, {xs[0], xs[1]}, fpts) < 1e-9);
    CHECK(linfty_residual(fctx, xs, fpts) < 1e-9);  // Jacobi: m3 = 0 here
  }
}

TEST_CASE("mutated m3 sign breaks the n=3 relation") {
  ChartSpec chart = curved_torus_chart(390, 3);
  LInftyContext ctx(chart);
  auto pts = chart.sample_points(25);
  std::vector<LeafForm> xs = {random_leaf_form(chart, 1, 391),
                              random_leaf_form(chart, 1, 392),
                              random_leaf_form(chart, 1, 393)};
  std::vector<int> shifted = {0, 0, 0};
  Index all = {0, 1, 2};
  // assemble the relation with m3 replaced by -m3
  LeafForm total(chart.r, 3);
  for (int i = 1; i <= 3; ++i) {
    for (const auto& split : unshuffles(all, i)) {
      Index perm = split.left;
      perm.insert(perm.end(), split.right.begin(), split.right.end());
      int sign = koszul_sign(perm, shifted);
      std::vector<LeafForm> inner;
      for (int p : split.left) inner.push_back(xs[p]);
      LeafForm term;
      if (i == 2) {
        term = m2(ctx, m2(ctx, inner[0], inner[1]), xs[split.right[0]]);
      } else if (i == 1) {
        std::vector<LeafForm> outer = {m1(ctx, inner[0]), xs[split.right[0]],
                                       xs[split.right[1]]};
        term = Expr::integer(-1) * m_ell(ctx, outer);
      } else {
        term = m1(ctx, Expr::integer(-1) * m_ell(ctx, inner));
      }
      total = sign == 1 ? total + term : total - term;
    }
  }
  CHECK(total.max_abs_at(chart, pts) > 1e-4);
  // sanity: the unmutated relation vanishes on the same data
  CHECK(linfty_residual(ctx, xs, pts) < 1e-8);
}
