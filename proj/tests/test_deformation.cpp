#include <catch2/catch_amalgamated.hpp>

#include "shla/deformation.hpp"
#include "shla/oracle.hpp"
#include "util.hpp"

using namespace shla;
using namespace shla::testutil;

namespace {

LeafForm zambon_gamma1() {
  LeafForm g(2, 1);
  g.coeff(0) = parse_expr("sin(2*pi*y1)");
  g.coeff(1) = parse_expr("sin(2*pi*y2)");
  return g;
}

LeafForm scaled(const LeafForm& xi, const Rational& c) {
  return Expr::constant(c) * xi;
}

}  // namespace

TEST_CASE("Kuranishi class of the obstructed direction") {
  ChartSpec chart = builtin_flat_torus();
  LInftyContext ctx(chart);
  LeafForm rep = kuranishi(ctx, zambon_gamma1());

  // class profile -4π² cos(2πy¹) cos(2πy²) on a 32x32 transverse grid
  double worst = 0.0;
  for (int gy1 = 0; gy1 < 32; ++gy1)
    for (int gy2 = 0; gy2 < 32; ++gy2) {
      Point y = {{"y1", gy1 / 32.0}, {"y2", gy2 / 32.0}};
      double got = kuranishi_profile_at(chart, rep, y);
      double expect =
          -4 * M_PI * M_PI * std::cos(2 * M_PI * y["y1"]) * std::cos(2 * M_PI * y["y2"]);
      worst = std::max(worst, std::abs(got - expect));
    }
  CHECK(worst < 1e-9);

  // non-closed input is rejected
  LeafForm open(2, 1);
  open.coeff(0) = parse_expr("sin(2*pi*q2)");
  CHECK_THROWS_MATCHES(kuranishi(ctx, open), ExprError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("closed")));
}

TEST_CASE("Kuranishi class vanishes on the unobstructed family") {
  ChartSpec chart = builtin_flat_torus();
  LInftyContext ctx(chart);
  auto rng = make_rng(601);
  LeafForm g(2, 1);
  g.coeff(0) = random_trig_poly(rng, {"y1"});
  g.coeff(1) = random_trig_poly(rng, {"y1"});
  LeafForm rep = kuranishi(ctx, g);
  CHECK(rep.max_abs_at(chart, chart.sample_points(50)) < 1e-10);

  LeafForm cst(2, 1);
  cst.coeff(0) = Expr::constant(Rational(1, 3));
  cst.coeff(1) = Expr::constant(Rational(2, 7));
  CHECK(kuranishi(ctx, cst).is_structurally_zero());
}

TEST_CASE("Kuranishi class is gauge independent") {
  ChartSpec chart = builtin_flat_torus();
  LInftyContext ctx(chart);
  LeafForm g1 = zambon_gamma1();
  auto rng = make_rng(602);
  LeafForm beta(2, 0);
  beta.set({}, random_trig_poly(rng, chart.coord_names(), 4));
  LeafForm moved = g1 + d_F(chart, beta);
  LeafForm rep0 = kuranishi(ctx, g1);
  LeafForm rep1 = kuranishi(ctx, moved);
  double worst = 0.0;
  for (const auto& p : chart.sample_points(40)) {
    worst = std::max(worst, std::abs(kuranishi_profile_at(chart, rep0, p) -
                                     kuranishi_profile_at(chart, rep1, p)));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("mc_solve reports the standard obstruction at order 2") {
  ChartSpec chart = builtin_flat_torus();
  LInftyContext ctx(chart);
  McResult res = mc_solve(ctx, zambon_gamma1(), 4, 8);
  REQUIRE(res.obstructed);
  REQUIRE(res.report.has_value());
  CHECK(res.report->order == 2);
  CHECK(res.report->class_l2 > 1.0);
  // the reported class is ½ m₂(Γ₁,Γ₁): profile -2π² cos cos
  Point y = {{"y1", 0.0}, {"y2", 0.0}};
  CHECK(res.report->profile(y) == Catch::Approx(-2 * M_PI * M_PI).margin(1e-9));
  // representative is genuinely closed
  CHECK(d_F(chart, res.report->representative)
            .max_abs_at(chart, chart.sample_points(30)) < 1e-9);
}

TEST_CASE("mc_solve terminates on the unobstructed family and closes the oracle loop") {
  ChartSpec chart = builtin_flat_torus();
  LInftyContext ctx(chart);
  auto rng = make_rng(603);
  LeafForm g(2, 1);
  g.coeff(0) = random_trig_poly(rng, {"y1"});
  g.coeff(1) = random_trig_poly(rng, {"y1"});
  McResult res = mc_solve(ctx, g, 4, 8);
  REQUIRE_FALSE(res.obstructed);
  REQUIRE(res.series.orders.size() == 4);
  auto pts = chart.sample_points(40);
  for (int k = 2; k <= 4; ++k)
    CHECK(res.series.orders[k - 1].max_abs_at(chart, pts) < 1e-12);
  CHECK(mc_residual(ctx, res.series, 4, pts) < 1e-9);

  // oracle closure at ε = 0.1
  TransverseField F = transverse_curvature(chart);
  CHECK(graph_coisotropy_defect(chart, F, scaled(g, Rational(1, 10)), pts) < 1e-8);

  // Γ₁ = 0 gives the zero series
  McResult zero = mc_solve(ctx, LeafForm(2, 1), 3, 8);
  REQUIRE_FALSE(zero.obstructed);
  for (const auto& o : zero.series.orders) CHECK(o.max_abs_at(chart, pts) == 0.0);
}

TEST_CASE("mc_solve produces genuine higher-order corrections when needed") {
  ChartSpec chart = builtin_flat_torus();
  LInftyContext ctx(chart);
  // closed, q-dependent first order with an exact (zero-mean) bracket
  LeafForm g(2, 1);
  g.coeff(0) = parse_expr("sin(2*pi*y1)*cos(2*pi*q1)");
  g.coeff(1) = parse_expr("sin(2*pi*y2)");
  McResult res = mc_solve(ctx, g, 3, 6);
  REQUIRE_FALSE(res.obstructed);
  auto pts = chart.sample_points(40);
  REQUIRE(res.series.orders[1].max_abs_at(chart, pts) > 1e-3);  // Γ₂ ≠ 0
  CHECK(mc_residual(ctx, res.series, 3, pts) < 1e-9);

  // the truncated series maps to s = ½ Σ ε^k Γ_k; its graph defect improves
  // on the first-order truncation by the expected ε² factor
  TransverseField F = transverse_curvature(chart);
  Rational eps(1, 40);
  LeafForm s1 = scaled(g, eps * Rational(1, 2));
  LeafForm s3 = s1;
  Rational ek = eps;
  for (std::size_t k = 2; k <= res.series.orders.size(); ++k) {
    ek = ek * eps;
    s3 = s3 + scaled(res.series.orders[k - 1], ek * Rational(1, 2));
  }
  double d1 = graph_coisotropy_defect(chart, F, s1, pts);
  double d3 = graph_coisotropy_defect(chart, F, s3, pts);
  CHECK(d3 < 5e-3 * d1);
  CHECK(d3 < 2e-5);  // O(eps^4) tail of the order-3 truncation
}

TEST_CASE("mc_residual bookkeeping") {
  ChartSpec chart = builtin_flat_torus();
  LInftyContext ctx(chart);
  auto pts = chart.sample_points(40);

  DeformationSeries bare;
  bare.orders.push_back(zambon_gamma1());
  // residual at order 2 is the pointwise max of ‖½ m₂(Γ₁,Γ₁)‖ = 2π²|cos cos|
  double expect = 0.0;
  for (const auto& p : pts)
    expect = std::max(expect, 2 * M_PI * M_PI *
                                  std::abs(std::cos(2 * M_PI * p.at("y1")) *
                                           std::cos(2 * M_PI * p.at("y2"))));
  CHECK(mc_residual(ctx, bare, 2, pts) == Catch::Approx(expect).margin(1e-10));

  // appending a wrong Γ₂ raises the residual
  DeformationSeries wrong = bare;
  LeafForm junk(2, 1);
  junk.coeff(1) = parse_expr("10*sin(2*pi*q1)");  // m₁ contribution ~ 20π
  wrong.orders.push_back(junk);
  CHECK(mc_residual(ctx, wrong, 2, pts) > mc_residual(ctx, bare, 2, pts) + 1.0);
}

TEST_CASE("leaf circles are always unobstructed") {
  // r = 1: the degree-2 complex is empty, every deformation extends
  ChartSpec c;
  c.k = 1;
  c.r = 1;
  c.y_names = {"y1", "y2"};
  c.q_names = {"q1"};
  for (const auto& n : c.coord_names()) c.periods[n] = 1.0;
  Expr z = Expr::integer(0);
  c.omega = {{z, Expr::integer(1)}, {Expr::integer(-1), z}};
  auto rng = make_rng(604);
  c.R = {{random_trig_poly(rng, {"y1", "y2", "q1"})}, {random_trig_poly(rng, {"y1", "y2", "q1"})}};
  LInftyContext ctx(c);
  LeafForm g(1, 1);
  g.coeff(0) = random_trig_poly(rng, c.coord_names());
  McResult res = mc_solve(ctx, g, 4, 6);
  CHECK_FALSE(res.obstructed);
  CHECK(mc_residual(ctx, res.series, 4, c.sample_points(30)) < 1e-12);
}

TEST_CASE("twisted constant term matches the master-equation residual") {
  // flat chart: the chain truncates at arity 2 exactly
  ChartSpec flat = builtin_flat_torus();
  LInftyContext fctx(flat);
  TransverseField Ff = transverse_curvature(flat);
  auto fpts = flat.sample_points(30);
  auto rng = make_rng(605);
  LeafForm gf(2, 1);
  gf.coeff(0) = random_trig_poly(rng, flat.coord_names());
  gf.coeff(1) = random_trig_poly(rng, flat.coord_names());
  double eps = 0.0625;  // exactly representable
  LeafForm sf = scaled(gf, Rational(1, 16));
  CHECK(std::abs(twisted_m0_residual(fctx, gf, eps, fpts) -
                 master_residual(flat, Ff, sf, fpts)) < 1e-12);

  // exact solution family: both sides vanish
  LeafForm sol(2, 1);
  sol.coeff(0) = random_trig_poly(rng, {"y1"});
  sol.coeff(1) = random_trig_poly(rng, {"y1"});
  CHECK(twisted_m0_residual(fctx, sol, 0.1, fpts) < 1e-10);

  // curved chart: the full curvature chain against the numeric inverse
  ChartSpec curved = curved_torus_chart(606, 2);
  LInftyContext ctx(curved);
  TransverseField F = transverse_curvature(curved);
  auto pts = curved.sample_points(25);
  LeafForm g(2, 1);
  g.coeff(0) = random_trig_poly(rng, curved.coord_names());
  g.coeff(1) = random_trig_poly(rng, curved.coord_names());
  for (Rational e : {Rational(1, 16), Rational(1, 64)}) {
    LeafForm s = scaled(g, e);
    double tw = twisted_m0_residual(ctx, g, e.to_double(), pts);
    double mr = master_residual(curved, F, s, pts);
    INFO("eps " << e.to_double() << " twisted " << tw << " master " << mr);
    CHECK(std::abs(tw - mr) < 1e-9);
  }

  // divergence guard: a huge scale exceeds the chain radius
  CHECK_THROWS_MATCHES(twisted_m0_residual(ctx, g, 1e6, pts), ExprError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("converge")));
}

TEST_CASE("mc_solve rejects nonperiodic charts up front") {
  ChartSpec osc = builtin_oscillator(Rational(3, 2));
  LInftyContext ctx(osc);
  LeafForm g(2, 1);
  g.coeff(0) = parse_expr("sin(2*pi*y1)");
  CHECK_THROWS_MATCHES(mc_solve(ctx, g, 3), ChartError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("torus")));
  // pointwise operations still work on the same chart
  CHECK_NOTHROW(kuranishi(ctx, LeafForm(2, 1)));
}

TEST_CASE("homotopy context enforces its arity floor") {
  CHECK_THROWS_AS(LInftyContext(builtin_flat_torus(), 1), ExprError);
}
