#include <catch2/catch_amalgamated.hpp>

#include "shla/chart.hpp"
#include "shla/transverse_field.hpp"

using namespace shla;

namespace {

// k=2, r=1 constant-coefficient chart with a generic nondegenerate skew ω.
ChartSpec random_skew_chart() {
  ChartSpec c;
  c.name = "skew4";
  c.k = 2;
  c.r = 1;
  c.y_names = {"y1", "y2", "y3", "y4"};
  c.q_names = {"q1"};
  for (const auto& n : c.coord_names()) c.periods[n] = std::nullopt;
  auto e = [](std::int64_t n, std::int64_t d) { return Expr::constant(Rational(n, d)); };
  Expr z = Expr::integer(0);
  // upper triangle entries, extended skew-symmetrically
  std::vector<std::vector<Expr>> upper = {
      {z, e(3, 2), e(-1, 3), e(1, 5)},
      {z, z, e(2, 1), e(-1, 7)},
      {z, z, z, e(5, 4)},
      {z, z, z, z}};
  c.omega.assign(4, std::vector<Expr>(4, z));
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      c.omega[i][j] = upper[i][j];
      c.omega[j][i] = -upper[i][j];
    }
  c.R.assign(4, std::vector<Expr>(1, z));
  return c;
}

}  // namespace

TEST_CASE("flat torus builtin") {
  ChartSpec c = builtin_flat_torus();
  REQUIRE_NOTHROW(c.validate());

  for (const auto& n : c.coord_names()) {
    REQUIRE(c.periods.at(n).has_value());
    CHECK(*c.periods.at(n) == 1.0);
  }

  Point p = {{"y1", 0.3}, {"y2", 0.9}, {"q1", 0.1}, {"q2", 0.5}};
  Eigen::MatrixXd winv = c.omega_inverse_at(p);
  CHECK(winv(0, 1) == Catch::Approx(-1.0));
  CHECK(winv(1, 0) == Catch::Approx(1.0));
  CHECK(winv(0, 0) == Catch::Approx(0.0).margin(1e-15));

  CHECK(transverse_curvature(c).is_structurally_zero());

  Point wrap = {{"y1", 1.3}, {"y2", -0.1}, {"q1", 0.0}, {"q2", 0.0}};
  Point red = c.reduce(wrap);
  CHECK(red["y1"] == Catch::Approx(0.3));
  CHECK(red["y2"] == Catch::Approx(0.9));
}

TEST_CASE("chart validation rejects bad data") {
  ChartSpec c = builtin_flat_torus();
  c.omega[0][1] = Expr::symbol("q1");
  c.omega[1][0] = -Expr::symbol("q1");
  CHECK_THROWS_MATCHES(c.validate(), ChartError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("leaf coordinate")));

  ChartSpec d = builtin_flat_torus();
  d.omega[0][1] = Expr::integer(1);
  d.omega[1][0] = Expr::integer(1);
  CHECK_THROWS_MATCHES(d.validate(), ChartError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("skew")));

  ChartSpec g = builtin_flat_torus();
  g.omega[0][1] = Expr::integer(0);  // rank drop: skew and closed but degenerate
  g.omega[1][0] = Expr::integer(0);
  CHECK_THROWS_MATCHES(g.validate(), ChartError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("degenerate")));

  ChartSpec h = builtin_flat_torus();
  h.R[0][0] = Expr::symbol("nope");
  CHECK_THROWS_MATCHES(h.validate(), ChartError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("nope")));
}

TEST_CASE("closedness check catches dω != 0") {
  ChartSpec c = random_skew_chart();
  REQUIRE_NOTHROW(c.validate(256));
  // perturb one entry so the cyclic derivative no longer cancels
  c.omega[0][1] = c.omega[0][1] + Expr::symbol("y3");
  c.omega[1][0] = -c.omega[0][1];
  CHECK_THROWS_MATCHES(c.validate(), ChartError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("closed")));
}

TEST_CASE("omega inverse residual on a 4x4 skew chart") {
  ChartSpec c = random_skew_chart();
  auto pts = c.sample_points(16);
  for (const auto& p : pts) {
    Eigen::MatrixXd w = c.omega_at(p);
    Eigen::MatrixXd winv = c.omega_inverse_at(p);
    CHECK((w * winv - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-12);
  }
  // symbolic inverse agrees with numeric inverse
  auto sym = c.omega_inverse_symbolic();
  Point p = pts.front();
  EvalEnv env = c.env(p);
  Eigen::MatrixXd winv = c.omega_inverse_at(p);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(sym[i][j].eval(env) == Catch::Approx(winv(i, j)).margin(1e-12));
}

TEST_CASE("oscillator builtin") {
  Rational alpha(3, 2);
  ChartSpec c = builtin_oscillator(alpha);
  REQUIRE_NOTHROW(c.validate(256));

  // H1 = 2(1/2 - 0.45) = 0.1 = H2 at y2 = 0.3, hence R²₂ = 0 there.
  Point p = {{"y1", 0.2}, {"y2", 0.3}, {"q1", 0.1}, {"q2", 0.7}};
  EvalEnv env = c.env(p);
  CHECK(c.R[1][1].eval(env) == Catch::Approx(0.0).margin(1e-15));

  // ω_12 = 1/(2(α-1)) = 1 for α = 3/2, exactly.
  CHECK(c.omega[0][1].eval(env) == 1.0);
  Eigen::MatrixXd winv = c.omega_inverse_at(p);
  CHECK(winv(0, 1) == Catch::Approx(-1.0));

  // The H₃ bound gates the sample domain: y2 = 0.2 is inadmissible for α = 3/2.
  CHECK_FALSE(oscillator_y2_admissible(alpha, 0.2));
  CHECK(oscillator_y2_admissible(alpha, 0.3));
  auto [lo, hi] = c.domain_of("y2");
  CHECK(lo >= 0.25);
  CHECK(hi <= (2.0 * 1.5 - 1.0) / (4.0 * 1.5));
  auto pts = c.sample_points(128);
  for (const auto& q : pts) CHECK(oscillator_y2_admissible(alpha, q.at("y2")));

  CHECK_THROWS_AS(builtin_oscillator(Rational(1, 2)), ChartError);
  CHECK_THROWS_AS(builtin_oscillator(Rational(1)), ChartError);
}

TEST_CASE("built-in invariants hold on 256 quasi-random points") {
  for (ChartSpec c : {builtin_flat_torus(), builtin_oscillator(Rational(3, 2)),
                      builtin_oscillator(Rational(7, 3))}) {
    REQUIRE_NOTHROW(c.validate(256));
    for (const auto& p : c.sample_points(256)) {
      Eigen::MatrixXd w = c.omega_at(p);
      CHECK((w + w.transpose()).norm() < 1e-14);
      CHECK(std::abs(w.determinant()) > 1e-12);
    }
  }
}
