#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "support.hpp"

using namespace hkflow;
using Catch::Approx;

TEST_CASE("grid construction", "[grid]") {
  const Grid g(0, 1, 100);
  CHECK(g.dx() == Approx(0.01));
  CHECK(g.center(0) == Approx(0.005));
  CHECK(g.face(100) == Approx(1.0));
  CHECK_THROWS_WITH(Grid(0, 1, 4), Catch::Matchers::ContainsSubstring("n_cells >= 8"));
  CHECK_THROWS_AS(Grid(1, 0, 10), Error);
  const auto xs = g.centers();
  for (std::size_t i = 1; i < xs.size(); ++i) CHECK(xs[i] > xs[i - 1]);
}

TEST_CASE("integrate_field examples", "[grid]") {
  const Grid g(0, 1, 100);
  CHECK(integrate_field(GridField(g, 1.0)) == Approx(1.0).epsilon(1e-14));
  CHECK(integrate_field(testing::field(g, "x")) == Approx(0.5).epsilon(1e-14));
  // Composite midpoint rule: int x^2 - dx^2/12 * (b - a).
  const double dx = g.dx();
  CHECK(integrate_field(testing::field(g, "x^2")) == Approx(1.0 / 3.0 - dx * dx / 12.0).epsilon(1e-13));
  CHECK(integrate_field(testing::field(g, "x^2")) == Approx(0.3333250).epsilon(1e-7));
}

TEST_CASE("face_gradient examples", "[grid]") {
  const Grid g(0, 1, 16);
  for (double v : face_gradient(GridField(g, 3.0))) CHECK(v == 0.0);
  const auto lin = face_gradient(testing::field(g, "x"));
  CHECK(lin.size() == 17);
  CHECK(lin.front() == 0.0);
  CHECK(lin.back() == 0.0);
  for (int j = 1; j < 16; ++j) CHECK(lin[j] == Approx(1.0).epsilon(1e-12));

  const Grid g8(0, 1, 8);
  GridField w(g8, 0.0);
  w[7] = 1.0;
  const auto d = face_gradient(w);
  CHECK(d[7] == Approx(1.0 / g8.dx()));
  for (int j = 0; j < 9; ++j)
    if (j != 7) CHECK(d[j] == 0.0);
}

TEST_CASE("face_divergence examples", "[grid]") {
  const Grid g(0, 1, 10);
  const GridField z = face_divergence(g, std::vector<double>(11, 0.0));
  CHECK(z.max_abs() == 0.0);
  const auto cells = face_divergence(0.25, {0, 1, 0, 0, 0});
  REQUIRE(cells.size() == 4);
  CHECK(cells[0] == 4.0);
  CHECK(cells[1] == -4.0);
  CHECK(cells[2] == 0.0);
  CHECK(cells[3] == 0.0);
  CHECK_THROWS_AS(face_divergence(g, std::vector<double>(11, 1.0)), Error);
  CHECK_THROWS_AS(face_divergence(g, std::vector<double>(10, 0.0)), Error);
}

TEST_CASE("discrete divergence theorem", "[grid]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-5, 5);
  for (int n : {8, 33, 400}) {
    const Grid g(-1, 2, n);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> F(n + 1, 0.0);
      double fmax = 0.0;
      for (int j = 1; j < n; ++j) {
        F[j] = U(rng);
        fmax = std::max(fmax, std::abs(F[j]));
      }
      const double total = integrate_field(face_divergence(g, F));
      CHECK(std::abs(total) <= 8 * std::numeric_limits<double>::epsilon() * n * fmax / g.dx() * g.dx());
    }
  }
}

TEST_CASE("snapshot CSV round trip keeps every bit", "[grid]") {
  const Grid g(0, 2, 37);
  const GridField w = testing::field(g, "exp(-x)*sin(3*x)+1/3");
  const auto dir = testing::temp_dir("snapshot");
  write_snapshot_csv((dir / "w.csv").string(), w);
  const std::string text = testing::slurp(dir / "w.csv");
  CHECK(text.rfind("# columns: x,u\nx,u\n", 0) == 0);
  const GridField r = read_snapshot_csv((dir / "w.csv").string(), g);
  for (int i = 0; i < g.n_cells(); ++i) CHECK(r[i] == w[i]);
  CHECK_THROWS_AS(read_snapshot_csv((dir / "w.csv").string(), Grid(0, 2, 38)), Error);
}

TEST_CASE("solve_m examples", "[equilibrium]") {
  const Grid g(0, 1, 50);
  SECTION("logistic m = 1") {
    const auto eq = solve_m(testing::logistic("1"), g);
    for (int i = 0; i < 50; ++i) {
      CHECK(eq.values[i] == Approx(1.0).epsilon(1e-12));
      CHECK(eq.residual[i] <= 1e-12);
    }
  }
  SECTION("Boltzmann V = x gives exp(-x)") {
    const auto model = testing::boltzmann("x");
    const auto eq = solve_m(model, g);
    for (int i = 0; i < 50; ++i) CHECK(eq.values[i] == Approx(std::exp(-g.center(i))).epsilon(1e-11));
    const RootResult r = solve_level(model.at(1.0), 0.0);
    CHECK(r.found);
    CHECK(r.value == Approx(0.36787944117144233).epsilon(1e-11));
  }
  SECTION("power alpha = 2") {
    const auto eq = solve_m(FitnessModel::power(2.0), g);
    for (int i = 0; i < 50; ++i) CHECK(eq.values[i] == Approx(1.0).epsilon(1e-12));
  }
  SECTION("residuals within root_tol for every model") {
    for (const auto& model : {testing::logistic("1+0.5*sin(pi*x)"), FitnessModel::power(-0.5),
                              testing::boltzmann("3*x"), testing::custom_quadratic()}) {
      const auto eq = solve_m(model, g);
      CHECK(eq.residual.max() <= 1e-12);
      CHECK(eq.values.min() > 0.0);
    }
  }
}

TEST_CASE("solve_uc examples", "[equilibrium]") {
  const Grid g(0, 1, 20);
  SECTION("c = 0 reproduces m") {
    for (const auto& model : {testing::logistic("1+x"), testing::boltzmann("x"), FitnessModel::power(0.5)}) {
      const auto m = solve_m(model, g);
      const auto u0 = solve_uc(model, g, 0.0);
      CHECK(u0.exists_everywhere());
      for (int i = 0; i < 20; ++i) {
        const double slope = std::abs(model.at(g.center(i)).f_u(m.values[i]));
        CHECK(std::abs(u0.values[i] - m.values[i]) <= 2 * 1e-12 / slope);
      }
    }
  }
  SECTION("logistic c = -1 gives 2") {
    const auto p = solve_uc(testing::logistic("1"), g, -1.0);
    for (int i = 0; i < 20; ++i) CHECK(p.values[i] == Approx(2.0).epsilon(1e-12));
  }
  SECTION("power alpha = 2, c = 0.5") {
    const auto p = solve_uc(FitnessModel::power(2.0), g, 0.5);
    for (int i = 0; i < 20; ++i) CHECK(p.values[i] == Approx(std::sqrt(0.5)).epsilon(1e-12));
  }
  SECTION("levels above sup f have no profile") {
    const auto p = solve_uc(testing::logistic("1"), g, 2.0);
    CHECK_FALSE(p.exists_everywhere());
    CHECK(std::isnan(p.values[3]));
  }
  SECTION("monotone in c") {
    const auto model = testing::boltzmann("x");
    for (double c1 : {-2.0, -0.5, 0.0, 0.7}) {
      const auto lo = solve_uc(model, g, c1);
      const auto hi = solve_uc(model, g, c1 + 0.3);
      for (int i = 0; i < 20; ++i) CHECK(lo.values[i] >= hi.values[i]);
    }
  }
}

TEST_CASE("linfty_bound examples", "[equilibrium]") {
  const Grid g(0, 1, 40);
  SECTION("u0 = m") {
    const auto model = testing::logistic("1+0.5*sin(pi*x)");
    const GridField m = solve_m(model, g).values;
    // no cell center sits on the peak, so this is the discrete sup of m
    CHECK(linfty_bound(model, m) == Approx(m.max()).epsilon(1e-10));
  }
  SECTION("logistic m = 1, u0 = 3") {
    CHECK(linfty_bound(testing::logistic("1"), GridField(g, 3.0)) == Approx(3.0).epsilon(1e-12));
  }
  SECTION("logistic m = 1 + x, u0 = 1") {
    CHECK(linfty_bound(testing::logistic("1+x"), GridField(g, 1.0)) == Approx(2.0).epsilon(1e-12));
  }
  SECTION("bound dominates min(u0, m)") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 4.0);
    for (const auto& model : {testing::logistic("1+0.5*sin(pi*x)"), testing::boltzmann("x"), FitnessModel::power(-0.5)}) {
      const GridField m = solve_m(model, g).values;
      for (int trial = 0; trial < 10; ++trial) {
        GridField u0(g);
        for (double& v : u0.values()) v = U(rng);
        double top = 0.0;
        for (int i = 0; i < 40; ++i) top = std::max(top, std::min(u0[i], m[i]));
        CHECK(linfty_bound(model, u0) >= top);
        CHECK(l1_lower_bound(u0, m) <= l1_norm(u0) + 1e-15);
      }
    }
  }
}

TEST_CASE("equilibrium CSV export", "[equilibrium]") {
  const Grid g(0, 1, 10);
  const auto dir = testing::temp_dir("eq_csv");
  write_equilibrium_csv((dir / "m.csv").string(), solve_m(testing::boltzmann("x"), g));
  write_comparison_csv((dir / "uc.csv").string(), solve_uc(testing::logistic("1"), g, 2.0));
  CHECK(testing::slurp(dir / "m.csv").rfind("# columns: x,m,residual\n", 0) == 0);
  const auto rows = testing::read_csv_rows(dir / "m.csv");
  REQUIRE(rows.size() == 10);
  CHECK(rows[0][1] == Approx(std::exp(-0.05)).epsilon(1e-11));
  CHECK(testing::slurp(dir / "uc.csv").find(",0\n") != std::string::npos);
}
