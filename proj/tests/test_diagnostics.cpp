#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace hkflow;
using Catch::Approx;

TEST_CASE("entropy examples", "[diagnostics]") {
  const Grid g(0, 1, 64);
  const auto logi = testing::logistic("1");
  const GridField one(g, 1.0);
  CHECK(entropy(logi, one, GridField(g, 2.0)) == Approx(0.5).epsilon(1e-12));
  CHECK(entropy(logi, one, GridField(g, 0.0)) == Approx(0.5).epsilon(1e-12));
  for (const auto& model : {testing::logistic("1+0.5*sin(pi*x)"), testing::boltzmann("x"), FitnessModel::power(2.0),
                            FitnessModel::power(-0.5), testing::custom_quadratic()}) {
    const GridField m = solve_m(model, g).values;
    CHECK(entropy(model, m, m) <= 1e-14 + kQuadTol * g.n_cells());
  }
}

TEST_CASE("energy examples", "[diagnostics]") {
  const Grid g(0, 1, 64);
  CHECK(energy(testing::logistic("1"), GridField(g, 0.0)) == 0.0);
  CHECK(energy(testing::logistic("1"), GridField(g, 2.0)) == Approx(8.0 / 6.0).epsilon(1e-12));
  CHECK(energy(testing::boltzmann("0"), GridField(g, 1.0)) == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("entropy production examples", "[diagnostics]") {
  const Grid g(0, 1, 64);
  const auto logi = testing::logistic("1");
  const Production p = entropy_production_detail(BoundModel(logi, g), GridField(g, 2.0));
  CHECK(p.reaction_part == Approx(2.0).epsilon(1e-13));
  CHECK(p.gradient_part == 0.0);
  CHECK(p.value == Approx(2.0).epsilon(1e-13));
  CHECK_FALSE(p.flagged);

  const Production z = entropy_production_detail(BoundModel(logi, g), GridField(g, 0.0));
  CHECK(z.value == 0.0);
  CHECK(z.flagged);

  // Second order at the equilibrium.
  const auto model = testing::logistic("1+0.5*sin(pi*x)");
  double prev = 0.0;
  for (int n : {50, 100, 200}) {
    const Grid gn(0, 1, n);
    const GridField m = solve_m(model, gn).values;
    const double d = entropy_production(model, m);
    CHECK(d <= 10.0 * gn.dx() * gn.dx());
    if (prev > 0.0) CHECK(prev / d > 3.0);
    prev = d;
  }
}

TEST_CASE("entropy and production are nonnegative; small entropy pins u to m", "[diagnostics]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const Grid g(0, 1, 48);
  for (const auto& model : {testing::logistic("1+0.5*sin(pi*x)"), testing::boltzmann("x"), FitnessModel::power(2.0),
                            FitnessModel::power(-0.5), testing::custom_quadratic()}) {
    const BoundModel bm(model, g);
    const GridField m = solve_m(model, g).values;
    for (int k = 0; k <= 9; ++k) {
      const double amp = std::pow(10.0, -k);
      GridField u = m;
      for (double& v : u.values()) v = std::max(0.0, v * (1.0 + amp * U(rng)));
      const double h = entropy(bm, m, u);
      CHECK(h >= 0.0);
      CHECK(entropy_production(bm, u) >= 0.0);
      if (h < 1e-12) CHECK(linf_distance(u, m) < 1e-4);
    }
  }
}

TEST_CASE("dissipation residual", "[diagnostics]") {
  SECTION("spatially constant logistic follows the ODE identity") {
    const Grid g(0, 1, 100);
    SolverConfig c;
    c.dt_policy = DtPolicy::Fixed;
    c.dt = 1e-4;
    c.t_end = 3.0;
    c.output_every = 0.01;
    const auto rec = integrate(testing::logistic("1"), GridField(g, 2.0), c);
    CHECK(dissipation_residual(rec) <= 0.05);
    // ODE oracle for H = (u-1)^2/2 along u(t) = 2/(2 - e^{-t}).
    for (const auto& s : rec.samples) {
      const double u = 2.0 / (2.0 - std::exp(-s.t));
      CHECK(s.entropy == Approx(0.5 * (u - 1) * (u - 1)).margin(1e-6));
      CHECK(s.production == Approx(u * (1 - u) * (1 - u)).margin(1e-6));
    }
  }
  SECTION("stationary record") {
    const Grid g(0, 1, 40);
    SolverConfig c;
    c.t_end = 0.2;
    c.output_every = 0.02;
    const auto rec = integrate(testing::logistic("1"), GridField(g, 1.0), c);
    CHECK(dissipation_residual(rec) <= 10.0 * g.dx() * g.dx());
  }
  SECTION("Boltzmann, cosine start, with a refined reference") {
    const auto model = testing::boltzmann("0");
    SolverConfig c;
    c.t_end = 0.2;
    c.output_every = 0.005;
    const auto rec = integrate(model, testing::field(Grid(0, 1, 200), "1+0.3*cos(pi*x)"), c);
    const double r200 = dissipation_residual(rec);
    CHECK(r200 <= 0.05);
    const auto ref = integrate(model, testing::field(Grid(0, 1, 400), "1+0.3*cos(pi*x)"), c);
    REQUIRE(ref.samples.size() == rec.samples.size());
    for (std::size_t k = 0; k < rec.samples.size(); ++k)
      CHECK(rec.samples[k].entropy == Approx(ref.samples[k].entropy).epsilon(1e-3).margin(1e-12));
    CHECK(dissipation_residual(ref) <= 0.05);
  }
  SECTION("window and too few samples") {
    const Grid g(0, 1, 20);
    SolverConfig c;
    c.t_end = 0.1;
    c.output_every = 0.05;
    const auto rec = integrate(testing::logistic("1"), GridField(g, 2.0), c);
    CHECK_NOTHROW(dissipation_residual(rec));
    CHECK_THROWS_AS(dissipation_residual(rec, {0.04, 1.0}), InsufficientSamples);
  }
}

TEST_CASE("rate fit", "[diagnostics]") {
  SECTION("logistic ODE near u = 1") {
    const Grid g(0, 1, 20);
    SolverConfig c;
    c.t_end = 8.0;
    c.output_every = 0.05;
    const auto rec = integrate(testing::logistic("1"), GridField(g, 1.1), c);
    const RateFit fit = fit_rate(rec);
    CHECK(fit.gamma >= 1.8);
    CHECK(fit.gamma <= 2.2);
    CHECK(fit.n_samples >= 10);
    CHECK(fit.envelope_ok);
    CHECK(fit.r2 > 0.999);
  }
  SECTION("equilibrium start has nothing to fit") {
    const auto model = testing::logistic("1+0.5*sin(pi*x)");
    const Grid g(0, 1, 40);
    SolverConfig c;
    c.t_end = 0.5;
    c.output_every = 0.02;
    const auto rec = integrate(model, solve_m(model, g).values, c);
    CHECK_THROWS_WITH(fit_rate(rec), Catch::Matchers::ContainsSubstring("insufficient samples"));
  }
  SECTION("Boltzmann cosine start decays") {
    SolverConfig c;
    c.t_end = 6.0;
    c.output_every = 0.02;
    const auto rec = integrate(testing::boltzmann("0"), testing::field(Grid(0, 1, 50), "1+0.3*cos(pi*x)"), c);
    const RateFit fit = fit_rate(rec);
    CHECK(fit.gamma > 0.0);
    CHECK(fit.envelope_ok);
    const auto lines = fit.comment_lines();
    REQUIRE(lines.size() == 4);
    CHECK(lines[0].rfind("rate_fit gamma=", 0) == 0);
  }
  SECTION("shift and scale invariance") {
    const Grid g(0, 1, 20);
    SolverConfig c;
    c.t_end = 8.0;
    c.output_every = 0.05;
    const auto rec = integrate(testing::logistic("1"), GridField(g, 1.5), c);
    const double g0 = fit_rate(rec).gamma;
    auto shifted = rec;
    for (auto& s : shifted.samples) s.t += 3.7;
    CHECK(fit_rate(shifted).gamma == Approx(g0).epsilon(1e-12));
    auto scaled = rec;
    for (auto& s : scaled.samples) s.entropy *= 5.3;
    CHECK(fit_rate(scaled, kDefaultEntropyFloor * 5.3).gamma == Approx(g0).epsilon(1e-12));
  }
}

TEST_CASE("bound audit", "[diagnostics]") {
  SolverConfig c;
  c.t_end = 2.0;
  c.output_every = 0.05;
  SECTION("equilibrium start") {
    // The discrete steady state differs from the cellwise m by an entropy
    // of O(dx^4), about 4e-11 here, which the entropy floor absorbs.
    const auto model = testing::boltzmann("x");
    const Grid g(0, 1, 100);
    const GridField m = solve_m(model, g).values;
    const auto rec = integrate(model, m, c);
    CHECK(rec.samples.back().entropy > 0.0);
    CHECK(audit_bounds(model, rec, m).passed());
    CHECK_FALSE(audit_bounds(model, rec, m, kAuditSlack, 0.0).passed());
  }
  SECTION("logistic from 2") {
    const auto model = testing::logistic("1");
    const Grid g(0, 1, 40);
    const GridField u0(g, 2.0);
    CHECK(linfty_bound(model, u0) == Approx(2.0).epsilon(1e-10));
    const auto rec = integrate(model, u0, c);
    const AuditReport rep = audit_bounds(model, rec, u0);
    CHECK(rep.passed());
    CHECK(rep.check("linfty_bound").bound == Approx(2.0 * 1.01).epsilon(1e-10));
    CHECK(rep.to_text().rfind("# columns: check,status,witness_t,value,bound", 0) == 0);
  }
  SECTION("injected entropy increase") {
    const auto model = testing::logistic("1");
    const Grid g(0, 1, 40);
    const GridField u0(g, 2.0);
    auto rec = integrate(model, u0, c);
    rec.samples[7].entropy = rec.samples[6].entropy * 1.5;
    const AuditReport rep = audit_bounds(model, rec, u0);
    CHECK_FALSE(rep.passed());
    const AuditCheck& mono = rep.check("entropy_monotone");
    CHECK_FALSE(mono.passed);
    CHECK(mono.witness_t == rec.samples[7].t);
    CHECK(rep.check("linfty_bound").passed);
    CHECK(first_entropy_increase(rec, 0.0) == 7);
    CHECK(rep.to_text().find("entropy_monotone FAIL") != std::string::npos);
  }
}

TEST_CASE("trajectory CSV carries the schema and the fit", "[diagnostics]") {
  const Grid g(0, 1, 20);
  SolverConfig c;
  c.t_end = 8.0;
  c.output_every = 0.05;
  const auto rec = integrate(testing::logistic("1"), GridField(g, 1.5), c);
  std::ostringstream out;
  write_trajectory_csv(out, rec, fit_rate(rec).comment_lines());
  const std::string s = out.str();
  CHECK(s.rfind(std::string("# columns: ") + kTrajectoryColumns, 0) == 0);
  CHECK(s.find("# rate_fit gamma=") != std::string::npos);
  CHECK(s.find(std::string("\n") + kTrajectoryColumns + "\n") != std::string::npos);
}
