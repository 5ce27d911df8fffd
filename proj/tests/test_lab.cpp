#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace hkflow;
using Catch::Approx;

namespace {

// The logistic (m = 1) gradient-flow tuple of the general ratio with v = u.
struct LogisticTuple {
  FieldFn E = [](double, double u) { return 0.5 * (u - 1) * (u - 1); };
  FieldFn f = [](double, double u) { return 1.0 - u; };
  FieldFn v = [](double, double u) { return u; };
  FieldFn g = [](double, double u) { return u * (1 - u) * (1 - u); };
};

GridField random_positive(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.2, 2.0);
  GridField w(g);
  for (double& v : w.values()) v = U(rng);
  return w;
}

}  // namespace

TEST_CASE("general ratio examples", "[lab]") {
  const Grid g(0, 1, 50);
  const LogisticTuple t;
  CHECK(general_ratio(t.E, t.g, t.f, t.v, 2.0, GridField(g, 1.0)).ratio == 0.0);
  CHECK(general_ratio(t.E, t.g, t.f, t.v, 2.0, GridField(g, 2.0)).ratio == Approx(0.25).epsilon(1e-13));
  const double eps = 1e-3;
  const RatioValue r = general_ratio(t.E, t.g, t.f, t.v, 2.0, GridField(g, 1.0 + eps));
  CHECK(r.ratio == Approx(0.5 / (1.0 + eps)).epsilon(1e-9));
  CHECK(r.ratio == Approx(0.4995005).epsilon(1e-6));

  // The model-driven instance agrees with the hand-written tuple.
  const auto logi = testing::logistic("1");
  const GridField m(g, 1.0);
  const GridField u = testing::field(g, "1+0.4*cos(pi*x)");
  const RatioValue a = gradient_flow_ratio(logi, m, u, 0.01);
  const RatioValue b = general_ratio(t.E, t.g, t.f, t.v, 2.0, u);
  CHECK(a.ratio == Approx(b.ratio).epsilon(1e-12));
  CHECK(a.numerator == Approx(b.numerator).epsilon(1e-12));

  // equilibrium of a heterogeneous model
  const auto het = testing::logistic("1+0.5*sin(pi*x)");
  const GridField mh = solve_m(het, g).values;
  CHECK(gradient_flow_ratio(het, mh, mh, 0.1).ratio <= 1e-20);
}

TEST_CASE("general ratio edge cases", "[lab]") {
  const Grid g(0, 1, 20);
  const FieldFn zero = [](double, double) { return 0.0; };
  const FieldFn one = [](double, double) { return 1.0; };
  const RatioValue r = general_ratio(one, zero, one, zero, 2.0, GridField(g, 1.0));
  CHECK(r.unbounded);
  CHECK(std::isinf(r.ratio));
  const RatioValue z = general_ratio(zero, zero, one, zero, 2.0, GridField(g, 1.0));
  CHECK_FALSE(z.unbounded);
  CHECK(z.ratio == 0.0);
  GridField u(g, 1.0);
  u[3] = 0.0;
  CHECK_THROWS_AS(general_ratio(one, one, one, one, 2.0, u), DomainError);
  CHECK_THROWS_AS(general_ratio(one, one, one, one, 0.5, GridField(g, 1.0)), DomainError);
}

TEST_CASE("v_sigma", "[lab]") {
  CHECK(v_sigma(0.0, 0.3) == 0.0);
  CHECK(v_sigma(0.3, 0.3) == Approx(0.3).epsilon(1e-15));
  CHECK(v_sigma(0.05, 0.1) == Approx(0.025).epsilon(1e-14));
  CHECK(v_sigma(2.5, 0.1) == Approx(2.5).epsilon(1e-15));
  // continuous and nondecreasing on a 1e4-point probe grid
  const double sigma = 0.37;
  double prev = v_sigma(0.0, sigma);
  for (int k = 1; k <= 10000; ++k) {
    const double xi = 2.0 * k / 10000.0;
    const double v = v_sigma(xi, sigma);
    CHECK(v >= prev);
    CHECK(v - prev <= 2.0 * (2.0 / 10000.0));
    prev = v;
  }
}

TEST_CASE("estimate_C on the equilibrium alone", "[lab]") {
  const auto model = testing::logistic("1+0.5*sin(pi*x)");
  const Grid g(0, 1, 40);
  FunctionFamily fam;
  fam.kind = FamilyKind::TrajectorySamples;
  fam.l1_floor = 0.1;
  fam.fields = {solve_m(model, g).values};
  const RatioReport rep = estimate_C(model, fam, g, 10);
  CHECK(rep.C == 0.0);
  CHECK(rep.ascent_steps == 0);
  CHECK(rep.samples.size() == 1);
  CHECK_THROWS_AS(estimate_C(model, FunctionFamily{}, g, 10), DomainError);
}

TEST_CASE("estimate_C on the seeded fourier family", "[lab]") {
  const auto model = testing::logistic("1");
  const Grid g(0, 1, 64);
  FunctionFamily fam;
  fam.kind = FamilyKind::FourierRandom;
  fam.l1_floor = 0.5;
  fam.seed = 42;
  EstimateOptions o;
  o.ascent_steps = 5;
  const RatioReport a = estimate_C(model, fam, g, 500, o);
  o.threads = 4;
  const RatioReport b = estimate_C(model, fam, g, 500, o);
  REQUIRE(a.samples.size() == 500);
  CHECK(std::isfinite(a.C));
  CHECK(a.C > 0.0);
  CHECK(std::abs(a.C - b.C) <= 1e-10 * a.C);
  for (const auto& s : a.samples) CHECK(s.ratio <= a.C);
  REQUIRE(a.witness);
  const RatioValue again = entropy_ratio(BoundModel(model, g), GridField(g, 1.0), *a.witness);
  CHECK(std::abs(again.ratio - a.C) <= 1e-10 * a.C);
  CHECK(l1_norm(*a.witness) >= fam.l1_floor);
  REQUIRE(a.out_of_sample);
  CHECK(a.out_of_sample->draws == 100);
  CHECK(a.summary().find("empirical_C: ") != std::string::npos);
}

TEST_CASE("trajectory family is consistent with the observed decay", "[lab]") {
  const auto model = testing::logistic("1+0.5*sin(pi*x)");
  const Grid g(0, 1, 50);
  SolverConfig c;
  c.t_end = 3.0;
  c.output_every = 0.05;
  const auto rec = integrate(model, testing::field(g, "1.3+0.3*cos(pi*x)"), c, {{}, true});
  FunctionFamily fam;
  fam.kind = FamilyKind::TrajectorySamples;
  fam.l1_floor = 0.25;
  fam.fields = rec.fields;
  EstimateOptions o;
  o.ascent_steps = 0;
  const RatioReport rep = estimate_C(model, fam, g, static_cast<int>(rec.fields.size()), o);
  REQUIRE(rep.samples.size() == rec.fields.size());
  for (const auto& s : rep.samples) CHECK(s.ratio <= rep.C);
  const double h0 = rec.samples.front().entropy;
  for (const auto& s : rec.samples) CHECK(s.entropy <= h0 * std::exp(-s.t / rep.C) * (1.0 + 1e-2));
}

TEST_CASE("family invariants", "[lab]") {
  const Grid g(0, 2, 37);
  FunctionFamily fam;
  fam.kind = FamilyKind::FourierRandom;
  fam.base = 0.1;
  fam.amplitude = 1.0;
  fam.l1_floor = 0.8;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    fam.seed = seed;
    for (const auto& w : fam.generate(g, 50)) {
      CHECK(w.min() >= 0.0);
      CHECK(l1_norm(w) >= fam.l1_floor);
    }
  }
  // stream 1 differs from stream 0
  fam.seed = 9;
  CHECK(fam.generate(g, 1, 0)[0].values() != fam.generate(g, 1, 1)[0].values());
  CHECK(fam.generate(g, 3, 0)[2].values() == fam.generate(g, 3, 0)[2].values());

  FunctionFamily bump;
  bump.kind = FamilyKind::BumpScaled;
  bump.profile = SpatialProfile::parse("exp(-20*(x-1)^2)");
  bump.scales = {1.0, 0.1, 0.01};
  bump.l1_floor = 0.2;
  const auto fields = bump.generate(g, 10);
  REQUIRE(fields.size() == 3);
  for (const auto& w : fields) CHECK(l1_norm(w) >= 0.2);
}

TEST_CASE("blow-up scan", "[lab]") {
  const Grid g(0, 1, 32);
  std::vector<double> scales;
  for (int k = 0; k <= 20; ++k) scales.push_back(std::ldexp(1.0, -k));
  SECTION("logistic: ratio 1/(2s)") {
    const RatioReport rep = blow_up_scan(testing::logistic("1"), GridField(g, 1.0), scales);
    REQUIRE(rep.samples.size() == scales.size());
    CHECK(rep.samples[0].ratio == 0.0);
    for (std::size_t k = 1; k < scales.size(); ++k) {
      const double s = scales[k];
      CHECK(rep.samples[k].entropy == Approx(testing::oracle_integral([&](double) { return 0.5 * (s - 1) * (s - 1); }, 0.0, 1.0)).epsilon(1e-10));
      CHECK(rep.samples[k].ratio == Approx(1.0 / (2.0 * s)).epsilon(1e-9));
    }
    CHECK(rep.blow_up_detected);
  }
  SECTION("constant scales") {
    const RatioReport rep = blow_up_scan(testing::logistic("1"), testing::field(g, "1+0.5*cos(pi*x)"),
                                         std::vector<double>(21, 1.0));
    CHECK_FALSE(rep.blow_up_detected);
  }
  SECTION("Boltzmann") {
    CHECK(blow_up_scan(testing::boltzmann("0"), GridField(g, 1.0), scales).blow_up_detected);
  }
  SECTION("separated sequence does not blow up") {
    std::vector<double> mild;
    for (int k = 0; k <= 20; ++k) mild.push_back(2.0 - 0.05 * k);
    CHECK_FALSE(blow_up_scan(testing::logistic("1"), GridField(g, 1.0), mild).blow_up_detected);
  }
  SECTION("parallel evaluation matches") {
    const auto a = blow_up_scan(testing::boltzmann("x"), testing::field(g, "1+0.3*cos(pi*x)"), scales, 1);
    const auto b = blow_up_scan(testing::boltzmann("x"), testing::field(g, "1+0.3*cos(pi*x)"), scales, 3);
    for (std::size_t k = 0; k < a.samples.size(); ++k) CHECK(a.samples[k].ratio == b.samples[k].ratio);
  }
}

TEST_CASE("ratio is invariant under reversal for symmetric models", "[lab]") {
  const Grid g(0, 1, 60);
  for (const auto& model : {testing::logistic("1+0.5*sin(pi*x)"), testing::boltzmann("(x-0.5)^2")}) {
    const BoundModel bm(model, g);
    const GridField m = solve_m(model, g).values;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const GridField u = random_positive(g, seed);
      GridField r(g);
      for (int i = 0; i < g.n_cells(); ++i) r[i] = u[g.n_cells() - 1 - i];
      CHECK(entropy_ratio(bm, m, r).ratio == Approx(entropy_ratio(bm, m, u).ratio).epsilon(1e-12));
    }
  }
}

TEST_CASE("lab report CSV", "[lab]") {
  const Grid g(0, 1, 16);
  const RatioReport rep = blow_up_scan(testing::logistic("1"), GridField(g, 1.0), {1.0, 0.5, 0.25});
  const auto dir = testing::temp_dir("lab_csv");
  write_lab_report_csv((dir / "r.csv").string(), rep);
  const std::string s = testing::slurp(dir / "r.csv");
  CHECK(s.rfind("# columns: sample_id,l1_norm,entropy,production,ratio\n", 0) == 0);
  CHECK(testing::read_csv_rows(dir / "r.csv").size() == 3);
}
