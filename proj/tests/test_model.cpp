#include "support.hpp"

#include <doctest.h>

using namespace minlqg;
using namespace minlqg::test;

TEST_CASE("weighted_norm_sq uses the half convention") {
  CHECK(weighted_norm_sq(Vector::Zero(3), Matrix::Identity(3, 3)) == 0.0);
  CHECK(weighted_norm_sq(scalar(2.0), Matrix::Constant(1, 1, 500.0)) == doctest::Approx(1000.0));
  CHECK(weighted_norm_sq(vec({1.0, 1.0}), Matrix::Identity(2, 2)) == doctest::Approx(1.0));
  CHECK(weighted_norm_sq(vec({1.0, -2.0}), Matrix::Identity(2, 2)) ==
        weighted_norm_sq(vec({-1.0, 2.0}), Matrix::Identity(2, 2)));
  CHECK_THROWS_AS(weighted_norm_sq(vec({1.0, 1.0}), Matrix::Identity(3, 3)), ValidationError);
}

TEST_CASE("nearest_destination breaks ties to the lowest index") {
  const DestinationSet dest({scalar(-10.0), scalar(10.0)}, Matrix::Constant(1, 1, 500.0));
  CHECK(nearest_destination(scalar(-10.0), dest) == 0);
  CHECK(nearest_destination(scalar(0.0), dest) == 0);
  CHECK(nearest_destination(scalar(0.3), dest) == 1);
  CHECK_THROWS_AS(nearest_destination(vec({0.0, 0.0}), dest), ValidationError);
}

TEST_CASE("Voronoi membership is scale invariant and partitions samples") {
  const std::vector<Vector> pts{vec({0.0, 0.0}), vec({3.0, 1.0}), vec({-1.0, 4.0})};
  Matrix M(2, 2);
  M << 2.0, 0.5, 0.5, 1.0;
  const DestinationSet a(pts, M);
  const DestinationSet b(pts, 37.0 * M);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int i = 0; i < 2000; ++i) {
    const Vector x = vec({u(rng), u(rng)});
    const std::size_t j = a.nearest(x);
    CHECK(j == b.nearest(x));
    int owners = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double dk = weighted_norm_sq(x - pts[k], M);
      bool in_cell = true;
      for (std::size_t m = 0; m < pts.size(); ++m) {
        const double dm = weighted_norm_sq(x - pts[m], M);
        if (dm < dk || (dm == dk && m < k)) in_cell = false;
      }
      owners += in_cell;
    }
    CHECK(owners == 1);
  }
}

TEST_CASE("destination set rejects duplicates and scalar intervals are Voronoi cells") {
  CHECK_THROWS_AS(DestinationSet({scalar(1.0), scalar(1.0)}, Matrix::Identity(1, 1)),
                  ValidationError);
  const DestinationSet d({scalar(-10.0), scalar(10.0), scalar(2.0)}, Matrix::Identity(1, 1));
  CHECK(d.interval(0).second == doctest::Approx(-4.0));
  CHECK(d.interval(2).first == doctest::Approx(-4.0));
  CHECK(d.interval(2).second == doctest::Approx(6.0));
  CHECK(std::isinf(d.interval(1).second));
}

TEST_CASE("validate_params derives eta") {
  Scenario s = reference_scenario();
  const auto report = validate_params(s.population, s.destinations, s.grid);
  REQUIRE(report.ok());
  CHECK(report.eta[0] == doctest::Approx(0.04 / (5.0 * 2.25)).epsilon(1e-12));
  CHECK(report.eta[0] == doctest::Approx(3.5556e-3).epsilon(1e-4));

  AgentClassParams id;
  id.A = Matrix::Zero(2, 2);
  id.B = id.R = id.sigma = id.M = Matrix::Identity(2, 2);
  id.Q = Matrix::Zero(2, 2);
  Population pop{{id}, {1.0}};
  const DestinationSet dest({vec({1.0, 0.0}), vec({-1.0, 0.0})}, id.M);
  const auto r2 = validate_params(pop, dest, TimeGrid(1.0, 10));
  REQUIRE(r2.ok());
  CHECK(r2.eta[0] == doctest::Approx(1.0));
}

TEST_CASE("validate_params reports every violation with the class index") {
  Scenario s = reference_scenario();
  AgentClassParams bad = s.population.classes[0];
  bad.Q = Matrix::Constant(1, 1, -1.0);
  Population pop{{s.population.classes[0], bad}, {0.5, 0.5}};
  auto report = validate_params(pop, s.destinations, s.grid);
  REQUIRE(report.issues.size() == 1);
  CHECK(report.issues[0].class_index == 1);
  CHECK(report.issues[0].message == "Q not psd");

  AgentClassParams two = s.population.classes[0];
  two.A = Matrix::Zero(2, 2);
  two.B = Matrix::Identity(2, 2);
  two.R = Matrix::Identity(2, 2);
  two.Q = Matrix::Zero(2, 2);
  two.M = Matrix::Identity(2, 2);
  two.sigma = Matrix::Identity(2, 2);
  two.sigma(1, 1) = 2.0;  // B R^-1 B' is not a multiple of sigma sigma'
  Population pop2{{two}, {1.0}};
  const DestinationSet dest2({vec({1.0, 0.0}), vec({-1.0, 0.0})}, two.M);
  report = validate_params(pop2, dest2, s.grid);
  REQUIRE_FALSE(report.ok());
  CHECK(report.describe().find("noise not aligned with control") != std::string::npos);
  CHECK(report.describe().find("eta sigma sigma'") != std::string::npos);

  Population weights{{s.population.classes[0], s.population.classes[0]}, {0.5, 0.4}};
  report = validate_params(weights, s.destinations, s.grid);
  CHECK_FALSE(report.ok());

  Population spd = s.population;
  spd.classes[0].R = Matrix::Constant(1, 1, 0.0);
  CHECK_THROWS_AS(require_valid(spd, s.destinations, s.grid), ValidationError);
}

TEST_CASE("validate_params accepts the simulation-study parameter sets") {
  for (double sigma : {1.5, 3.0, 5.0}) {
    for (double Q : {0.1, 10.0, 20.0, 25.0}) {
      Scenario s = reference_scenario(Q, sigma);
      CHECK(validate_params(s.population, s.destinations, s.grid).ok());
      CHECK(s.population.classes[0].eta == doctest::Approx(0.04 / (5.0 * sigma * sigma)));
    }
  }
}

TEST_CASE("time grid and node series") {
  const TimeGrid g(2.0, 4);
  CHECK(g.n_nodes() == 5);
  CHECK(g.dt() == doctest::Approx(0.5));
  CHECK(g.time(4) == 2.0);
  for (std::size_t i = 1; i < g.n_nodes(); ++i) CHECK(g.time(i) > g.time(i - 1));
  CHECK_THROWS_AS(TimeGrid(0.0, 4), ValidationError);
  CHECK_THROWS_AS(TimeGrid(1.0, 0), ValidationError);

  std::vector<double> cubic;
  for (std::size_t i = 0; i < g.n_nodes(); ++i) cubic.push_back(std::pow(g.time(i), 3));
  const ScalarSeries s(g, cubic);
  CHECK(s.linear(0.25) == doctest::Approx(0.5 * 0.125));
  CHECK(s.cubic(0.25) == doctest::Approx(std::pow(0.25, 3)));
  CHECK(s.cubic(1.9) == doctest::Approx(std::pow(1.9, 3)));
  CHECK(s.linear(5.0) == s[4]);
}

TEST_CASE("config parsing round-trips and rejects malformed input") {
  const Scenario s = reference_scenario(10.0, 3.0, 500.0, 100);
  const Scenario t = parse_scenario(scenario_to_json(s));
  CHECK(t.population.classes[0].Q(0, 0) == 10.0);
  CHECK(t.population.classes[0].sigma(0, 0) == 3.0);
  CHECK(t.grid == s.grid);
  CHECK(t.population.classes[0].eta == doctest::Approx(s.population.classes[0].eta));

  const std::string bare = R"({"classes":[{"A":0.1,"B":0.2,"sigma":1.5,"Q":0.1,"R":5,"M":500}],
    "weights":[1],"destinations":[-10,10],"initial":{"kind":"gaussian","mean":0.3,"cov":1},
    "horizon":2,"n_steps":50})";
  const Scenario b = parse_scenario(bare);
  CHECK(b.scalar_binary());
  CHECK(b.destinations.point(1)(0) == 10.0);

  CHECK_THROWS_AS(parse_scenario("{"), ValidationError);
  CHECK_THROWS_AS(parse_scenario(R"({"classes":[]})"), ValidationError);
  std::string wrong = bare;
  wrong.replace(wrong.find("\"Q\":0.1"), 7, "\"Q\":-1");
  CHECK_THROWS_AS(parse_scenario(wrong), ValidationError);
}

TEST_CASE("with_parameter rescales and re-derives eta") {
  const Scenario s = reference_scenario();
  const Scenario m = with_parameter(s, "M", 50.0);
  CHECK(m.population.classes[0].M(0, 0) == 50.0);
  CHECK(m.destinations.metric()(0, 0) == 50.0);
  const Scenario sg = with_parameter(s, "sigma", 3.0);
  CHECK(sg.population.classes[0].eta == doctest::Approx(0.04 / (5.0 * 9.0)));
  CHECK_THROWS_AS(with_parameter(s, "nope", 1.0), ValidationError);
}

TEST_CASE("default Fokker-Planck domain") {
  const Scenario s = reference_scenario();
  const SpatialGrid g = s.default_fp_grid();
  const double pad = 5.0 * (1.5 * std::sqrt(2.0) + 1.0);
  CHECK(g.lo == doctest::Approx(-10.0 - pad));
  CHECK(g.hi == doctest::Approx(10.0 + pad));
  CHECK(g.nodes == 801);
}
