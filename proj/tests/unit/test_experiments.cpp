#include <doctest.h>

#include <cmath>

#include "naklab/bounds.hpp"
#include "naklab/experiments.hpp"

using namespace naklab;

namespace {

SimParams cell(double beta, double f_delta, std::int64_t tau, double margin = 0.1, Round horizon = 2000) {
  SimParams p;
  p.beta = beta;
  p.mining_rate = f_delta;
  p.tau = tau;
  p.margin = margin;
  p.horizon = horizon;
  return p;
}

VerifierSpec small(std::int64_t trials, std::int64_t m = 50) {
  VerifierSpec s;
  s.trials = trials;
  s.m = m;
  return s;
}

std::string field(const std::string& detail, const std::string& key) {
  const auto at = detail.find(key + "=");
  REQUIRE(at != std::string::npos);
  const auto start = at + key.size() + 1;
  return detail.substr(start, detail.find(' ', start) - start);
}

void check_shape(const ExperimentResult& r) {
  CHECK(r.ci_low <= r.estimate);
  CHECK(r.estimate <= r.ci_high);
}

}  // namespace

TEST_CASE("verifiers are deterministic and report the bounds-module values") {
  const SimParams p = cell(0.25, 0.2, 2, 0.5);
  const VerifierSpec spec = small(200, 40);
  for (const auto& name : verifier_names()) {
    const auto a = run_verifier(name, p, spec);
    const auto b = run_verifier(name, p, spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CAPTURE(name);
      CHECK(a[i].events == b[i].events);
      CHECK(a[i].estimate == b[i].estimate);
      CHECK(a[i].detail == b[i].detail);
      CHECK(a[i].master_seed == p.seed);
      check_shape(a[i]);
    }
  }
  CHECK(*verify_er_rate(p, spec).analytic_bound == gamma(p));
  CHECK(*verify_uer_rate(p, spec).analytic_bound == eta(p));
  CHECK(*verify_chernoff_er(p, spec).analytic_bound == er_window_bound(p, 40, 0.5));
  CHECK(*verify_chernoff_uer(p, spec).analytic_bound == uer_window_bound(p, 40, 0.5));
  CHECK(*verify_race(p, spec).analytic_bound == race_bound(p, 40, 0.5));
  CHECK(*verify_chain_growth(p, spec).analytic_bound == chain_growth_bound(p, 40, 0.5));
  CHECK_THROWS_AS(run_verifier("nope", p, spec), std::invalid_argument);
}

TEST_CASE("thread count does not change results") {
  const SimParams p = cell(0.3, 0.5, 1, 0.1, 300);
  VerifierSpec a = small(100);
  a.k_list = {1, 2};
  VerifierSpec b = a;
  a.jobs = 1;
  b.jobs = 4;
  const auto ra = verify_safety(p, a);
  const auto rb = verify_safety(p, b);
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].events == rb[i].events);
}

TEST_CASE("tau = 1 rates reduce to Poisson point masses") {
  const SimParams p = cell(0.2, 0.8, 1, 0.1, 10000);
  const double l = p.lambda_h();
  const ExperimentResult er = verify_er_rate(p, small(30));
  const ExperimentResult uer = verify_uer_rate(p, small(30));
  CHECK(*er.analytic_bound == doctest::Approx(1 - std::exp(-l)).epsilon(1e-14));
  CHECK(*uer.analytic_bound == doctest::Approx(l * std::exp(-l)).epsilon(1e-14));
  CHECK(uer.events <= er.events);
}

TEST_CASE("rate verifiers pass with and without an adversary share") {
  for (double beta : {0.0, 0.5}) {
    const ExperimentResult r = verify_er_rate(cell(beta, 0.4, 2, 0.1, 10000), small(50));
    CHECK(r.verdict == Verdict::Pass);
  }
}

TEST_CASE("extreme delta makes the ER tail event nearly impossible") {
  const ExperimentResult r = verify_chernoff_er(cell(0.25, 0.2, 2, 0.99), small(2000, 400));
  CHECK(r.events == 0);
  // 2000 windows cannot resolve a bound near 2e-6.
  CHECK(r.verdict == Verdict::Inconclusive);
}

TEST_CASE("race verifier gating") {
  const ExperimentResult unsafe = verify_race(cell(0.45, 2.0, 1, 0.5), small(2000, 50));
  CHECK(unsafe.verdict == Verdict::Inconclusive);
  CHECK(unsafe.estimate > 0.5);
  const ExperimentResult honest = verify_race(cell(0.0, 1.0, 1, 0.5), small(2000, 50));
  CHECK(honest.verdict == Verdict::Pass);
  CHECK(honest.events == 0);
  const ExperimentResult safe = verify_race(cell(0.2, 1.0, 1, 0.5), small(2000, 50));
  CHECK(safe.verdict == Verdict::Pass);
}

TEST_CASE("chain quality: passive adversary and no adversary keep the chain honest") {
  VerifierSpec spec = small(100, 100);
  spec.strategy = "passive";
  const ExperimentResult passive = verify_chain_quality(cell(0.25, 0.2, 2), spec);
  CHECK(field(passive.detail, "min_fraction") == "1");
  CHECK(passive.events == 0);

  const SimParams honest = cell(0.0, 0.2, 2);
  CHECK(*quality_floor(honest) == 1.0);
  const ExperimentResult none = verify_chain_quality(honest, small(100, 100));
  CHECK(field(none.detail, "min_fraction") == "1");
  CHECK(none.events == 0);
  CHECK(none.verdict == Verdict::Pass);

  const ExperimentResult gated = verify_chain_quality(cell(0.49, 5.0, 1), small(20, 20));
  CHECK(gated.verdict == Verdict::Inconclusive);
}

TEST_CASE("chain growth is met almost always with delta near 1") {
  const ExperimentResult r = verify_chain_growth(cell(0.25, 0.2, 2, 0.95), small(300, 100));
  CHECK(r.events == 0);
}

TEST_CASE("safety without adversarial power records no violations") {
  VerifierSpec spec = small(200);
  const auto rs = verify_safety(cell(0.0, 2.0, 2, 0.1, 500), spec);
  REQUIRE(rs.size() == spec.k_list.size());
  for (const auto& r : rs) {
    CHECK(r.events == 0);
    CHECK(r.verdict == Verdict::Pass);
  }
}

TEST_CASE("honest-mimic causes no violations at a safe cell") {
  VerifierSpec spec = small(300);
  spec.strategy = "honest-mimic";
  spec.k_list = {1, 2, 4};
  for (const auto& r : verify_safety(cell(0.2, 0.3, 1, 0.1, 1000), spec)) CHECK(r.events == 0);
}

TEST_CASE("double-spend succeeds at a fast unsafe cell and the verdict stays open") {
  VerifierSpec spec = small(300);
  spec.k_list = {1, 2};
  const auto rs = verify_safety(cell(0.45, 1.0, 1, 0.1, 500), spec);
  CHECK(rs.front().events > 0);
  for (const auto& r : rs) {
    CHECK(r.verdict == Verdict::Inconclusive);
    CHECK(field(r.detail, "certificate_failures") == "0");
  }
}
