#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "../oracle.hpp"
#include "naklab/bounds.hpp"

using namespace naklab;

namespace {

SimParams cell(double beta, double f_delta, std::int64_t tau, double margin = 0.1) {
  SimParams p;
  p.beta = beta;
  p.delta = 1.0;
  p.mining_rate = f_delta;
  p.tau = tau;
  p.margin = margin;
  return p;
}

double rel_err(double got, const oracle::Real& want) {
  return static_cast<double>(boost::multiprecision::abs((oracle::Real(got) - want) / want));
}

}  // namespace

TEST_CASE("closed forms at the reference cells") {
  const SimParams a = cell(0.25, 1.0 / 60.0, 1);
  CHECK(gamma(a) == doctest::Approx(0.012422199506118572).epsilon(1e-13));
  CHECK(eta(a) == doctest::Approx(0.012344722506173518).epsilon(1e-13));

  const SimParams b = cell(0.25, 0.2, 2);
  CHECK(gamma(b) == doctest::Approx(0.067035509903495085).epsilon(1e-13));
  CHECK(eta(b) == doctest::Approx(0.059888716406953278).epsilon(1e-13));

  CHECK(safety_threshold(0.25, 0.0) == doctest::Approx(1.4648163848908129).epsilon(1e-13));
}

TEST_CASE("gamma and eta match the high-precision oracle over a grid") {
  for (double beta : {0.0, 0.1, 0.25, 0.4, 0.49}) {
    for (double fd : {0.001, 1.0 / 60.0, 0.2, 1.0, 3.0}) {
      for (std::int64_t tau : {1, 2, 5, 64}) {
        const SimParams p = cell(beta, fd, tau);
        CAPTURE(beta);
        CAPTURE(fd);
        CAPTURE(tau);
        CHECK(rel_err(gamma(p), oracle::er(beta, fd, tau)) <= 1e-12);
        CHECK(rel_err(eta(p), oracle::uer(beta, fd, tau)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("threshold matches the oracle") {
  for (double beta : {0.05, 0.25, 0.33, 0.45}) {
    for (double margin : {0.0, 0.1, 0.5}) {
      const double t = safety_threshold(beta, margin);
      CHECK(rel_err(t, oracle::threshold(beta, margin)) <= 1e-12);
    }
  }
  CHECK(std::isinf(safety_threshold(0.0, 0.1)));
}

TEST_CASE("the safety test agrees with its threshold form") {
  for (double beta = 0.02; beta < 0.5; beta += 0.04) {
    for (double fd = 0.05; fd < 4.0; fd *= 1.3) {
      for (std::int64_t tau : {1, 2, 3, 8}) {
        const SimParams p = cell(beta, fd, tau);
        const SafetyCheck s = safety_condition(p);
        const double lhs = fd / static_cast<double>(tau) * static_cast<double>(2 * tau - 1);
        if (std::abs(lhs - s.threshold) < 1e-9) continue;
        CHECK(s.ok == (lhs < s.threshold));
        CHECK(s.ok == (eta(p) > (1 + p.margin) * p.lambda_z()));
      }
    }
  }
  CHECK(safety_condition(cell(0.0, 5.0, 1)).ok);
}

TEST_CASE("eta never exceeds gamma and both fall in [0,1]") {
  for (double beta : {0.0, 0.2, 0.45}) {
    for (double fd : {0.01, 0.3, 2.0, 20.0}) {
      for (std::int64_t tau : {1, 2, 7}) {
        const SimParams p = cell(beta, fd, tau);
        CHECK(eta(p) <= gamma(p));
        CHECK(gamma(p) >= 0.0);
        CHECK(gamma(p) <= 1.0);
      }
    }
  }
}

TEST_CASE("tau = 1 reduces to single-round point masses") {
  const SimParams p = cell(0.3, 0.7, 1);
  const double l = p.lambda_h();
  CHECK(gamma(p) == doctest::Approx(1 - std::exp(-l)).epsilon(1e-14));
  CHECK(eta(p) == doctest::Approx(l * std::exp(-l)).epsilon(1e-14));
}

TEST_CASE("quality floor at the documented cell") {
  const auto q = quality_floor(cell(0.25, 0.2, 2, 0.1));
  REQUIRE(q.has_value());
  CHECK(*q == doctest::Approx(0.58976966029512949).epsilon(1e-12));
  CHECK(*quality_floor(cell(0.0, 0.2, 2)) == 1.0);
  CHECK_FALSE(quality_floor(cell(0.49, 5.0, 1)).has_value());
}

TEST_CASE("Chernoff tails") {
  CHECK(chernoff_indicator(10, 0.5, Tail::Upper) == doctest::Approx(std::exp(-2.5 / 3)).epsilon(1e-14));
  CHECK(chernoff_indicator(10, 0.5, Tail::Lower) == doctest::Approx(0.28650479686019010).epsilon(1e-14));
  CHECK(chernoff_dependent_sum(10, 3, 0.5) == doctest::Approx(0.28650479686019010).epsilon(1e-14));
  CHECK(chernoff_poisson(10, 0.5) == doctest::Approx(0.43459820850707822).epsilon(1e-14));
  CHECK(chernoff_indicator(20, 0.3, Tail::Lower) == doctest::Approx(0.40656965974059911).epsilon(1e-14));

  CHECK_THROWS_AS(chernoff_indicator(0, 0.5, Tail::Upper), std::domain_error);
  CHECK_THROWS_AS(chernoff_indicator(1, 0.0, Tail::Upper), std::domain_error);
  CHECK_THROWS_AS(chernoff_indicator(1, 1.0, Tail::Lower), std::domain_error);
  CHECK_THROWS_AS(chernoff_dependent_sum(1, 0, 0.5), std::domain_error);
  CHECK_THROWS_AS(chernoff_poisson(-1, 0.5), std::domain_error);
}

TEST_CASE("composed bounds follow their building blocks") {
  const SimParams p = cell(0.25, 0.2, 2);
  const double g = gamma(p), e = eta(p);
  CHECK(er_window_bound(p, 100, 0.5) == doctest::Approx(std::exp(-0.125 * g * 100)).epsilon(1e-14));
  CHECK(uer_window_bound(p, 100, 0.5) == doctest::Approx(std::exp(-0.125 * e * 100)).epsilon(1e-14));
  CHECK(chain_growth_bound(p, 100, 0.3) == er_window_bound(p, 100, 0.3));
  const double race = std::exp(-(0.125 * 0.125) * e * 100 / 2) +
                      std::exp(-(0.125 * 0.125) * p.lambda_z() * 3 * 100 / 3);
  CHECK(race_bound(p, 100, 0.5) == doctest::Approx(race).epsilon(1e-14));
  const double quality = std::exp(-(0.025 * 0.025) * g * 500 / 2) +
                         std::exp(-(0.025 * 0.025) * p.lambda_z() * 2 * 500 / 3);
  CHECK(chain_quality_bound(p, 500, 0.1) == doctest::Approx(quality).epsilon(1e-14));
  // No adversary: only the UER side remains.
  const SimParams honest = cell(0.0, 0.2, 2);
  CHECK(race_bound(honest, 100, 0.5) == uer_window_bound(honest, 100, 0.125));
}

TEST_CASE("per-delay quantities approach their continuous limits as tau grows") {
  const std::vector<std::int64_t> taus = {1, 2, 4, 8, 16, 64, 256, 1024};
  const TauLimitTable t = tau_limit_check(0.25, 0.2, taus);
  REQUIRE(t.rows.size() == taus.size());
  CHECK(t.limit_tau_gamma == doctest::Approx(0.15 * std::exp(-0.15)).epsilon(1e-14));
  CHECK(t.limit_tau_eta == doctest::Approx(0.15 * std::exp(-0.3)).epsilon(1e-14));
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    CHECK(t.rows[i].tau_gamma < t.rows[i - 1].tau_gamma);
    CHECK(t.rows[i].tau_eta < t.rows[i - 1].tau_eta);
    CHECK(t.rows[i].tau_gamma > t.limit_tau_gamma);
    CHECK(t.rows[i].tau_eta > t.limit_tau_eta);
    CHECK(t.rows[i].f_delta_threshold < t.rows[i - 1].f_delta_threshold);
  }
  CHECK(t.rows.back().tau_gamma == doctest::Approx(0.1291157).epsilon(1e-6));
  CHECK(t.rows.back().tau_eta == doctest::Approx(0.1111390).epsilon(1e-6));
  CHECK(t.rows.back().tau_gamma - t.limit_tau_gamma < 1e-5);
  CHECK(t.limit_threshold == doctest::Approx(safety_threshold(0.25, 0.0) / 2).epsilon(1e-14));
}
