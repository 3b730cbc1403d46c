#include <doctest.h>

#include <omp.h>

#include <random>
#include <vector>

#include "../oracle.hpp"
#include "naklab/bounds.hpp"
#include "naklab/indicators.hpp"

using namespace naklab;

namespace {

using H = std::vector<std::uint32_t>;

std::vector<int> uer_codes(const std::vector<Uer>& y) {
  std::vector<int> out;
  for (Uer u : y) out.push_back(static_cast<int>(u));
  return out;
}

H random_honest(std::mt19937_64& rng, std::size_t n, double mean) {
  std::poisson_distribution<std::uint32_t> d(mean);
  H h(n);
  for (auto& x : h) x = d(rng);
  return h;
}

// ER straight from the definition, without any window bookkeeping.
bool is_er(const H& h, std::int64_t r, std::int64_t tau) {
  if (h[r] == 0) return false;
  for (std::int64_t s = r - tau + 1; s < r; ++s)
    if (s >= 0 && h[s] > 0) return false;
  return true;
}

}  // namespace

TEST_CASE("ER examples") {
  CHECK(detect_er(H{0, 1, 0, 2, 1}, 2) == std::vector<std::uint8_t>{0, 1, 0, 1, 0});
  CHECK(detect_er(H{3, 0, 0}, 1) == std::vector<std::uint8_t>{1, 0, 0});
  CHECK(detect_er(H{1, 1, 1}, 3) == std::vector<std::uint8_t>{1, 0, 0});
  CHECK(detect_er(H{}, 2).empty());
}

TEST_CASE("UER examples") {
  CHECK(uer_codes(detect_uer(H{0, 1, 0, 0, 2, 0, 1, 0}, 2)) == std::vector<int>{0, 1, 0, 0, 0, 0, 1, 0});
  CHECK(uer_codes(detect_uer(H{1, 0, 0, 1}, 1)) == std::vector<int>{1, 0, 0, 1});
  CHECK(uer_codes(detect_uer(H{0, 0, 1}, 3)) == std::vector<int>{0, 0, 2});
  // A forward conflict already inside the trace settles the round.
  CHECK(uer_codes(detect_uer(H{0, 0, 1, 0}, 3)) == std::vector<int>{0, 0, 2, 0});
  CHECK(uer_codes(detect_uer(H{0, 0, 1, 1}, 3)) == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("indicator series bookkeeping") {
  RoundTallies t;
  t.honest = {0, 1, 0, 0, 1, 0};
  t.adversarial = {0, 0, 0, 0, 0, 0};
  const IndicatorSeries s = detect_indicators(t, 2);
  CHECK(s.valid_uer_upto == 4);
  CHECK(count_er(s.er, 0, 5) == 2);
  CHECK(count_uer(s.uer, 0, 5) == 2);
  CHECK(count_er(s.er, -10, 100) == 2);
  CHECK(count_er(s.er, 3, 2) == 0);
  CHECK(sum_rounds(t.honest, 1, 4) == 2);
  CHECK(detect_indicators(RoundTallies{}, 3).valid_uer_upto == -1);
}

TEST_CASE("kernels agree with the raw definition and with each other") {
  std::mt19937_64 rng(7);
  for (std::int64_t tau : {1, 2, 3, 5, 17}) {
    for (double mean : {0.02, 0.3, 1.5}) {
      const H h = random_honest(rng, 3000, mean);
      const auto x = detect_er(h, tau);
      const auto y = detect_uer(h, tau);
      for (std::size_t r = 0; r < h.size(); ++r) CHECK(x[r] == (is_er(h, r, tau) ? 1 : 0));
      CHECK(detect_er_parallel(h, tau) == x);
      CHECK(detect_uer_parallel(h, tau) == y);
      for (std::size_t r = 0; r < h.size(); ++r) {
        if (y[r] == Uer::Yes) CHECK(x[r] == 1);   // UER implies ER
        if (tau == 1) {
          CHECK(x[r] == (h[r] >= 1 ? 1 : 0));
          if (y[r] != Uer::Indeterminate) CHECK((y[r] == Uer::Yes) == (h[r] == 1));
        }
      }
    }
  }
}

TEST_CASE("prefixing quiet rounds shifts the indicators") {
  std::mt19937_64 rng(11);
  for (std::int64_t tau : {1, 3, 6}) {
    const H h = random_honest(rng, 500, 0.4);
    H shifted(static_cast<std::size_t>(tau), 0);
    shifted.insert(shifted.end(), h.begin(), h.end());
    const auto x = detect_er(h, tau), xs = detect_er(shifted, tau);
    const auto y = detect_uer(h, tau), ys = detect_uer(shifted, tau);
    for (std::size_t r = 0; r < h.size(); ++r) {
      CHECK(xs[r + tau] == x[r]);
      CHECK(ys[r + tau] == y[r]);
    }
  }
}

TEST_CASE("Poisson window enumeration equals the closed forms") {
  for (std::int64_t tau : {1, 2, 3}) {
    for (double beta : {0.0, 0.25, 0.45}) {
      for (double fd : {1.0 / 60.0, 0.2, 1.0, 2.5}) {
        SimParams p;
        p.beta = beta;
        p.mining_rate = fd;
        p.tau = tau;
        const auto w = oracle::enumerate_window(beta, fd, tau);
        CHECK(static_cast<double>(boost::multiprecision::abs(w.er - gamma(p)) / w.er) <= 1e-12);
        CHECK(static_cast<double>(boost::multiprecision::abs(w.uer - eta(p)) / w.uer) <= 1e-12);
      }
    }
  }
}

TEST_CASE("scan kernels agree across chunk boundaries for any thread count") {
  std::mt19937_64 rng(13);
  const int saved = omp_get_max_threads();
  for (int threads : {2, 5, 16}) {
    omp_set_num_threads(threads);
    for (std::int64_t tau : {1, 2, 4, 9, 40}) {
      for (double mean : {0.01, 0.2, 2.0}) {
        const H h = random_honest(rng, 997, mean);
        CHECK(detect_er_parallel(h, tau) == detect_er(h, tau));
        CHECK(detect_uer_parallel(h, tau) == detect_uer(h, tau));
      }
    }
  }
  omp_set_num_threads(saved);
}
