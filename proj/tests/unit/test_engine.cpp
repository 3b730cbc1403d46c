#include <doctest.h>

#include <cmath>
#include <functional>

#include "naklab/adversary.hpp"
#include "naklab/engine.hpp"
#include "naklab/serialize.hpp"

using namespace naklab;

namespace {

SimParams cell(double beta, double f_delta, std::int64_t tau, Round horizon, std::int64_t k = 6) {
  SimParams p;
  p.beta = beta;
  p.mining_rate = f_delta;
  p.tau = tau;
  p.horizon = horizon;
  p.confirm_depth = k;
  return p;
}

RoundTallies script(std::vector<std::uint32_t> h, std::vector<std::uint32_t> z = {}) {
  RoundTallies t;
  t.honest = std::move(h);
  t.adversarial = z.empty() ? std::vector<std::uint32_t>(t.honest.size(), 0) : std::move(z);
  return t;
}

class Scripted final : public Strategy {
 public:
  using Fn = std::function<StrategyDecision(const AdversarySnapshot&, std::uint32_t)>;
  explicit Scripted(Fn fn) : fn_(std::move(fn)) {}
  std::string name() const override { return "scripted"; }
  StrategyDecision decide(const AdversarySnapshot& s, std::uint32_t z) override { return fn_(s, z); }

 private:
  Fn fn_;
};

}  // namespace

TEST_CASE("hand trace: tau = 2, worst-case delay, first-seen") {
  PassiveStrategy passive;
  const Trace tr = run_scripted(cell(0.0, 1.0, 2, 3), script({1, 1, 1}), passive, {});
  REQUIRE(tr.blocks.size() == 4);
  const Block& a = tr.blocks[1];
  const Block& b = tr.blocks[2];
  const Block& c = tr.blocks[3];
  CHECK(a.parent == kGenesis);
  CHECK(a.height == 1);
  CHECK(a.visible_round == 1);
  CHECK(b.parent == kGenesis);
  CHECK(b.height == 1);
  CHECK(c.parent == a.id);
  CHECK(c.height == 2);
  CHECK(tr.longest == std::vector<Height>{0, 1, 1});
  CHECK(tr.invariant_failures.empty());
}

TEST_CASE("several honest blocks in one round fork at the same height") {
  PassiveStrategy passive;
  for (TieBreak tb : {TieBreak::FirstSeen, TieBreak::AdversaryPrefer, TieBreak::Random}) {
    EngineOptions o;
    o.tiebreak = tb;
    const Trace tr = run_scripted(cell(0.0, 1.0, 1, 2), script({1, 2}), passive, o);
    REQUIRE(tr.blocks.size() == 4);
    CHECK(tr.blocks[2].height == 2);
    CHECK(tr.blocks[3].height == 2);
  }
}

TEST_CASE("h = 0 mines nothing and horizon 0 leaves genesis") {
  PassiveStrategy passive;
  const Trace quiet = run_scripted(cell(0.0, 1.0, 1, 3), script({0, 0, 0}), passive, {});
  CHECK(quiet.blocks.size() == 1);
  const Trace empty = run(cell(0.25, 1.0, 3, 0), passive, {});
  CHECK(empty.blocks.size() == 1);
  CHECK(empty.rounds_run == 0);
  CHECK(empty.longest.empty());
}

TEST_CASE("runs are deterministic") {
  for (const char* name : {"passive", "honest-mimic", "tie-rusher", "double-spend"}) {
    const SimParams p = cell(0.3, 0.6, 2, 3000, 2);
    EngineOptions o;
    o.delay = DelayPolicy::UniformRandom;
    o.tiebreak = TieBreak::Random;
    auto s1 = make_strategy(name, {}, p);
    auto s2 = make_strategy(name, {}, p);
    const Trace a = run(p, *s1, o);
    const Trace b = run(p, *s2, o);
    const OutputMetadata meta{Json::object(), p.seed};
    CHECK(trace_to_json(a, meta).dump() == trace_to_json(b, meta).dump());
  }
}

TEST_CASE("honest-only, tau = 1: every round with blocks adds one height") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SimParams p = cell(0.0, 0.8, 1, 5000);
    p.seed = seed;
    PassiveStrategy passive;
    const Trace tr = run(p, passive, {});
    std::int64_t busy = 0;
    for (auto h : tr.tallies.honest) busy += h >= 1;
    CHECK(tr.longest.back() == busy);
    CHECK(count_er(tr.indicators.er, 0, p.horizon - 1) == busy);
    CHECK(tr.invariant_failures.empty());
    CHECK_FALSE(tr.violation.has_value());
  }
}

TEST_CASE("a delay-0 adversarial release is visible the same round") {
  SimParams p = cell(0.5, 1.0, 3, 2);
  HonestMimicStrategy mimic;
  const RoundTallies s = script({0, 0}, {1, 0});
  Simulation scripted(p, mimic, {}, &s);
  scripted.step();
  REQUIRE(scripted.tree().size() == 2);
  CHECK(scripted.tree()[1].visible_round == 0);
  CHECK(scripted.view().contains(1));
  CHECK(scripted.longest().back() == 1);
}

TEST_CASE("illegal decisions raise StrategyViolation") {
  const SimParams p = cell(0.5, 1.0, 2, 2);
  const RoundTallies s = script({0, 0}, {1, 0});
  auto expect_violation = [&](Scripted::Fn fn) {
    Scripted strategy(std::move(fn));
    CHECK_THROWS_AS(run_scripted(p, s, strategy, {}), StrategyViolation);
  };
  expect_violation([](const AdversarySnapshot&, std::uint32_t) { return StrategyDecision{}; });
  expect_violation([](const AdversarySnapshot&, std::uint32_t z) {
    StrategyDecision d;
    d.new_block_parents.assign(z, BlockRef::existing(999));
    return d;
  });
  expect_violation([](const AdversarySnapshot&, std::uint32_t z) {
    StrategyDecision d;
    d.new_block_parents.assign(z, BlockRef::fresh(0));
    return d;
  });
  expect_violation([](const AdversarySnapshot&, std::uint32_t z) {
    StrategyDecision d;
    d.new_block_parents.assign(z, BlockRef::existing(kGenesis));
    d.releases.push_back({BlockRef::existing(kGenesis), 0});
    return d;
  });
  expect_violation([](const AdversarySnapshot&, std::uint32_t z) {
    StrategyDecision d;
    d.new_block_parents.assign(z, BlockRef::existing(kGenesis));
    if (z > 0) d.releases.push_back({BlockRef::fresh(0), 2});
    return d;
  });
  // Releasing the same block twice.
  expect_violation([](const AdversarySnapshot&, std::uint32_t z) {
    StrategyDecision d;
    d.new_block_parents.assign(z, BlockRef::existing(kGenesis));
    if (z > 0) {
      d.releases.push_back({BlockRef::fresh(0), 0});
      d.releases.push_back({BlockRef::fresh(0), 0});
    }
    return d;
  });
}

TEST_CASE("releasing a block publishes its withheld ancestors") {
  const SimParams p = cell(0.5, 1.0, 2, 3);
  const RoundTallies s = script({0, 0, 0}, {1, 1, 0});
  Scripted strategy([](const AdversarySnapshot& snap, std::uint32_t z) {
    StrategyDecision d;
    if (z == 0) return d;
    if (snap.round == 0) {
      d.new_block_parents = {BlockRef::existing(kGenesis)};
    } else {
      d.new_block_parents = {BlockRef::existing(1)};
      d.releases.push_back({BlockRef::fresh(0), 1});
    }
    return d;
  });
  const Trace tr = run_scripted(p, s, strategy, {});
  REQUIRE(tr.blocks.size() == 3);
  CHECK(tr.blocks[1].released_round == 1);
  CHECK(tr.blocks[1].visible_round == 2);
  CHECK(tr.blocks[2].visible_round == 2);
  CHECK(tr.longest.back() == 2);
}

TEST_CASE("containment check on a hand-built fork") {
  // G - A - B - D (honest) and A - C - E (adversary); k = 1, tau = 1.
  Trace tr;
  tr.params = cell(0.25, 1.0, 1, 4, 1);
  tr.tallies = script({1, 1, 1, 0}, {0, 1, 1, 0});
  tr.indicators = detect_indicators(tr.tallies, 1);
  BlockTree t;
  const BlockId a = t.add(kGenesis, Miner::Honest, 0);
  const BlockId b = t.add(a, Miner::Honest, 1);
  const BlockId c = t.add(a, Miner::Adversary, 1);
  const BlockId d = t.add(b, Miner::Honest, 2);
  const BlockId e = t.add(c, Miner::Adversary, 2);
  tr.blocks.assign(t.blocks().begin(), t.blocks().end());

  ViolationCertificate cert;
  cert.block_b_prime = b;
  cert.tip_b_prime = d;
  cert.r_prime_confirm = 2;
  cert.block_b = c;
  cert.tip_b = e;
  cert.r_confirm = 3;
  cert.b1 = a;
  cert.b0 = a;
  cert.r0 = 0;
  ContainmentCheck got = check_event_containment(tr, cert);
  CHECK(got.fields_consistent);
  CHECK(got.e1);
  CHECK(got.e2);  // Y[1,2] = 2 <= Z[0,3] = 2
  CHECK(got.length_bound_ok);  // 4 > 4/1.1

  // One adversarial block fewer and the race is lost for E2.
  tr.tallies.adversarial = {0, 1, 0, 0};
  CHECK_FALSE(check_event_containment(tr, cert).e2);

  // Requiring k = 2 breaks E1: each side holds only two blocks.
  tr.params.confirm_depth = 2;
  CHECK_FALSE(check_event_containment(tr, cert).e1);

  cert.b0 = b;
  tr.params.confirm_depth = 1;
  CHECK_FALSE(check_event_containment(tr, cert).fields_consistent);
}

TEST_CASE("double-spend at a fast unsafe cell produces a checked certificate") {
  SimParams p = cell(0.45, 1.0, 1, 20000, 1);
  EngineOptions o;
  o.tiebreak = TieBreak::AdversaryPrefer;
  o.stop_on_violation = true;
  bool found = false;
  for (std::uint64_t seed = 1; seed <= 20 && !found; ++seed) {
    p.seed = seed;
    auto s = make_strategy("double-spend", {}, p);
    const Trace tr = run(p, *s, o);
    if (!tr.violation) continue;
    found = true;
    const ViolationCertificate& c = *tr.violation;
    CHECK(tr.blocks[c.block_b].height == tr.blocks[c.block_b_prime].height);
    CHECK(c.block_b != c.block_b_prime);
    const ContainmentCheck check = check_event_containment(tr, c);
    CHECK(check.fields_consistent);
    CHECK(c.e1_holds);
    CHECK(c.e2_holds);
    CHECK(tr.blocks[c.b0].miner == Miner::Honest);
    CHECK(tr.invariant_failures.empty());
  }
  CHECK(found);
}

TEST_CASE("sampled tallies have the Poisson means and are uncorrelated") {
  const SimParams p = cell(0.3, 0.9, 2, 10);
  Rng rng(2024);
  const Round n = 400000;
  const RoundTallies t = sample_tallies(p, n, rng);
  double mh = 0, mz = 0, cov = 0;
  for (Round r = 0; r < n; ++r) {
    mh += t.honest[r];
    mz += t.adversarial[r];
  }
  mh /= n;
  mz /= n;
  for (Round r = 0; r < n; ++r) cov += (t.honest[r] - mh) * (t.adversarial[r] - mz);
  cov /= n;
  const double nn = static_cast<double>(n);
  CHECK(std::abs(mh - p.lambda_h()) < 4 * std::sqrt(p.lambda_h() / nn));
  CHECK(std::abs(mz - p.lambda_z()) < 4 * std::sqrt(p.lambda_z() / nn));
  CHECK(std::abs(cov) < 4 * std::sqrt(p.lambda_h() * p.lambda_z() / nn));
}

TEST_CASE("invariant checks stay quiet across strategies and policies") {
  for (const char* name : {"passive", "honest-mimic", "tie-rusher", "double-spend"}) {
    for (DelayPolicy d : {DelayPolicy::WorstCase, DelayPolicy::BestCase, DelayPolicy::UniformRandom}) {
      for (TieBreak tb : {TieBreak::FirstSeen, TieBreak::AdversaryPrefer, TieBreak::Random}) {
        const SimParams p = cell(0.4, 1.5, 3, 2000, 2);
        auto s = make_strategy(name, {}, p);
        EngineOptions o;
        o.delay = d;
        o.tiebreak = tb;
        const Trace tr = run(p, *s, o);
        CAPTURE(name);
        CHECK(tr.invariant_failures.empty());
        if (tr.violation) {
          CHECK(tr.violation->e1_holds);
          CHECK(tr.violation->e2_holds);
        }
      }
    }
  }
}
