#include "naklab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "naklab/bounds.hpp"
#include "naklab/indicators.hpp"
#include "naklab/runner.hpp"
#include "naklab/stats.hpp"

namespace naklab {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

struct Count {
  std::int64_t events = 0;
  std::int64_t total = 0;
};

ExperimentResult make_result(std::string name, const SimParams& p, const VerifierSpec& spec,
                             Count c) {
  ExperimentResult r;
  r.name = std::move(name);
  r.params = p;
  r.m = spec.m;
  r.master_seed = p.seed;
  r.trials = c.total;
  r.events = c.events;
  if (c.total > 0) {
    r.estimate = static_cast<double>(c.events) / static_cast<double>(c.total);
    const Interval ci = wilson_interval(c.events, c.total);
    r.ci_low = ci.low;
    r.ci_high = ci.high;
  }
  return r;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::vector<std::uint32_t> sample_honest(const SimParams& p, Round rounds, Rng& rng) {
  TallySampler sample(p);
  std::vector<std::uint32_t> h(rounds);
  for (auto& x : h) x = sample.honest(rng);
  return h;
}

Count sum_counts(const std::vector<Count>& parts) {
  Count c;
  for (const Count& x : parts) {
    c.events += x.events;
    c.total += x.total;
  }
  return c;
}

EngineOptions engine_for(const VerifierSpec& spec, TieBreak default_tiebreak) {
  if (spec.engine_overridden) return spec.engine;
  EngineOptions o;
  o.delay = DelayPolicy::WorstCase;
  o.tiebreak = default_tiebreak;
  return o;
}

std::string strategy_for(const VerifierSpec& spec, const char* fallback) {
  return spec.strategy.empty() ? fallback : spec.strategy;
}

Verdict in_interval(double value, const ExperimentResult& r) {
  return value >= r.ci_low && value <= r.ci_high ? Verdict::Pass : Verdict::Fail;
}

// Tail frequencies: certified below the bound, significantly above it, or
// too few windows to tell.
Verdict below_bound(const ExperimentResult& r) {
  if (r.ci_high <= *r.analytic_bound) return Verdict::Pass;
  if (r.ci_low > *r.analytic_bound) return Verdict::Fail;
  return Verdict::Inconclusive;
}

}  // namespace

ExperimentResult verify_er_rate(const SimParams& p, const VerifierSpec& spec) {
  validate_params(p);
  require(p.horizon >= 2 * p.tau, "er-rate needs horizon >= 2 tau");
  const auto start = Clock::now();
  auto parts = run_trials<Count>(spec.trials, p.seed, spec.jobs, [&](std::int64_t, std::uint64_t seed) {
    Rng rng(seed);
    const auto h = sample_honest(p, p.horizon, rng);
    const auto er = detect_er(h, p.tau);
    return Count{count_er(er, p.tau, p.horizon - 1), p.horizon - p.tau};
  });
  ExperimentResult r = make_result("er-rate", p, spec, sum_counts(parts));
  r.analytic_bound = gamma(p);
  r.verdict = in_interval(*r.analytic_bound, r);
  r.runtime_seconds = seconds_since(start);
  return r;
}

ExperimentResult verify_uer_rate(const SimParams& p, const VerifierSpec& spec) {
  validate_params(p);
  require(p.horizon >= 3 * p.tau, "uer-rate needs horizon >= 3 tau");
  const auto start = Clock::now();
  auto parts = run_trials<Count>(spec.trials, p.seed, spec.jobs, [&](std::int64_t, std::uint64_t seed) {
    Rng rng(seed);
    const auto h = sample_honest(p, p.horizon, rng);
    const auto uer = detect_uer(h, p.tau);
    return Count{count_uer(uer, p.tau, p.horizon - p.tau), p.horizon - 2 * p.tau + 1};
  });
  ExperimentResult r = make_result("uer-rate", p, spec, sum_counts(parts));
  r.analytic_bound = eta(p);
  r.verdict = in_interval(*r.analytic_bound, r);
  r.runtime_seconds = seconds_since(start);
  return r;
}

ExperimentResult verify_chernoff_er(const SimParams& p, const VerifierSpec& spec) {
  validate_params(p);
  require(spec.m >= 1, "chernoff-er needs m >= 1");
  const auto start = Clock::now();
  const Round window = p.tau * spec.m;
  const Round lead = p.tau - 1;  // look-back so every window round is stationary
  const double threshold = (1.0 - p.margin) * gamma(p) * static_cast<double>(window);
  auto parts = run_trials<Count>(spec.trials, p.seed, spec.jobs, [&](std::int64_t, std::uint64_t seed) {
    Rng rng(seed);
    const auto h = sample_honest(p, lead + window, rng);
    const auto er = detect_er(h, p.tau);
    const auto n = count_er(er, lead, lead + window - 1);
    return Count{static_cast<double>(n) <= threshold ? 1 : 0, 1};
  });
  ExperimentResult r = make_result("chernoff-er", p, spec, sum_counts(parts));
  r.analytic_bound = er_window_bound(p, spec.m, p.margin);
  r.verdict = below_bound(r);
  std::ostringstream os;
  os << "window=" << window << " threshold=" << threshold;
  r.detail = os.str();
  r.runtime_seconds = seconds_since(start);
  return r;
}

ExperimentResult verify_chernoff_uer(const SimParams& p, const VerifierSpec& spec) {
  validate_params(p);
  require(spec.m >= 1, "chernoff-uer needs m >= 1");
  const auto start = Clock::now();
  const Round window = (2 * p.tau - 1) * spec.m;
  const Round lead = p.tau - 1;
  const double threshold = (1.0 - p.margin) * eta(p) * static_cast<double>(window);
  auto parts = run_trials<Count>(spec.trials, p.seed, spec.jobs, [&](std::int64_t, std::uint64_t seed) {
    Rng rng(seed);
    const auto h = sample_honest(p, lead + window + lead, rng);
    const auto uer = detect_uer(h, p.tau);
    const auto n = count_uer(uer, lead, lead + window - 1);
    return Count{static_cast<double>(n) <= threshold ? 1 : 0, 1};
  });
  ExperimentResult r = make_result("chernoff-uer", p, spec, sum_counts(parts));
  r.analytic_bound = uer_window_bound(p, spec.m, p.margin);
  r.verdict = below_bound(r);
  std::ostringstream os;
  os << "window=" << window << " threshold=" << threshold;
  r.detail = os.str();
  r.runtime_seconds = seconds_since(start);
  return r;
}

ExperimentResult verify_race(const SimParams& p, const VerifierSpec& spec) {
  validate_params(p);
  require(spec.m >= 1, "race needs m >= 1");
  const auto start = Clock::now();
  const Round window = (2 * p.tau - 1) * spec.m;
  const Round lead = p.tau - 1;
  auto parts = run_trials<Count>(spec.trials, p.seed, spec.jobs, [&](std::int64_t, std::uint64_t seed) {
    Rng rng(seed);
    const RoundTallies t = sample_tallies(p, lead + window + lead, rng);
    const auto uer = detect_uer(t.honest, p.tau);
    const auto y = count_uer(uer, lead, lead + window - 1);
    const auto z = sum_rounds(t.adversarial, lead, lead + window - 1);
    return Count{y <= z ? 1 : 0, 1};
  });
  ExperimentResult r = make_result("race", p, spec, sum_counts(parts));
  std::ostringstream os;
  os << "window=" << window;
  if (safety_condition(p).ok) {
    r.analytic_bound = race_bound(p, spec.m, p.margin);
    r.verdict = r.estimate <= *r.analytic_bound ? Verdict::Pass : Verdict::Fail;
  } else {
    r.verdict = Verdict::Inconclusive;
    os << " precondition eta > (1+delta)*lambda_z fails";
  }
  r.detail = os.str();
  r.runtime_seconds = seconds_since(start);
  return r;
}

ExperimentResult verify_chain_growth(const SimParams& p, const VerifierSpec& spec) {
  validate_params(p);
  require(spec.m >= 1, "chain-growth needs m >= 1");
  const auto start = Clock::now();
  const Round anchor = p.tau;
  const Round span = p.tau * (spec.m + 2) - 1;
  SimParams run = p;
  run.horizon = anchor + span;
  const double required = (1.0 - p.margin) * gamma(p) * static_cast<double>(p.tau * spec.m);
  const EngineOptions engine = engine_for(spec, TieBreak::AdversaryPrefer);
  const std::string strategy = strategy_for(spec, "tie-rusher");

  struct Outcome {
    Count c;
    std::int64_t invariant_failures = 0;
  };
  auto parts = run_trials<Outcome>(spec.trials, p.seed, spec.jobs, [&](std::int64_t, std::uint64_t seed) {
    SimParams trial = run;
    trial.seed = seed;
    auto adversary = make_strategy(strategy, spec.strategy_options, trial);
    Simulation sim(trial, *adversary, engine);
    while (!sim.done()) sim.step();
    const auto& L = sim.longest();
    // Chain length observed at the beginning of round r is L[r-1].
    const Height before = L[anchor - 1];
    const Height after = L[anchor + span - 1];
    Outcome o;
    o.c = {static_cast<double>(after - before) < required ? 1 : 0, 1};
    o.invariant_failures = static_cast<std::int64_t>(sim.invariant_failures().size());
    return o;
  });
  Count c;
  std::int64_t invariant_failures = 0;
  for (const auto& o : parts) {
    c.events += o.c.events;
    c.total += o.c.total;
    invariant_failures += o.invariant_failures;
  }
  ExperimentResult r = make_result("chain-growth", p, spec, c);
  r.analytic_bound = chain_growth_bound(p, spec.m, p.margin);
  r.verdict = r.estimate <= *r.analytic_bound && invariant_failures == 0 ? Verdict::Pass : Verdict::Fail;
  std::ostringstream os;
  os << "strategy=" << strategy << " required_growth=" << required
     << " invariant_failures=" << invariant_failures;
  r.detail = os.str();
  r.runtime_seconds = seconds_since(start);
  return r;
}

ExperimentResult verify_chain_quality(const SimParams& p, const VerifierSpec& spec) {
  validate_params(p);
  require(spec.m >= 1, "chain-quality needs m >= 1");
  const auto start = Clock::now();
  const auto floor = quality_floor(p);
  SimParams run = p;
  run.horizon = p.tau * spec.m;
  const EngineOptions engine = engine_for(spec, TieBreak::AdversaryPrefer);
  const std::string strategy = strategy_for(spec, "tie-rusher");

  struct Outcome {
    double fraction = 1.0;
    std::int64_t invariant_failures = 0;
  };
  auto parts = run_trials<Outcome>(spec.trials, p.seed, spec.jobs, [&](std::int64_t, std::uint64_t seed) {
    SimParams trial = run;
    trial.seed = seed;
    auto adversary = make_strategy(strategy, spec.strategy_options, trial);
    Simulation sim(trial, *adversary, engine);
    while (!sim.done()) sim.step();
    const auto& tree = sim.tree();
    const BlockId tip = longest_tip(sim.view(), tree, sim.policy());
    std::int64_t honest = 0;
    for (BlockId id = tip; id != kGenesis; id = tree[id].parent) honest += tree[id].honest();
    Outcome o;
    const Height length = tree[tip].height;
    o.fraction = length > 0 ? static_cast<double>(honest) / static_cast<double>(length) : 1.0;
    o.invariant_failures = static_cast<std::int64_t>(sim.invariant_failures().size());
    return o;
  });

  Count c;
  std::int64_t invariant_failures = 0;
  double min_fraction = 1.0, mean_fraction = 0.0;
  for (const auto& o : parts) {
    ++c.total;
    if (floor && o.fraction < *floor) ++c.events;
    invariant_failures += o.invariant_failures;
    min_fraction = std::min(min_fraction, o.fraction);
    mean_fraction += o.fraction;
  }
  if (!parts.empty()) mean_fraction /= static_cast<double>(parts.size());
  ExperimentResult r = make_result("chain-quality", p, spec, c);
  std::ostringstream os;
  os << "strategy=" << strategy << " mean_fraction=" << mean_fraction
     << " min_fraction=" << min_fraction << " invariant_failures=" << invariant_failures;
  if (floor) {
    os << " floor=" << *floor << " share_at_or_above_floor=" << 1.0 - r.estimate;
    r.analytic_bound = chain_quality_bound(p, spec.m, p.margin);
    r.verdict =
        r.estimate <= *r.analytic_bound && invariant_failures == 0 ? Verdict::Pass : Verdict::Fail;
  } else {
    os << " floor undefined: gamma <= (1+delta)*lambda_z";
    r.verdict = invariant_failures == 0 ? Verdict::Inconclusive : Verdict::Fail;
  }
  r.detail = os.str();
  r.runtime_seconds = seconds_since(start);
  return r;
}

std::vector<ExperimentResult> verify_safety(const SimParams& p, const VerifierSpec& spec) {
  validate_params(p);
  require(!spec.k_list.empty(), "safety needs at least one k");
  const EngineOptions base = engine_for(spec, TieBreak::AdversaryPrefer);
  const std::string strategy = strategy_for(spec, "double-spend");

  struct Outcome {
    bool violation = false;
    bool certificate_ok = true;
    bool length_ok = true;
    std::int64_t invariant_failures = 0;
  };
  struct PerK {
    ExperimentResult result;
    std::int64_t certificate_failures = 0;
    std::int64_t length_ok = 0;
    std::int64_t invariant_failures = 0;
  };
  std::vector<PerK> per_k;
  for (std::int64_t k : spec.k_list) {
    const auto start = Clock::now();
    SimParams cell = p;
    cell.confirm_depth = k;
    EngineOptions engine = base;
    engine.stop_on_violation = true;
    // Same master seed for every k: common random numbers across the list.
    auto parts = run_trials<Outcome>(spec.trials, p.seed, spec.jobs, [&](std::int64_t, std::uint64_t seed) {
      SimParams trial = cell;
      trial.seed = seed;
      auto adversary = make_strategy(strategy, spec.strategy_options, trial);
      Simulation sim(trial, *adversary, engine);
      while (!sim.done()) sim.step();
      const Trace tr = sim.finish();
      Outcome o;
      o.invariant_failures = static_cast<std::int64_t>(tr.invariant_failures.size());
      if (tr.violation) {
        o.violation = true;
        const ContainmentCheck check = check_event_containment(tr, *tr.violation);
        o.certificate_ok = check.fields_consistent && check.e1 && check.e2;
        o.length_ok = check.length_bound_ok;
      }
      return o;
    });
    PerK pk;
    Count c;
    for (const auto& o : parts) {
      ++c.total;
      c.events += o.violation;
      pk.certificate_failures += o.violation && !o.certificate_ok;
      pk.length_ok += o.violation && o.length_ok;
      pk.invariant_failures += o.invariant_failures;
    }
    VerifierSpec s = spec;
    pk.result = make_result("safety", cell, s, c);
    pk.result.m = 0;
    pk.result.runtime_seconds = seconds_since(start);
    per_k.push_back(std::move(pk));
  }

  std::int64_t cert_failures = 0, invariant_failures = 0;
  bool monotone = true;
  std::vector<double> ks, logs;
  for (std::size_t i = 0; i < per_k.size(); ++i) {
    cert_failures += per_k[i].certificate_failures;
    invariant_failures += per_k[i].invariant_failures;
    if (i > 0 && per_k[i].result.estimate > per_k[i - 1].result.estimate) monotone = false;
    if (per_k[i].result.estimate > 0.0) {
      ks.push_back(static_cast<double>(spec.k_list[i]));
      logs.push_back(std::log(per_k[i].result.estimate));
    }
  }
  std::optional<double> slope;
  if (ks.size() >= 2) slope = ols_slope(ks, logs);

  const bool safe = safety_condition(p).ok;
  Verdict verdict = Verdict::Inconclusive;
  std::string reason;
  if (cert_failures > 0 || invariant_failures > 0) {
    verdict = Verdict::Fail;
    reason = "containment or invariant check failed";
  } else if (p.beta == 0.0) {
    const bool none = std::all_of(per_k.begin(), per_k.end(),
                                  [](const PerK& x) { return x.result.events == 0; });
    verdict = none ? Verdict::Pass : Verdict::Fail;
    reason = none ? "no adversary, no violations" : "violations without an adversary";
  } else if (safe) {
    if (!monotone) {
      verdict = Verdict::Fail;
      reason = "success rate increases with k";
    } else if (slope && *slope < 0.0) {
      verdict = Verdict::Pass;
      reason = "monotone in k with negative log-rate slope";
    } else if (!slope) {
      verdict = Verdict::Inconclusive;
      reason = "fewer than two non-zero rates; slope undefined";
    } else {
      verdict = Verdict::Fail;
      reason = "log-rate slope not negative";
    }
  } else {
    reason = "outside the safe region; rates recorded without a bound verdict";
  }

  std::vector<ExperimentResult> out;
  for (std::size_t i = 0; i < per_k.size(); ++i) {
    ExperimentResult r = per_k[i].result;
    r.verdict = verdict;
    std::ostringstream os;
    os << "k=" << spec.k_list[i] << " strategy=" << strategy
       << " certificate_failures=" << per_k[i].certificate_failures
       << " length_bound_held=" << per_k[i].length_ok << "/" << r.events
       << " invariant_failures=" << per_k[i].invariant_failures << " monotone=" << (monotone ? 1 : 0);
    if (slope) os << " log_slope=" << *slope;
    os << " region=" << (safe ? "safe" : "unsafe") << " verdict_reason=" << reason;
    r.detail = os.str();
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> verifier_names() {
  return {"er-rate", "uer-rate", "chernoff-er", "chernoff-uer", "race",
          "chain-growth", "chain-quality", "safety"};
}

std::vector<ExperimentResult> run_verifier(std::string_view name, const SimParams& p,
                                           const VerifierSpec& spec) {
  using Single = ExperimentResult (*)(const SimParams&, const VerifierSpec&);
  static const std::map<std::string, Single, std::less<>> singles = {
      {"er-rate", &verify_er_rate},
      {"uer-rate", &verify_uer_rate},
      {"chernoff-er", &verify_chernoff_er},
      {"chernoff-uer", &verify_chernoff_uer},
      {"race", &verify_race},
      {"chain-growth", &verify_chain_growth},
      {"chain-quality", &verify_chain_quality},
  };
  std::string key(name);
  std::replace(key.begin(), key.end(), '_', '-');
  if (key == "safety") return verify_safety(p, spec);
  auto it = singles.find(key);
  if (it == singles.end()) throw std::invalid_argument("unknown verifier '" + std::string(name) + "'");
  return {it->second(p, spec)};
}

}  // namespace naklab
