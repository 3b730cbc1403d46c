#include "naklab/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace naklab {

namespace {

void check_tail_domain(double mu, double delta) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw std::domain_error("Chernoff bound needs mu > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("Chernoff bound needs 0 < delta < 1");
}

// A Poisson term with zero mean never exceeds its threshold.
double poisson_term(double mu, double delta) {
  return mu > 0.0 ? chernoff_poisson(mu, delta) : 0.0;
}

}  // namespace

double er_probability(double lambda_h, std::int64_t tau) {
  return std::exp(-lambda_h * static_cast<double>(tau - 1)) * -std::expm1(-lambda_h);
}

double uer_probability(double lambda_h, std::int64_t tau) {
  return lambda_h * std::exp(-lambda_h * static_cast<double>(2 * tau - 1));
}

double gamma(const SimParams& p) { return er_probability(p.lambda_h(), p.tau); }
double eta(const SimParams& p) { return uer_probability(p.lambda_h(), p.tau); }

double safety_threshold(double beta, double margin) {
  if (beta <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log((1.0 - beta) / (beta * (1.0 + margin))) / (1.0 - beta);
}

SafetyCheck safety_condition(const SimParams& p) {
  SafetyCheck c;
  c.threshold = safety_threshold(p.beta, p.margin);
  c.ok = p.beta == 0.0 || eta(p) > (1.0 + p.margin) * p.lambda_z();
  return c;
}

std::optional<double> quality_floor(const SimParams& p) {
  const double g = gamma(p);
  const double adv = (1.0 + p.margin) * p.lambda_z();
  if (!(g > adv)) return std::nullopt;
  return 1.0 - adv / g;
}

BoundValues compute_bounds(const SimParams& p) {
  BoundValues v;
  v.gamma = gamma(p);
  v.eta = eta(p);
  v.lambda_h = p.lambda_h();
  v.lambda_z = p.lambda_z();
  const SafetyCheck s = safety_condition(p);
  v.safety_ok = s.ok;
  v.safety_threshold = s.threshold;
  v.quality_floor = quality_floor(p);
  return v;
}

double chernoff_indicator(double mu, double delta, Tail side) {
  check_tail_domain(mu, delta);
  const double divisor = side == Tail::Upper ? 3.0 : 2.0;
  return std::exp(-delta * delta * mu / divisor);
}

double chernoff_dependent_sum(double mu_min, std::int64_t groups, double delta) {
  if (groups < 1) throw std::domain_error("Chernoff bound needs at least one group");
  return chernoff_indicator(mu_min, delta, Tail::Lower);
}

double chernoff_poisson(double mu, double delta) {
  check_tail_domain(mu, delta);
  return std::exp(-delta * delta * mu / 3.0);
}

double er_window_bound(const SimParams& p, std::int64_t m, double delta) {
  return chernoff_dependent_sum(gamma(p) * static_cast<double>(m), p.tau, delta);
}

double uer_window_bound(const SimParams& p, std::int64_t m, double delta) {
  return chernoff_dependent_sum(eta(p) * static_cast<double>(m), 2 * p.tau - 1, delta);
}

double race_bound(const SimParams& p, std::int64_t m, double delta) {
  const double split = delta / 4.0;
  const double rounds = static_cast<double>((2 * p.tau - 1) * m);
  return uer_window_bound(p, m, split) + poisson_term(p.lambda_z() * rounds, split);
}

double chain_growth_bound(const SimParams& p, std::int64_t m, double delta) {
  return er_window_bound(p, m, delta);
}

double chain_quality_bound(const SimParams& p, std::int64_t m, double delta) {
  const double split = delta / 4.0;
  const double rounds = static_cast<double>(p.tau * m);
  return er_window_bound(p, m, split) + poisson_term(p.lambda_z() * rounds, split);
}

TauLimitTable tau_limit_check(double beta, double f_delta, std::span<const std::int64_t> taus,
                              double margin) {
  TauLimitTable t;
  const double edge = safety_threshold(beta, margin);
  for (std::int64_t tau : taus) {
    const double lambda = (1.0 - beta) * f_delta / static_cast<double>(tau);
    TauLimitRow row;
    row.tau = tau;
    row.tau_gamma = static_cast<double>(tau) * er_probability(lambda, tau);
    row.tau_eta = static_cast<double>(tau) * uer_probability(lambda, tau);
    row.f_delta_threshold = edge * static_cast<double>(tau) / static_cast<double>(2 * tau - 1);
    t.rows.push_back(row);
  }
  const double honest = (1.0 - beta) * f_delta;
  t.limit_tau_gamma = honest * std::exp(-honest);
  t.limit_tau_eta = honest * std::exp(-2.0 * honest);
  t.limit_threshold = edge / 2.0;
  return t;
}

}  // namespace naklab
