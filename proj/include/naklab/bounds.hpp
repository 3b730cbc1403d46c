#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "naklab/params.hpp"

namespace naklab {

struct BoundValues {
  double gamma = 0.0;
  double eta = 0.0;
  double lambda_h = 0.0;
  double lambda_z = 0.0;
  bool safety_ok = false;
  double safety_threshold = 0.0;  // +inf when beta == 0
  std::optional<double> quality_floor;
};

// Stationary Pr(round is an ER) for rounds r >= tau, given the honest
// per-round mean.
double er_probability(double lambda_h, std::int64_t tau);
// Stationary Pr(round is a UER).
double uer_probability(double lambda_h, std::int64_t tau);

double gamma(const SimParams& p);
double eta(const SimParams& p);

// Upper limit on f*delta/tau*(2tau-1) for the UER-vs-adversary race to be won
// with margin: ln((1-beta)/(beta(1+margin)))/(1-beta). margin may be 0 here.
double safety_threshold(double beta, double margin);

struct SafetyCheck {
  bool ok = false;
  double threshold = 0.0;
};
SafetyCheck safety_condition(const SimParams& p);

// Honest-fraction floor of the longest chain; nullopt when
// gamma <= (1+margin)*lambda_z.
std::optional<double> quality_floor(const SimParams& p);

BoundValues compute_bounds(const SimParams& p);

enum class Tail { Upper, Lower };

// Sum of independent indicators with mean mu:
//   upper: Pr(X >= (1+d)mu) <= exp(-d^2 mu/3)
//   lower: Pr(X <= (1-d)mu) <= exp(-d^2 mu/2)
// Throws std::domain_error unless mu > 0 and 0 < delta < 1.
double chernoff_indicator(double mu, double delta, Tail side);

// T interleaved groups of independent indicators, smallest group mean
// mu_min: Pr(X <= (1-d) mu_min T) <= exp(-d^2 mu_min/2). Independent of T.
double chernoff_dependent_sum(double mu_min, std::int64_t groups, double delta);

// Poisson with mean mu: Pr(X >= (1+d)mu) <= exp(-d^2 mu/3).
double chernoff_poisson(double mu, double delta);

// Composed failure bounds, built from the three tail bounds above exactly as
// the liveness and safety arguments chain them.

// ER count in tau*m rounds at most (1-d)*gamma*tau*m.
double er_window_bound(const SimParams& p, std::int64_t m, double delta);
// UER count in (2tau-1)*m rounds at most (1-d)*eta*(2tau-1)*m.
double uer_window_bound(const SimParams& p, std::int64_t m, double delta);
// UERs fail to outnumber adversarial blocks in (2tau-1)*m rounds; splits the
// margin as d/4 on each side. Requires eta > (1+d)*lambda_z.
double race_bound(const SimParams& p, std::int64_t m, double delta);
// Growth short of (1-d)*gamma*tau*m over tau*(m+2)-1 rounds.
double chain_growth_bound(const SimParams& p, std::int64_t m, double delta);
// Honest fraction below the quality floor after tau*m rounds from round 0;
// d/4 split on the ER and adversarial sides.
double chain_quality_bound(const SimParams& p, std::int64_t m, double delta);

struct TauLimitRow {
  std::int64_t tau = 1;
  double tau_gamma = 0.0;
  double tau_eta = 0.0;
  double f_delta_threshold = 0.0;  // safety region edge on f*delta
};

struct TauLimitTable {
  std::vector<TauLimitRow> rows;
  double limit_tau_gamma = 0.0;
  double limit_tau_eta = 0.0;
  double limit_threshold = 0.0;
};

// How the per-delay-period quantities approach the continuous-time limit as
// the round length shrinks.
TauLimitTable tau_limit_check(double beta, double f_delta, std::span<const std::int64_t> taus,
                              double margin = 0.0);

}  // namespace naklab
