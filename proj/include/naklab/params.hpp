#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace naklab {

using Round = std::int64_t;

// Model constants for one run. Rates are per second; a round lasts delta/tau
// seconds, so only the product mining_rate * delta enters the per-round means.
struct SimParams {
  double delta = 1.0;          // network delay bound, seconds
  double mining_rate = 0.2;    // total blocks per second
  double beta = 0.25;          // adversarial share of mining power
  std::int64_t tau = 1;        // rounds per delay period
  std::int64_t confirm_depth = 6;
  double margin = 0.1;         // slack in the analytic bounds
  Round horizon = 10000;
  std::uint64_t seed = 0x6e616b6c6162ULL;

  double f_delta() const { return mining_rate * delta; }
  double lambda_h() const { return (1.0 - beta) * f_delta() / static_cast<double>(tau); }
  double lambda_z() const { return beta * f_delta() / static_cast<double>(tau); }

  bool operator==(const SimParams&) const = default;
};

enum class ParamErrorCode {
  TauZero,
  BetaOutOfRange,
  HorizonTooShort,
  NonPositiveDelay,
  NonPositiveRate,
  MarginOutOfRange,
  NegativeDepth,
};

const char* to_string(ParamErrorCode code);

class ParamError : public std::invalid_argument {
 public:
  ParamError(ParamErrorCode code, const std::string& what)
      : std::invalid_argument(what), code_(code) {}
  ParamErrorCode code() const { return code_; }

 private:
  ParamErrorCode code_;
};

enum class HorizonCheck { Require, AllowShort };

// Throws ParamError on the first violated constraint. AllowShort skips the
// horizon >= tau requirement, which only the analysis harness depends on.
SimParams validate_params(const SimParams& p, HorizonCheck horizon = HorizonCheck::Require);

}  // namespace naklab
