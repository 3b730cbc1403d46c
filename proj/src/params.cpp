#include "naklab/params.hpp"

#include <cmath>
#include <sstream>

namespace naklab {

const char* to_string(ParamErrorCode code) {
  switch (code) {
    case ParamErrorCode::TauZero: return "TauZero";
    case ParamErrorCode::BetaOutOfRange: return "BetaOutOfRange";
    case ParamErrorCode::HorizonTooShort: return "HorizonTooShort";
    case ParamErrorCode::NonPositiveDelay: return "NonPositiveDelay";
    case ParamErrorCode::NonPositiveRate: return "NonPositiveRate";
    case ParamErrorCode::MarginOutOfRange: return "MarginOutOfRange";
    case ParamErrorCode::NegativeDepth: return "NegativeDepth";
  }
  return "Unknown";
}

namespace {

[[noreturn]] void fail(ParamErrorCode code, const std::string& detail) {
  std::ostringstream os;
  os << to_string(code) << ": " << detail;
  throw ParamError(code, os.str());
}

}  // namespace

SimParams validate_params(const SimParams& p, HorizonCheck horizon) {
  if (p.tau < 1) fail(ParamErrorCode::TauZero, "tau must be a positive integer");
  if (!(p.beta >= 0.0 && p.beta < 1.0)) fail(ParamErrorCode::BetaOutOfRange, "beta must lie in [0, 1)");
  if (!(p.delta > 0.0) || !std::isfinite(p.delta))
    fail(ParamErrorCode::NonPositiveDelay, "delta must be positive");
  if (!(p.mining_rate > 0.0) || !std::isfinite(p.mining_rate))
    fail(ParamErrorCode::NonPositiveRate, "mining rate must be positive");
  if (!(p.margin > 0.0 && p.margin < 1.0))
    fail(ParamErrorCode::MarginOutOfRange, "margin must lie in (0, 1)");
  if (p.confirm_depth < 0) fail(ParamErrorCode::NegativeDepth, "confirmation depth must be >= 0");
  if (p.horizon < 0 || (horizon == HorizonCheck::Require && p.horizon < p.tau)) {
    std::ostringstream os;
    os << "horizon " << p.horizon << " is shorter than tau " << p.tau;
    fail(ParamErrorCode::HorizonTooShort, os.str());
  }
  return p;
}

}  // namespace naklab
