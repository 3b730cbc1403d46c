#include <doctest.h>

#include "naklab/params.hpp"

using namespace naklab;

namespace {

SimParams cell(double beta, double f_delta, std::int64_t tau) {
  SimParams p;
  p.beta = beta;
  p.delta = 1.0;
  p.mining_rate = f_delta;
  p.tau = tau;
  return p;
}

ParamErrorCode error_of(const SimParams& p, HorizonCheck h = HorizonCheck::Require) {
  try {
    validate_params(p, h);
  } catch (const ParamError& e) {
    return e.code();
  }
  FAIL("expected a ParamError");
  return ParamErrorCode::TauZero;
}

}  // namespace

TEST_CASE("per-round means split f*delta/tau by beta") {
  const SimParams p = cell(0.25, 1.0 / 60.0, 1);
  CHECK(validate_params(p) == p);
  CHECK(p.lambda_h() == doctest::Approx(0.0125).epsilon(1e-15));
  CHECK(p.lambda_z() == doctest::Approx(1.0 / 240.0).epsilon(1e-15));

  const SimParams q = cell(0.25, 0.2, 2);
  CHECK(q.lambda_h() == doctest::Approx(0.075).epsilon(1e-15));
  CHECK(q.lambda_z() == doctest::Approx(0.025).epsilon(1e-15));
}

TEST_CASE("only the product mining_rate * delta matters") {
  SimParams a = cell(0.3, 0.5, 3);
  SimParams b = a;
  b.delta = 10.0;
  b.mining_rate = 0.05;
  CHECK(a.lambda_h() == doctest::Approx(b.lambda_h()).epsilon(1e-15));
  CHECK(a.lambda_z() == doctest::Approx(b.lambda_z()).epsilon(1e-15));
}

TEST_CASE("validation rejects each bad field with its code") {
  SimParams p = cell(0.25, 0.2, 1);
  p.tau = 0;
  CHECK(error_of(p) == ParamErrorCode::TauZero);

  p = cell(1.0, 0.2, 1);
  CHECK(error_of(p) == ParamErrorCode::BetaOutOfRange);
  p.beta = -0.1;
  CHECK(error_of(p) == ParamErrorCode::BetaOutOfRange);

  p = cell(0.25, 0.2, 4);
  p.horizon = 3;
  CHECK(error_of(p) == ParamErrorCode::HorizonTooShort);
  CHECK_NOTHROW(validate_params(p, HorizonCheck::AllowShort));
  p.horizon = 4;
  CHECK_NOTHROW(validate_params(p));

  p = cell(0.25, 0.2, 1);
  p.delta = 0;
  CHECK(error_of(p) == ParamErrorCode::NonPositiveDelay);

  p = cell(0.25, 0.0, 1);
  CHECK(error_of(p) == ParamErrorCode::NonPositiveRate);

  p = cell(0.25, 0.2, 1);
  p.margin = 1.0;
  CHECK(error_of(p) == ParamErrorCode::MarginOutOfRange);
  p.margin = 0.0;
  CHECK(error_of(p) == ParamErrorCode::MarginOutOfRange);

  p = cell(0.25, 0.2, 1);
  p.confirm_depth = -1;
  CHECK(error_of(p) == ParamErrorCode::NegativeDepth);
}

TEST_CASE("beta = 0 is a valid honest-only model") {
  const SimParams p = cell(0.0, 0.2, 1);
  CHECK_NOTHROW(validate_params(p));
  CHECK(p.lambda_z() == 0.0);
}
