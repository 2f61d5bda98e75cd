#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rareflow {

/// Error categories. The CLI maps each one to a distinct process exit code.
enum class ErrorCode : int {
  domain = 10,
  not_attained,
  insufficient_data,
  non_finite_input,
  mismatched_ladders,
  net_profit_violated,
  no_root,
  max_steps_exceeded,
  divergent_tail,
  invalid_barrier,
  at_maturity,
  not_converged,
  domain_escape,
  moment_condition_violated,
  regime,
  out_of_domain,
  out_of_dual_domain,
  negative_target,
  parse,
  config,
  io,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

template <ErrorCode C>
class CodedError : public Error {
 public:
  explicit CodedError(const std::string& what) : Error(C, what) {}
};

using DomainError = CodedError<ErrorCode::domain>;
using NotAttained = CodedError<ErrorCode::not_attained>;
using InsufficientData = CodedError<ErrorCode::insufficient_data>;
using NonFiniteInput = CodedError<ErrorCode::non_finite_input>;
using MismatchedLadders = CodedError<ErrorCode::mismatched_ladders>;
using NetProfitViolated = CodedError<ErrorCode::net_profit_violated>;
using NoRoot = CodedError<ErrorCode::no_root>;
using MaxStepsExceeded = CodedError<ErrorCode::max_steps_exceeded>;
using DivergentTail = CodedError<ErrorCode::divergent_tail>;
using InvalidBarrier = CodedError<ErrorCode::invalid_barrier>;
using AtMaturity = CodedError<ErrorCode::at_maturity>;
using NotConverged = CodedError<ErrorCode::not_converged>;
using DomainEscape = CodedError<ErrorCode::domain_escape>;
using MomentConditionViolated = CodedError<ErrorCode::moment_condition_violated>;
using RegimeError = CodedError<ErrorCode::regime>;
using OutOfDomain = CodedError<ErrorCode::out_of_domain>;
using OutOfDualDomain = CodedError<ErrorCode::out_of_dual_domain>;
using NegativeTarget = CodedError<ErrorCode::negative_target>;

}  // namespace rareflow
