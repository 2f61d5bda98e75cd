#include "rareflow/error.hpp"

namespace rareflow {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::domain: return "DomainError";
    case ErrorCode::not_attained: return "NotAttained";
    case ErrorCode::insufficient_data: return "InsufficientData";
    case ErrorCode::non_finite_input: return "NonFiniteInput";
    case ErrorCode::mismatched_ladders: return "MismatchedLadders";
    case ErrorCode::net_profit_violated: return "NetProfitViolated";
    case ErrorCode::no_root: return "NoRoot";
    case ErrorCode::max_steps_exceeded: return "MaxStepsExceeded";
    case ErrorCode::divergent_tail: return "DivergentTail";
    case ErrorCode::invalid_barrier: return "InvalidBarrier";
    case ErrorCode::at_maturity: return "AtMaturity";
    case ErrorCode::not_converged: return "NotConverged";
    case ErrorCode::domain_escape: return "DomainEscape";
    case ErrorCode::moment_condition_violated: return "MomentConditionViolated";
    case ErrorCode::regime: return "RegimeError";
    case ErrorCode::out_of_domain: return "OutOfDomain";
    case ErrorCode::out_of_dual_domain: return "OutOfDualDomain";
    case ErrorCode::negative_target: return "NegativeTarget";
    case ErrorCode::parse: return "ParseError";
    case ErrorCode::config: return "ConfigError";
    case ErrorCode::io: return "IoError";
  }
  return "Error";
}

}  // namespace rareflow
