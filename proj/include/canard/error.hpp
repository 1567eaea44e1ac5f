#pragma once

#include <stdexcept>
#include <string>

namespace canard {

enum class errc {
  continuity_violation,
  slope_sign_violation,
  no_fold,
  diverged,
  step_underflow,
  no_return,
  no_orbit,
  no_jump,
  not_bracketed,
  not_focus_focus,
  hypothesis_not_satisfied,
  hypothesis_violated,
  construction_failed,
  not_super_explosion,
  no_witness,
  precondition_violated,
  ambiguous_classification,
  config_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::continuity_violation:     return "ContinuityViolation";
    case errc::slope_sign_violation:     return "SlopeSignViolation";
    case errc::no_fold:                  return "NoFold";
    case errc::diverged:                 return "Diverged";
    case errc::step_underflow:           return "StepUnderflow";
    case errc::no_return:                return "NoReturn";
    case errc::no_orbit:                 return "NoOrbit";
    case errc::no_jump:                  return "NoJump";
    case errc::not_bracketed:            return "NotBracketed";
    case errc::not_focus_focus:          return "NotFocusFocus";
    case errc::hypothesis_not_satisfied: return "HypothesisNotSatisfied";
    case errc::hypothesis_violated:      return "HypothesisViolated";
    case errc::construction_failed:      return "ConstructionFailed";
    case errc::not_super_explosion:      return "NotSuperExplosion";
    case errc::no_witness:               return "NoWitness";
    case errc::precondition_violated:    return "PreconditionViolated";
    case errc::ambiguous_classification: return "Ambiguous";
    case errc::config_error:             return "ConfigError";
  }
  return "UnknownError";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace canard
