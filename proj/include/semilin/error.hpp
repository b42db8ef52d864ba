// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace semilin {

/// Error classes. The CLI maps each class onto a distinct exit code.
enum class ErrorKind {
  InvalidArgument,    // bad call-site input (sizes, ranges)
  Config,             // configuration or expression problems
  Construction,       // a sub/supersolution construction could not be built
  NonConvergence,     // an iterative method ran out of iterations
  InvariantViolation  // a checked mathematical invariant failed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error invalid_argument(const std::string& what) { return {ErrorKind::InvalidArgument, what}; }
inline Error config_error(const std::string& what) { return {ErrorKind::Config, what}; }
inline Error construction_error(const std::string& what) { return {ErrorKind::Construction, what}; }
inline Error convergence_error(const std::string& what) { return {ErrorKind::NonConvergence, what}; }
inline Error invariant_error(const std::string& what) { return {ErrorKind::InvariantViolation, what}; }

}  // namespace semilin
