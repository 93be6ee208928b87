#pragma once

#include <stdexcept>
#include <string>

namespace tolopt {

/// Failure categories surfaced by the library; the CLI maps each one to an exit code.
enum class ErrorKind { config, infeasible, numerical };

class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

inline Error config_error(const std::string& what) { return {ErrorKind::config, what}; }
inline Error infeasible_error(const std::string& what) { return {ErrorKind::infeasible, what}; }
inline Error numerical_error(const std::string& what) { return {ErrorKind::numerical, what}; }

} // namespace tolopt
