#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace skyle {

enum class ErrorKind {
  Config,
  Size,
  Domain,
  Conditioning,
  Divergence,
  Tail,
  Bracketing,
  DegenerateInput,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct SizeError : Error {
  explicit SizeError(const std::string& w) : Error(ErrorKind::Size, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::Domain, w) {}
};
struct ConditioningError : Error {
  explicit ConditioningError(const std::string& w) : Error(ErrorKind::Conditioning, w) {}
};
struct TailError : Error {
  explicit TailError(const std::string& w) : Error(ErrorKind::Tail, w) {}
};
struct BracketingError : Error {
  explicit BracketingError(const std::string& w) : Error(ErrorKind::Bracketing, w) {}
};
struct DegenerateInputError : Error {
  explicit DegenerateInputError(const std::string& w) : Error(ErrorKind::DegenerateInput, w) {}
};

// Carries the residual history up to the point of failure.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& w, std::vector<double> history)
      : Error(ErrorKind::Divergence, w), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace skyle
