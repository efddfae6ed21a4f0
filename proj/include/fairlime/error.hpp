#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace fairlime {

// Values double as CLI exit codes.
enum class ErrorKind { usage = 1, data = 2, numeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

inline Error usage_error(const std::string& what) {
  return Error(ErrorKind::usage, what);
}
inline Error data_error(const std::string& what) {
  return Error(ErrorKind::data, what);
}
inline Error numeric_error(const std::string& what) {
  return Error(ErrorKind::numeric, what);
}

/// A fairness metric whose conditioning event is empty for some group, e.g.
/// demographic parity with no members in group 0, or equal opportunity with
/// no positive labels in group 1. Never reported as 0.
class MetricUndefined : public Error {
 public:
  MetricUndefined(std::string reason, std::size_t group0_count,
                  std::size_t group1_count, std::string side = {})
      : Error(ErrorKind::data, compose(reason, group0_count, group1_count, side)),
        reason_(std::move(reason)),
        group0_count_(group0_count),
        group1_count_(group1_count),
        side_(std::move(side)) {}

  const std::string& reason() const noexcept { return reason_; }
  std::size_t group0_count() const noexcept { return group0_count_; }
  std::size_t group1_count() const noexcept { return group1_count_; }
  // "blackbox", "surrogate", or empty when not raised through a mismatch.
  const std::string& side() const noexcept { return side_; }

  MetricUndefined with_side(std::string side) const {
    return MetricUndefined(reason_, group0_count_, group1_count_, std::move(side));
  }

 private:
  static std::string compose(const std::string& reason, std::size_t g0,
                             std::size_t g1, const std::string& side) {
    std::string msg = "metric undefined: " + reason + " (group0 count " +
                      std::to_string(g0) + ", group1 count " + std::to_string(g1) + ")";
    if (!side.empty()) msg += " [" + side + "]";
    return msg;
  }

  std::string reason_;
  std::size_t group0_count_;
  std::size_t group1_count_;
  std::string side_;
};

}  // namespace fairlime
