#pragma once

#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>

namespace smallball {

/// Thrown when the saddle equation R = f psi'(gamma) + chi'(gamma) has no
/// positive root, i.e. R >= f + 1/2.
class no_root_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown when the contour inversion cannot reach the requested tolerance.
class inversion_error : public std::runtime_error {
 public:
  inversion_error(const std::string& what, double error_estimate)
      : std::runtime_error(what), error_estimate_(error_estimate) {}

  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double error_estimate_;
};

/// Thrown by ensemble samplers that ran out of proposals before collecting
/// the requested number of accepted paths.
class exhaustion_error : public std::runtime_error {
 public:
  exhaustion_error(const std::string& what, std::uint64_t proposals,
                   std::uint64_t accepted)
      : std::runtime_error(what), proposals_(proposals), accepted_(accepted) {}

  std::uint64_t proposals() const noexcept { return proposals_; }
  std::uint64_t accepted() const noexcept { return accepted_; }
  double acceptance_rate() const noexcept {
    return proposals_ == 0 ? 0.0
                           : static_cast<double>(accepted_) /
                                 static_cast<double>(proposals_);
  }

 private:
  std::uint64_t proposals_;
  std::uint64_t accepted_;
};

namespace detail {

inline bool& warnings_enabled() {
  static bool enabled = true;
  return enabled;
}

inline void warn(const std::string& message) {
  if (warnings_enabled()) std::clog << "smallball: warning: " << message << '\n';
}

inline void require(bool condition, const char* message) {
  if (!condition) throw std::domain_error(message);
}

}  // namespace detail

/// Globally silence (or re-enable) the regime/grid warnings written to
/// std::clog.
inline void set_warnings_enabled(bool enabled) {
  detail::warnings_enabled() = enabled;
}

}  // namespace smallball
