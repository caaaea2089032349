#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace magweyl {

// Dimensions stay tiny (d <= 4, phase space <= 8), so everything is
// stack-allocated with a fixed capacity.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 8, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 8, 8>;

enum class ErrorKind {
  degeneracy,   // structure breaks down (kernel collapses, zero intensity, ...)
  stiffness,    // adaptive stepper cannot proceed at the requested tolerance
  resolution,   // discretization refused to confirm itself (payload: both counts)
  window,       // requested window/interval contains no admissible data
  multi_well,   // single-well routine called on a multi-well configuration
  divergence,   // integral diverges (payload: capped estimate, sign is reliable)
  domain,       // argument outside the contract
  usage,        // malformed call / parse problem
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::stiffness: return "stiffness";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::window: return "window";
    case ErrorKind::multi_well: return "multi_well";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::domain: return "domain";
    case ErrorKind::usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  Error(ErrorKind kind, const std::string& msg, double estimate)
      : std::runtime_error(msg), kind_(kind), estimate_(estimate) {}
  Error(ErrorKind kind, const std::string& msg, long count_a, long count_b)
      : std::runtime_error(msg), kind_(kind), counts_(std::make_pair(count_a, count_b)) {}

  ErrorKind kind() const noexcept { return kind_; }
  // divergence errors carry the capped quadrature value; its sign is meaningful
  // even though its magnitude is not.
  bool has_estimate() const noexcept { return estimate_.has_value(); }
  double estimate() const { return estimate_.value(); }
  // resolution errors carry the two disagreeing counts.
  bool has_counts() const noexcept { return counts_.has_value(); }
  std::pair<long, long> counts() const { return counts_.value(); }

 private:
  ErrorKind kind_;
  std::optional<double> estimate_;
  std::optional<std::pair<long, long>> counts_;
};

struct PhasePoint {
  Vec x;    // position, size d
  Vec xi;   // conjugate momentum, size d

  int dim() const { return static_cast<int>(x.size()); }

  Vec packed() const {
    Vec y(2 * x.size());
    y.head(x.size()) = x;
    y.tail(x.size()) = xi;
    return y;
  }
  static PhasePoint unpack(const Vec& y) {
    const auto d = y.size() / 2;
    return PhasePoint{y.head(d), y.tail(d)};
  }
};

}  // namespace magweyl
