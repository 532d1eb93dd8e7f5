#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "erode/polyfit.hpp"

namespace erode {

/// Admissible power interval for the search, lo < hi, both finite.
class Range {
 public:
  /// Throws ValidationError unless lo < hi and both are finite.
  Range(double lo, double hi);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double width() const noexcept { return hi_ - lo_; }
  bool contains(double p) const noexcept { return p >= lo_ && p <= hi_; }

  friend bool operator==(const Range&, const Range&) = default;

 private:
  double lo_;
  double hi_;
};

/// Span of the seed experiments' powers, in watts.
inline const Range kDefaultRange{350.0, 7000.0};

enum class Method { kAnalytic, kGrid, kPureRandom, kControlledRandom };

std::string_view to_string(Method method);

struct OptimizationResult {
  Method method = Method::kAnalytic;
  double argmin_p = 0.0;
  double min_value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
  bool physically_valid = false;  // min_value > 0

  friend bool operator==(const OptimizationResult&, const OptimizationResult&) = default;
};

class UnsupportedDegreeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Real stationary points of a model of degree <= 3 that lie in `range`, ascending.
/// Throws UnsupportedDegreeError above degree 3.
std::vector<double> stationary_points(const PolynomialModel& model, const Range& range);

/// Minimum over the range endpoints and the interior stationary points. Degree <= 3.
/// Ties go to the smaller power.
OptimizationResult minimize_analytic(const PolynomialModel& model, const Range& range);

/// Best of n >= 2 equally spaced points, endpoints included. Ties go to the smaller power.
OptimizationResult minimize_grid(const PolynomialModel& model, const Range& range,
                                 std::size_t n);

/// Best of n >= 1 points drawn uniformly from the range.
OptimizationResult minimize_pure_random(const PolynomialModel& model, const Range& range,
                                        std::size_t n, std::uint64_t seed);

struct RandomSearchParams {
  std::size_t samples_per_iteration = 16;
  double shrink_factor = 0.5;
  double width_tolerance = 0.1;  // W
  std::size_t max_iterations = 64;
  std::uint64_t seed = 20060101;

  /// Throws ValidationError unless k >= 2, 0 < rho < 1, eps > 0, max_iterations >= 1.
  void validate() const;
};

struct ControlledRandomRun {
  OptimizationResult result;
  /// Window width after each iteration: w0*rho, w0*rho^2, ...
  std::vector<double> widths;
  std::size_t iterations = 0;
};

/// Shrinking-window random search.
///
/// Every iteration evaluates k points in the current window: both window ends and k-2
/// stratified uniform samples, one per equal sub-interval. The window is then
/// re-centered on the best point seen so far, its width multiplied by rho, and
/// shifted back inside the original range when it sticks out. The search stops when
/// the width drops below eps (converged) or after max_iterations.
ControlledRandomRun controlled_random_search(const PolynomialModel& model, const Range& range,
                                             const RandomSearchParams& params);

OptimizationResult minimize_controlled_random(const PolynomialModel& model, const Range& range,
                                              const RandomSearchParams& params = {});

/// Every P in `range` with |model(P) - target| <= 1e-6 * (1 + |target|), ascending.
///
/// Brackets sign changes of model(P) - target on a uniform scan refined with the
/// model's own turning points, then bisects each bracket. Touching roots at turning
/// points are picked up directly. An empty result means no solution in range.
std::vector<double> inverse_solve(const PolynomialModel& model, double target_t,
                                  const Range& range);

/// Tolerance used by inverse_solve to accept a root.
inline double inverse_tolerance(double target_t) { return 1e-6 * (1.0 + std::abs(target_t)); }

}  // namespace erode
