#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "erode/experiment_store.hpp"

namespace erode {

inline constexpr int kMaxFitDegree = 6;

/// The normal system of a fit is numerically singular.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& message, double condition_estimate)
      : std::runtime_error(message), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// Closed interval of the model variable, lo < hi.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Affine map z = (x - center) / half_width used while fitting.
struct Scaling {
  double center = 0.0;
  double half_width = 1.0;

  static Scaling for_interval(const Interval& domain) {
    return {0.5 * (domain.lo + domain.hi), 0.5 * (domain.hi - domain.lo)};
  }

  friend bool operator==(const Scaling&, const Scaling&) = default;
};

/// Processing time as a polynomial in induced power, t = a_0 + a_1 P + ... + a_d P^d.
///
/// Coefficients are reported in ascending order and in the original units (seconds per
/// watt^k). Evaluation goes through the equivalent series in the scaled variable
/// z = (P - center) / half_width, which stays accurate on narrow domains far from zero
/// where the raw power series cancels badly. The domain is the power interval the model
/// was fitted or declared on; evaluation outside it is allowed and left to callers to
/// flag. Instances are immutable.
class PolynomialModel {
 public:
  /// Throws ValidationError unless coeffs is non-empty and finite, domain.lo < domain.hi
  /// (both finite) and scaling.half_width > 0.
  PolynomialModel(std::vector<double> coeffs, Interval domain, Scaling scaling);
  PolynomialModel(std::vector<double> coeffs, Interval domain);

  /// Model given by its coefficients in z; the raw coefficients are derived from them.
  static PolynomialModel from_scaled(std::vector<double> scaled_coeffs, Interval domain,
                                     Scaling scaling);

  /// Degree d, i.e. coefficients().size() - 1. Derivatives may reach degree 0.
  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  std::span<const double> coefficients() const noexcept { return coeffs_; }
  const Interval& domain() const noexcept { return domain_; }
  const Scaling& scaling() const noexcept { return scaling_; }
  /// Coefficients of the same polynomial in z, ascending.
  std::span<const double> scaled_coefficients() const noexcept { return scaled_; }

  bool in_domain(double p) const noexcept { return p >= domain_.lo && p <= domain_.hi; }

  /// Horner evaluation in z.
  double evaluate(double p) const noexcept;
  double operator()(double p) const noexcept { return evaluate(p); }

  friend bool operator==(const PolynomialModel&, const PolynomialModel&) = default;

 private:
  friend PolynomialModel read_model(std::istream& in);

  PolynomialModel() = default;
  void check() const;

  std::vector<double> coeffs_;
  std::vector<double> scaled_;
  Interval domain_;
  Scaling scaling_;
};

inline double evaluate(const PolynomialModel& model, double p) { return model.evaluate(p); }

/// Term-wise derivative: coefficients k * a_k shifted down one place, computed on the
/// scaled series. A constant model (degree 0) differentiates to the zero constant.
PolynomialModel derivative(const PolynomialModel& model);

struct FitReport {
  PolynomialModel model;
  std::vector<double> residuals;  // model minus observed, per training point
  double rss = 0.0;
  double deviation = 0.0;           // RMSE on the training data
  double condition_estimate = 1.0;  // max |pivot| / min |pivot| of the scaled normal system
};

/// Least-squares polynomial of the given degree (1..kMaxFitDegree).
///
/// Powers are mapped onto [-1, 1] by their midrange and half-range, the normal
/// equations are assembled in that variable and solved by Gaussian elimination with
/// partial pivoting, and the solution is expanded back to raw powers. The returned
/// model's domain is [min x, max x].
///
/// Throws ValidationError for an out-of-range degree, too few points, or too few
/// distinct powers; SingularSystemError when the scaled normal matrix is singular to
/// working precision.
FitReport fit(const Dataset& data, int degree);

enum class DeviationMetric {
  kRmse,            // sqrt(sum r^2 / n)
  kRootSumSquares,  // sqrt(sum r^2)
};

/// Error of `model` on `validation`. Throws ValidationError on an empty dataset.
double deviation(const PolynomialModel& model, const Dataset& validation,
                 DeviationMetric metric = DeviationMetric::kRmse);

/// Report with minimum deviation on `validation`; ties go to the lower degree, then
/// to the earlier report. Throws ValidationError when `reports` is empty.
const FitReport& select_best(std::span<const FitReport> reports, const Dataset& validation,
                             DeviationMetric metric = DeviationMetric::kRmse);

/// Same rule, applied to deviations that were already computed (one per report).
std::size_t select_best_index(std::span<const FitReport> reports,
                              std::span<const double> deviations);

// ---------------------------------------------------------------------------
// Model text form
//
//   erode-model v1
//   degree <d>
//   coefficients <a_0> ... <a_d>
//   domain <lo> <hi>
//   scaling <center> <half_width>
//   scaled_coefficients <c_0> ... <c_d>
//
// Numbers use the shortest text that reads back to the same double. The last line is
// optional on input; without it the scaled series is derived from the raw coefficients.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kModelHeader = "erode-model v1";

void write_model(std::ostream& out, const PolynomialModel& model);
std::string to_text(const PolynomialModel& model);
PolynomialModel read_model(std::istream& in);
PolynomialModel model_from_text(std::string_view text);

}  // namespace erode
