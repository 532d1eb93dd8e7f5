#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "erode/optimizer.hpp"
#include "erode/polyfit.hpp"

namespace erode {

/// A named column of y values over a shared x grid.
struct Series {
  std::string name;
  std::vector<double> y;
};

struct CurveTable {
  std::vector<double> x;
  std::vector<Series> columns;
};

/// Samples each model at n equally spaced powers across `range`, endpoints included.
CurveTable sample_curves(const std::vector<std::pair<std::string, PolynomialModel>>& models,
                         const Range& range, std::size_t n);

/// `power_w,<name>...` with exact powers and 4-decimal times.
void write_curve_csv(std::ostream& out, const CurveTable& table);

struct SvgPlot {
  std::string title;
  std::string x_label = "P [W]";
  std::string y_label = "t_p [s]";
  std::vector<DataPoint> markers;  // drawn as dots
  CurveTable curves;               // drawn as polylines
};

/// Minimal standalone SVG rendering of a plot, with fixed-precision coordinates.
std::string render_svg(const SvgPlot& plot);

/// Refit-versus-reference comparison for one polynomial degree (1..3).
struct DegreeDiscrepancy {
  int degree = 0;
  std::vector<double> refit_coeffs;  // empty when the data cannot support this degree
  std::vector<double> reference_coeffs;
  std::optional<double> refit_deviation;  // RMSE on the comparison data
  double reference_deviation = 0.0;  // RMSE of the reference curve on the same data
  double reported_deviation = 0.0;

  OptimizationResult reference_optimum;    // analytic, over the report range
  std::vector<double> reference_stationary;
  std::optional<OptimizationResult> refit_optimum;
  double reported_power = 0.0;
  double reported_time = 0.0;
  double reference_at_reported_power = 0.0;  // reference curve evaluated at reported_power
};

struct DiscrepancyReport {
  std::string data_label;
  std::size_t point_count = 0;
  bool on_training_data = true;
  Range range = kDefaultRange;
  std::vector<DegreeDiscrepancy> degrees;  // 1, 2, 3
};

/// Fits degrees 1..3 to `training` and compares them with the reference curves.
/// Deviations are computed on `validation` when given, else on the training data.
DiscrepancyReport build_discrepancy(const Dataset& training,
                                    const std::optional<Dataset>& validation,
                                    const Range& range);

std::string to_markdown(const DiscrepancyReport& report);

struct ReportOptions {
  Range range = kDefaultRange;
  std::size_t curve_points = 267;  // 25 W spacing on the default range
  std::vector<int> degrees{1, 2, 3};
  std::optional<Dataset> validation;
};

/// Writes scatter, curve and comparison data (CSV + SVG) and the discrepancy
/// document into `out_dir`, creating it if needed. Returns the written paths.
std::vector<std::filesystem::path> write_report(const Dataset& data,
                                                const std::filesystem::path& out_dir,
                                                const ReportOptions& options = {});

}  // namespace erode
