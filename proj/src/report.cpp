#include "erode/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "erode/reference_models.hpp"
#include "text_util.hpp"

namespace erode {

using detail::fixed;
using detail::sig;

CurveTable sample_curves(const std::vector<std::pair<std::string, PolynomialModel>>& models,
                         const Range& range, std::size_t n) {
  if (n < 2) {
    throw ValidationError("curve sampling needs at least 2 points");
  }
  CurveTable table;
  table.x.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    table.x.push_back(i + 1 == n ? range.hi()
                                 : range.lo() + range.width() * (static_cast<double>(i) /
                                                                 static_cast<double>(n - 1)));
  }
  for (const auto& [name, model] : models) {
    Series s{name, {}};
    s.y.reserve(n);
    for (const double p : table.x) s.y.push_back(model.evaluate(p));
    table.columns.push_back(std::move(s));
  }
  return table;
}

void write_curve_csv(std::ostream& out, const CurveTable& table) {
  out << "power_w";
  for (const auto& c : table.columns) out << ',' << c.name;
  out << '\n';
  for (std::size_t i = 0; i < table.x.size(); ++i) {
    out << format_exact(table.x[i]);
    for (const auto& c : table.columns) out << ',' << fixed(c.y[i], 4);
    out << '\n';
  }
}

std::string render_svg(const SvgPlot& plot) {
  constexpr double kWidth = 640, kHeight = 420;
  constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
  constexpr const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                                      "#ff7f0e", "#8c564b", "#e377c2"};

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  const auto extend = [&](double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return;
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  };
  for (const auto& m : plot.markers) extend(m.x, m.y);
  for (const auto& c : plot.curves.columns) {
    for (std::size_t i = 0; i < c.y.size(); ++i) extend(plot.curves.x[i], c.y[i]);
  }
  if (!(x_min <= x_max)) {
    x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  const double pad = 0.05 * (y_max - y_min);
  y_min -= pad;
  y_max += pad;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  const auto sy = [&](double y) { return kTop + (y_max - y) / (y_max - y_min) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << plot.title << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x_min + (x_max - x_min) * t / 4.0;
    const double yv = y_min + (y_max - y_min) * t / 4.0;
    svg << "<text x=\"" << fixed(sx(xv), 1) << "\" y=\"" << kHeight - kBottom + 18
        << "\" text-anchor=\"middle\">" << sig(xv, 5) << "</text>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed(sy(yv) + 4, 1)
        << "\" text-anchor=\"end\">" << sig(yv, 4) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">" << plot.x_label << "</text>\n";
  svg << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + plot_h / 2 << ")\">" << plot.y_label << "</text>\n";

  for (std::size_t c = 0; c < plot.curves.columns.size(); ++c) {
    const auto& col = plot.curves.columns[c];
    const char* color = kPalette[c % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < col.y.size(); ++i) {
      if (i) svg << ' ';
      svg << fixed(sx(plot.curves.x[i]), 2) << ',' << fixed(sy(col.y[i]), 2);
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w - 8 << "\" y=\"" << kTop + 16 + 14 * c
        << "\" text-anchor=\"end\" fill=\"" << color << "\">" << col.name << "</text>\n";
  }
  for (const auto& m : plot.markers) {
    svg << "<circle cx=\"" << fixed(sx(m.x), 2) << "\" cy=\"" << fixed(sy(m.y), 2)
        << "\" r=\"3.5\" fill=\"black\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

DiscrepancyReport build_discrepancy(const Dataset& training,
                                    const std::optional<Dataset>& validation,
                                    const Range& range) {
  training.validate();
  const Dataset& compare = validation ? *validation : training;
  DiscrepancyReport report;
  report.data_label = training.label;
  report.point_count = training.points.size();
  report.on_training_data = !validation.has_value();
  report.range = range;
  for (int degree = 1; degree <= 3; ++degree) {
    const auto idx = static_cast<std::size_t>(degree - 1);
    const PolynomialModel ref = reference::by_degree(degree);
    DegreeDiscrepancy d;
    d.degree = degree;
    d.reference_coeffs.assign(ref.coefficients().begin(), ref.coefficients().end());
    d.reference_deviation = deviation(ref, compare);
    d.reported_deviation = reference::kReportedDeviation[idx];
    d.reference_optimum = minimize_analytic(ref, range);
    d.reference_stationary = stationary_points(ref, range);
    d.reported_power = reference::kReportedOptimum[idx].power;
    d.reported_time = reference::kReportedOptimum[idx].time;
    d.reference_at_reported_power = ref.evaluate(d.reported_power);
    try {
      const FitReport refit = fit(training, degree);
      d.refit_coeffs.assign(refit.model.coefficients().begin(),
                            refit.model.coefficients().end());
      d.refit_deviation = deviation(refit.model, compare);
      d.refit_optimum = minimize_analytic(refit.model, range);
    } catch (const ValidationError&) {
      // Not enough distinct powers for this degree; leave the refit columns empty.
    }
    report.degrees.push_back(std::move(d));
  }
  return report;
}

std::string to_markdown(const DiscrepancyReport& report) {
  static constexpr const char* kNames[] = {"", "linear", "quadratic", "cubic"};
  const auto opt = [](const std::optional<double>& v, int decimals) {
    return v ? fixed(*v, decimals) : std::string("n/a");
  };
  std::ostringstream md;
  md << "# Refitted models versus reference models\n\n";
  md << "Data: " << report.data_label << ", " << report.point_count << " points.\n";
  md << "Deviation is the RMSE on "
     << (report.on_training_data ? "the training data (no held-out set given)"
                                 : "the held-out validation data")
     << ". Optima are searched over [" << format_exact(report.range.lo()) << ", "
     << format_exact(report.range.hi()) << "] W.\n\n";

  md << "## Coefficients (ascending powers of P)\n\n";
  md << "| model | term | refit | reference | refit - reference |\n";
  md << "|---|---|---|---|---|\n";
  for (const auto& d : report.degrees) {
    for (std::size_t k = 0; k < d.reference_coeffs.size(); ++k) {
      const bool have = k < d.refit_coeffs.size();
      md << "| " << kNames[d.degree] << " | a" << k << " | "
         << (have ? sig(d.refit_coeffs[k], 10) : "n/a") << " | "
         << sig(d.reference_coeffs[k], 10) << " | "
         << (have ? sig(d.refit_coeffs[k] - d.reference_coeffs[k], 4) : "n/a") << " |\n";
    }
  }

  md << "\n## Deviation\n\n";
  md << "| model | refit | reference curve | reported |\n";
  md << "|---|---|---|---|\n";
  for (const auto& d : report.degrees) {
    md << "| " << kNames[d.degree] << " | " << opt(d.refit_deviation, 4) << " | "
       << fixed(d.reference_deviation, 4) << " | " << fixed(d.reported_deviation, 3) << " |\n";
  }
  md << "\nThe reported deviations were measured on validation powers that are not "
        "available, so they cannot be recomputed here.\n";

  md << "\n## Optimum regime\n\n";
  md << "| model | reference P* [W] | reference t* [s] | valid | stationary points [W] | "
        "reported P* [W] | reported t* [s] | reference t at reported P* [s] | refit P* [W] | "
        "refit t* [s] |\n";
  md << "|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& d : report.degrees) {
    std::string stationary;
    for (const double s : d.reference_stationary) {
      if (!stationary.empty()) stationary += ", ";
      stationary += fixed(s, 2);
    }
    if (stationary.empty()) stationary = "none";
    md << "| " << kNames[d.degree] << " | " << fixed(d.reference_optimum.argmin_p, 2) << " | "
       << fixed(d.reference_optimum.min_value, 4) << " | "
       << (d.reference_optimum.physically_valid ? "yes" : "no") << " | " << stationary << " | "
       << fixed(d.reported_power, 2) << " | " << fixed(d.reported_time, 2) << " | "
       << fixed(d.reference_at_reported_power, 4) << " | "
       << (d.refit_optimum ? fixed(d.refit_optimum->argmin_p, 2) : "n/a") << " | "
       << (d.refit_optimum ? fixed(d.refit_optimum->min_value, 4) : "n/a") << " |\n";
  }
  md << "\nA reported optimum is consistent with its reference curve only when the curve, "
        "evaluated at the reported power, gives the reported time and that power is the "
        "curve's minimizer over the range.\n";
  for (const auto& d : report.degrees) {
    const double gap_t = d.reference_at_reported_power - d.reported_time;
    const double gap_p = d.reference_optimum.argmin_p - d.reported_power;
    md << "\n- " << kNames[d.degree] << ": t(reported P*) - reported t* = " << fixed(gap_t, 4)
       << " s; computed P* - reported P* = " << fixed(gap_p, 2) << " W";
    if (!d.reference_optimum.physically_valid) {
      md << "; the minimum time is not positive, a model artifact";
    }
    md << ".";
  }
  md << "\n";
  return md.str();
}

std::vector<std::filesystem::path> write_report(const Dataset& data,
                                                const std::filesystem::path& out_dir,
                                                const ReportOptions& options) {
  data.validate();

  std::vector<std::pair<std::string, PolynomialModel>> fitted;
  std::vector<FitReport> reports;
  for (const int degree : options.degrees) {
    try {
      reports.push_back(fit(data, degree));
      fitted.emplace_back("fit_deg" + std::to_string(degree), reports.back().model);
    } catch (const ValidationError&) {
      // Degree not supported by this dataset; it is simply absent from the curves.
    }
  }
  auto curve_models = fitted;
  curve_models.emplace_back("ref_linear", reference::linear());
  curve_models.emplace_back("ref_quadratic", reference::quadratic());
  curve_models.emplace_back("ref_cubic", reference::cubic());

  std::vector<std::pair<std::string, std::string>> files;

  std::ostringstream scatter;
  write_dataset_csv(scatter, data);
  files.emplace_back("scatter.csv", scatter.str());
  files.emplace_back("scatter.svg",
                     render_svg({"Processing time versus induced power (" + data.label + ")",
                                 "P [W]", "t_p [s]", data.points, {}}));

  const CurveTable curves = sample_curves(curve_models, options.range, options.curve_points);
  std::ostringstream curves_csv;
  write_curve_csv(curves_csv, curves);
  files.emplace_back("curves.csv", curves_csv.str());
  files.emplace_back("curves.svg",
                     render_svg({"Fitted and reference models", "P [W]", "t_p [s]",
                                 data.points, sample_curves(fitted.empty() ? curve_models : fitted,
                                                            options.range,
                                                            options.curve_points)}));

  if (!reports.empty()) {
    const Dataset& compare = options.validation ? *options.validation : data;
    const FitReport& best = select_best(reports, compare);
    std::ostringstream cmp;
    cmp << "# selected degree " << best.model.degree() << "\n";
    cmp << "power_w,observed_s,model_s,residual_s\n";
    for (const auto& p : compare.points) {
      const double m = best.model.evaluate(p.x);
      cmp << format_exact(p.x) << ',' << format_exact(p.y) << ',' << fixed(m, 4) << ','
          << fixed(m - p.y, 4) << '\n';
    }
    files.emplace_back("comparison.csv", cmp.str());
    files.emplace_back(
        "comparison.svg",
        render_svg({"Observed versus selected model (degree " +
                        std::to_string(best.model.degree()) + ")",
                    "P [W]", "t_p [s]", compare.points,
                    sample_curves({{"fit_deg" + std::to_string(best.model.degree()), best.model}},
                                  options.range, options.curve_points)}));
  }

  files.emplace_back("discrepancy.md",
                     to_markdown(build_discrepancy(data, options.validation, options.range)));

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw std::runtime_error("cannot create output directory " + out_dir.string());
  }
  std::vector<std::filesystem::path> written;
  for (const auto& [name, content] : files) {
    const auto path = out_dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) {
      throw std::runtime_error("cannot write " + path.string());
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace erode
