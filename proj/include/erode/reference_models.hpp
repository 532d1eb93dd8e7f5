#pragma once

#include <array>
#include <string_view>

#include "erode/polyfit.hpp"

namespace erode::reference {

// Reference t_p(P) curves for PC52 debited with an OL37 tool, together with the
// deviations and optima reported alongside them. They serve as fixtures and as the
// baseline of the discrepancy report; none of them can be regenerated from the
// seed data alone.

inline constexpr Interval kDomain{350.0, 7000.0};

inline PolynomialModel linear() { return PolynomialModel({139.8528, -0.0227}, kDomain); }

inline PolynomialModel quadratic() {
  return PolynomialModel({173.1836, -0.0664, 6.3902e-6}, kDomain);
}

inline PolynomialModel cubic() {
  return PolynomialModel({203.1861, -0.1286, 2.9231e-5, -2.1012e-9}, kDomain);
}

/// Reference model of the given degree (1, 2 or 3).
PolynomialModel by_degree(int degree);

/// Reference model by name: "linear", "quadratic" or "cubic".
PolynomialModel by_name(std::string_view name);

struct ReportedOptimum {
  double power;
  double time;
};

/// Reported deviations of the linear, quadratic and cubic curves; the cubic is the
/// one marked optimal. The validation inputs behind them are not available.
inline constexpr std::array<double, 3> kReportedDeviation{97.228, 37.339, 11.295};

/// Reported optima of the linear, quadratic and cubic curves.
inline constexpr std::array<ReportedOptimum, 3> kReportedOptimum{
    {{3000.0, 71.75}, {2800.0, 65.55}, {2750.0, 62.04}}};

}  // namespace erode::reference
