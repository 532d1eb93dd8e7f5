// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "erode/experiment_store.hpp"
#include "erode/optimizer.hpp"
#include "erode/polyfit.hpp"
#include "erode/reference_models.hpp"
#include "erode/report.hpp"
#include "support/oracles.hpp"
#include "support/property_checks.hpp"

namespace {

using namespace erode;
namespace t = erode::testing;

struct Failure {
  std::string what;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void require_near(double got, double want, double tol, const std::string& what) {
  require(std::abs(got - want) <= tol,
          what + ": got " + num(got) + ", want " + num(want) + " +/- " + num(tol));
}

void require_sig(double got, double want, int digits, const std::string& what) {
  require(t::same_sig_figs(got, want, digits),
          what + ": got " + num(got) + ", want " + num(want) + " to " + std::to_string(digits) +
              " significant figures");
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Dataset seed_dataset() {
  std::ifstream in(t::seed_csv_path());
  ExperimentStore store;
  for (auto& r : parse_csv(in)) store.add(std::move(r));
  return extract_dataset(store.records());
}

const PolynomialModel& reference_at(int degree) {
  static const std::vector<PolynomialModel> models{reference::linear(), reference::quadratic(),
                                                   reference::cubic()};
  return models[static_cast<std::size_t>(degree - 1)];
}

// 1. ingestion
void ingestion() {
  const auto start = Clock::now();
  std::ifstream in(t::seed_csv_path());
  require(static_cast<bool>(in), "seed CSV not readable");
  ExperimentStore store;
  for (auto& r : parse_csv(in)) store.add(std::move(r));
  const double elapsed = seconds_since(start);

  require(store.size() == 12, "expected 12 records, got " + std::to_string(store.size()));
  double sum_p = 0.0, sum_t = 0.0;
  for (const auto& r : store.records()) {
    sum_p += r.power_p;
    sum_t += r.time_tp;
    require(std::abs(r.power_p - r.voltage_u * r.current_i) <= kPowerTolerance,
            "record " + std::to_string(r.id) + " violates |P - U*I| <= 0.5");
  }
  require(sum_p == 29902.5, "sum of P is " + num(sum_p));
  require(sum_t == 1023.0, "sum of t_p is " + num(sum_t));

  std::ostringstream saved;
  store.save(saved);
  std::istringstream back(saved.str());
  require(ExperimentStore::load(back) == store, "store does not survive save/load");
  require(elapsed < 1.0, "ingestion took " + num(elapsed) + " s");
}

// 2. least-squares fit
void fitting() {
  const Dataset data = seed_dataset();
  const auto line = t::closed_form_line(t::seed_powers(), t::seed_times());
  const FitReport f1 = fit(data, 1);
  require_sig(f1.model.coefficients()[0], line.intercept, 6, "degree 1 intercept");
  require_sig(f1.model.coefficients()[1], line.slope, 6, "degree 1 slope");
  for (int d = 2; d <= 3; ++d) {
    const auto oracle = t::exact_normal_equations(t::seed_powers(), t::seed_times(), d);
    const FitReport f = fit(data, d);
    for (int k = 0; k <= d; ++k) {
      require_sig(f.model.coefficients()[static_cast<std::size_t>(k)],
                  oracle[static_cast<std::size_t>(k)], 6,
                  "degree " + std::to_string(d) + " a" + std::to_string(k));
    }
  }
}

// 3. linear reference: value and inverse
void linear_reference() {
  const PolynomialModel lin = reference::linear();
  require_near(lin(3000.0), 71.75, 0.01, "linear reference at 3000 W");
  const auto roots = inverse_solve(lin, 71.75, kDefaultRange);
  require(roots.size() == 1, "expected one inverse solution, got " + std::to_string(roots.size()));
  require_near(roots[0], 3000.0, 1.0, "inverse of 71.75 s");
}

// 4. analytic optima
void analytic_optima() {
  const OptimizationResult q = minimize_analytic(reference::quadratic(), kDefaultRange);
  require_near(q.argmin_p, 5195.5, 0.5, "quadratic vertex");
  require_near(q.min_value, 0.69, 0.01, "quadratic minimum");

  const auto st = stationary_points(reference::cubic(), kDefaultRange);
  require(st.size() == 2, "expected two cubic stationary points");
  require_near(st[0], 3587.0, 2.0, "cubic local minimum");
  require_near(st[1], 5687.0, 2.0, "cubic local maximum");
  const OptimizationResult c = minimize_analytic(reference::cubic(), kDefaultRange);
  require(c.argmin_p == 7000.0, "cubic minimum should sit on the 7000 W boundary, got " +
                                    num(c.argmin_p));
  require_near(c.min_value, 14.59, 0.01, "cubic boundary minimum");
}

// 5. numerical methods against analytic
void numerical_methods() {
  const auto start = Clock::now();
  for (int d = 1; d <= 3; ++d) {
    const PolynomialModel& m = reference_at(d);
    const double exact = minimize_analytic(m, kDefaultRange).min_value;
    const std::string tag = "degree " + std::to_string(d);
    require_near(minimize_grid(m, kDefaultRange, 66501).min_value, exact, 1e-2, tag + " grid");
    require_near(minimize_pure_random(m, kDefaultRange, 100000, 20060101).min_value, exact, 1e-2,
                 tag + " pure random");
    require_near(minimize_controlled_random(m, kDefaultRange).min_value, exact, 1e-2,
                 tag + " controlled random");
  }
  const double elapsed = seconds_since(start);
  require(elapsed < 5.0, "numerical methods took " + num(elapsed) + " s");
}

// 6. properties
void properties() {
  const auto start = Clock::now();
  const std::vector<std::pair<const char*, std::function<t::CheckResult(std::size_t)>>> checks{
      {"interpolation", t::check_interpolation_exactness},
      {"monotone rss", t::check_monotone_rss},
      {"residual sum", t::check_residual_sum},
      {"derivative", t::check_derivative_finite_difference},
      {"seeded determinism", t::check_seeded_determinism},
      {"controlled shrinkage", t::check_controlled_shrinkage},
      {"inverse round trip", t::check_inverse_round_trip},
      {"query laws", t::check_query_laws},
      {"store round trip", t::check_store_round_trip},
  };
  for (const auto& [name, check] : checks) {
    if (auto failure = check(t::kPropertyCases)) throw Failure{std::string(name) + ": " + *failure};
  }
  const double elapsed = seconds_since(start);
  require(elapsed < 30.0, "property checks took " + num(elapsed) + " s");
}

// 7. model selection
void selection() {
  const Dataset data = seed_dataset();
  std::vector<FitReport> reports;
  for (int d = 1; d <= 3; ++d) reports.push_back(fit(data, d));
  const std::vector<double> devs(reference::kReportedDeviation.begin(),
                                 reference::kReportedDeviation.end());
  const std::size_t best = select_best_index(reports, devs);
  require(reports[best].model.degree() == 3,
          "selected degree " + std::to_string(reports[best].model.degree()));
}

// 8. discrepancy report
void discrepancy() {
  const DiscrepancyReport r = build_discrepancy(seed_dataset(), std::nullopt, kDefaultRange);
  require(r.degrees.size() == 3, "expected three degrees");

  const auto line = t::closed_form_line(t::seed_powers(), t::seed_times());
  require_sig(r.degrees[0].refit_coeffs[1], line.slope, 6, "refit slope");
  for (int d = 2; d <= 3; ++d) {
    const auto oracle = t::exact_normal_equations(t::seed_powers(), t::seed_times(), d);
    for (int k = 0; k <= d; ++k) {
      require_sig(r.degrees[static_cast<std::size_t>(d - 1)].refit_coeffs[static_cast<std::size_t>(k)],
                  oracle[static_cast<std::size_t>(k)], 6,
                  "refit degree " + std::to_string(d) + " a" + std::to_string(k));
    }
  }

  const auto& quad = r.degrees[1];
  require_near(quad.reference_optimum.argmin_p, 5195.5, 0.5, "quadratic reference optimum");
  require_near(quad.reference_optimum.min_value, 0.69, 0.01, "quadratic reference minimum");
  require(quad.reported_power == 2800.0 && quad.reported_time == 65.55, "quadratic reported optimum");
  require_near(quad.reference_at_reported_power, 37.3628, 1e-4, "quadratic reference at 2800 W");

  const auto& cub = r.degrees[2];
  require(cub.reference_stationary.size() == 2, "cubic stationary points missing");
  require_near(cub.reference_stationary[0], 3587.0, 2.0, "cubic local minimum");
  require_near(cub.reference_stationary[1], 5687.0, 2.0, "cubic local maximum");
  require(cub.reference_optimum.argmin_p == 7000.0, "cubic reference optimum");
  require_near(cub.reference_optimum.min_value, 14.59, 0.01, "cubic reference minimum");
  require(cub.reported_power == 2750.0 && cub.reported_time == 62.04, "cubic reported optimum");
  require_near(cub.reference_at_reported_power, reference::cubic()(2750.0), 1e-9,
               "cubic reference at 2750 W");

  const std::string md = to_markdown(r);
  for (const std::string needle :
       {"-0.01907173932", "5195.46", "0.6945", "3587.19, 5687.19", "14.5935", "2800.00",
        "65.55", "37.3628", "2750.00", "62.04", "97.228", "37.339", "11.295"}) {
    require(md.find(needle) != std::string::npos, "markdown lacks " + needle);
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, void (*)()>> criteria{
      {"ingestion of the seed table", ingestion},
      {"least-squares fit against exact oracles", fitting},
      {"linear reference value and inverse", linear_reference},
      {"analytic optima of the references", analytic_optima},
      {"grid and random searches agree with analytic", numerical_methods},
      {"property checks at 1000 cases", properties},
      {"selection by minimum deviation", selection},
      {"discrepancy report", discrepancy},
  };

  int failed = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    const auto start = Clock::now();
    std::string detail;
    bool ok = true;
    try {
      run();
    } catch (const Failure& f) {
      ok = false;
      detail = f.what;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    std::printf("%s criterion %d: %s (%.3f s)%s%s\n", ok ? "PASS" : "FAIL", index, name,
                seconds_since(start), ok ? "" : " - ", detail.c_str());
    if (!ok) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", index - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
