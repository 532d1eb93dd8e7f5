#include "erode/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace erode {

namespace {

// Uniform double in [0, 1) from the top 53 bits, so sequences do not depend on the
// standard library's distribution implementation.
class UnitStream {
 public:
  explicit UnitStream(std::uint64_t seed) : engine_(seed) {}

  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// Running minimum; strict comparison keeps the first candidate on ties.
struct Best {
  double p = std::numeric_limits<double>::quiet_NaN();
  double value = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;

  void offer(double candidate, double v) {
    ++evaluations;
    if (v < value || std::isnan(p)) {
      p = candidate;
      value = v;
    }
  }
};

OptimizationResult make_result(Method method, const Best& best, bool converged) {
  return {method, best.p, best.value, best.evaluations, converged, best.value > 0.0};
}

std::vector<double> trimmed(std::span<const double> coeffs) {
  std::vector<double> c(coeffs.begin(), coeffs.end());
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
  return c;
}

double horner(const std::vector<double>& c, double x) {
  double acc = c.back();
  for (std::size_t k = c.size() - 1; k-- > 0;) acc = acc * x + c[k];
  return acc;
}

// Bisection on a bracket with g(a), g(b) of opposite sign; returns the endpoint with
// the smaller residual once the bracket cannot shrink any further.
template <typename G>
double bisect(const G& g, double a, double b) {
  double ga = g(a);
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (a + b);
    if (!(mid > a && mid < b)) break;
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == (ga < 0.0)) {
      a = mid;
      ga = gm;
    } else {
      b = mid;
    }
  }
  return std::abs(g(a)) <= std::abs(g(b)) ? a : b;
}

// All real roots of a polynomial in [lo, hi], found by splitting at the roots of its
// derivative (recursively) so that each piece is monotone.
std::vector<double> real_roots(std::vector<double> c, double lo, double hi) {
  c = trimmed(c);
  std::vector<double> roots;
  if (c.size() == 1) return roots;
  if (c.size() == 2) {
    const double r = -c[0] / c[1];
    if (r >= lo && r <= hi) roots.push_back(r);
    return roots;
  }
  std::vector<double> dc;
  for (std::size_t k = 1; k < c.size(); ++k) dc.push_back(static_cast<double>(k) * c[k]);
  std::vector<double> knots{lo};
  for (const double r : real_roots(dc, lo, hi)) {
    if (r > knots.back() && r < hi) knots.push_back(r);
  }
  knots.push_back(hi);
  const auto g = [&](double x) { return horner(c, x); };
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double a = knots[i];
    const double b = knots[i + 1];
    const double ga = g(a);
    const double gb = g(b);
    if (ga == 0.0) {
      roots.push_back(a);
    } else if ((ga < 0.0) != (gb < 0.0) && gb != 0.0) {
      roots.push_back(bisect(g, a, b));
    }
  }
  if (g(hi) == 0.0) roots.push_back(hi);
  return roots;
}

}  // namespace

Range::Range(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw ValidationError("range must satisfy lo < hi with finite ends, got [" +
                          format_exact(lo) + ", " + format_exact(hi) + "]");
  }
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kAnalytic:
      return "analytic";
    case Method::kGrid:
      return "grid";
    case Method::kPureRandom:
      return "pure_random";
    case Method::kControlledRandom:
      return "controlled_random";
  }
  return "unknown";
}

std::vector<double> stationary_points(const PolynomialModel& model, const Range& range) {
  if (model.degree() > 3) {
    throw UnsupportedDegreeError("analytic minimization supports degree <= 3, got degree " +
                                 std::to_string(model.degree()) +
                                 "; use the grid or random search methods instead");
  }
  // Roots are found in z and mapped back to P.
  const auto dc = trimmed(derivative(model).scaled_coefficients());
  std::vector<double> roots;
  if (dc.size() == 2) {
    roots.push_back(-dc[0] / dc[1]);
  } else if (dc.size() == 3) {
    const double a = dc[2];
    const double b = dc[1];
    const double c = dc[0];
    const double disc = b * b - 4.0 * a * c;
    if (disc == 0.0) {
      roots.push_back(-b / (2.0 * a));
    } else if (disc > 0.0) {
      // Cancellation-free form: q = -(b + sign(b) sqrt(disc)) / 2, roots q/a and c/q.
      const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
      roots.push_back(q / a);
      if (q != 0.0) roots.push_back(c / q);
    }
  }
  const Scaling& s = model.scaling();
  for (double& r : roots) r = s.center + s.half_width * r;
  std::erase_if(roots, [&](double r) { return !range.contains(r); });
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  return roots;
}

OptimizationResult minimize_analytic(const PolynomialModel& model, const Range& range) {
  std::vector<double> candidates{range.lo()};
  for (const double r : stationary_points(model, range)) candidates.push_back(r);
  candidates.push_back(range.hi());
  Best best;
  for (const double p : candidates) best.offer(p, model.evaluate(p));
  return make_result(Method::kAnalytic, best, true);
}

OptimizationResult minimize_grid(const PolynomialModel& model, const Range& range,
                                 std::size_t n) {
  if (n < 2) {
    throw ValidationError("grid search needs at least 2 points");
  }
  Best best;
  const double step_den = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = (i + 1 == n) ? range.hi()
                                  : range.lo() + range.width() * (static_cast<double>(i) / step_den);
    best.offer(p, model.evaluate(p));
  }
  return make_result(Method::kGrid, best, true);
}

OptimizationResult minimize_pure_random(const PolynomialModel& model, const Range& range,
                                        std::size_t n, std::uint64_t seed) {
  if (n < 1) {
    throw ValidationError("random search needs at least 1 sample");
  }
  UnitStream unit(seed);
  Best best;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = range.lo() + range.width() * unit.next();
    best.offer(p, model.evaluate(p));
  }
  return make_result(Method::kPureRandom, best, true);
}

void RandomSearchParams::validate() const {
  if (samples_per_iteration < 2) {
    throw ValidationError("samples_per_iteration must be at least 2");
  }
  if (!(shrink_factor > 0.0 && shrink_factor < 1.0)) {
    throw ValidationError("shrink_factor must lie in (0, 1)");
  }
  if (!(width_tolerance > 0.0) || !std::isfinite(width_tolerance)) {
    throw ValidationError("width_tolerance must be positive");
  }
  if (max_iterations < 1) {
    throw ValidationError("max_iterations must be at least 1");
  }
}

ControlledRandomRun controlled_random_search(const PolynomialModel& model, const Range& range,
                                             const RandomSearchParams& params) {
  params.validate();
  UnitStream unit(params.seed);
  Best best;
  ControlledRandomRun run;
  const std::size_t strata = params.samples_per_iteration - 2;

  double lo = range.lo();
  double hi = range.hi();
  double width = range.width();
  bool converged = false;
  while (run.iterations < params.max_iterations) {
    best.offer(lo, model.evaluate(lo));
    best.offer(hi, model.evaluate(hi));
    const double cell = (hi - lo) / static_cast<double>(strata == 0 ? 1 : strata);
    for (std::size_t j = 0; j < strata; ++j) {
      const double p = std::min(hi, lo + cell * (static_cast<double>(j) + unit.next()));
      best.offer(p, model.evaluate(p));
    }
    ++run.iterations;

    width *= params.shrink_factor;
    lo = best.p - 0.5 * width;
    hi = best.p + 0.5 * width;
    if (lo < range.lo()) {
      lo = range.lo();
      hi = range.lo() + width;
    } else if (hi > range.hi()) {
      hi = range.hi();
      lo = range.hi() - width;
    }
    run.widths.push_back(width);
    if (width < params.width_tolerance) {
      converged = true;
      break;
    }
  }
  run.result = make_result(Method::kControlledRandom, best, converged);
  return run;
}

OptimizationResult minimize_controlled_random(const PolynomialModel& model, const Range& range,
                                              const RandomSearchParams& params) {
  return controlled_random_search(model, range, params).result;
}

std::vector<double> inverse_solve(const PolynomialModel& model, double target_t,
                                  const Range& range) {
  if (!std::isfinite(target_t)) {
    throw ValidationError("inverse target must be finite");
  }
  constexpr std::size_t kScanCells = 2048;
  const double tol = inverse_tolerance(target_t);
  const auto g = [&](double p) { return model.evaluate(p) - target_t; };

  const auto c = trimmed(model.scaled_coefficients());
  if (c.size() == 1) {
    // Flat model: either nowhere or everywhere; report the ends in the latter case.
    if (std::abs(g(range.lo())) <= tol) return {range.lo(), range.hi()};
    return {};
  }

  std::vector<double> knots;
  knots.reserve(kScanCells + 8);
  for (std::size_t i = 0; i < kScanCells; ++i) {
    knots.push_back(range.lo() +
                    range.width() * (static_cast<double>(i) / static_cast<double>(kScanCells)));
  }
  knots.push_back(range.hi());
  std::vector<double> dc;
  for (std::size_t k = 1; k < c.size(); ++k) dc.push_back(static_cast<double>(k) * c[k]);
  const Scaling& s = model.scaling();
  const double z_lo = (range.lo() - s.center) / s.half_width;
  const double z_hi = (range.hi() - s.center) / s.half_width;
  for (const double z : real_roots(dc, z_lo, z_hi)) {
    const double r = std::clamp(s.center + s.half_width * z, range.lo(), range.hi());
    knots.push_back(r);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  std::vector<double> candidates;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const double gi = g(knots[i]);
    if (std::abs(gi) <= tol) candidates.push_back(knots[i]);
    if (i + 1 < knots.size()) {
      const double gn = g(knots[i + 1]);
      if (gi != 0.0 && gn != 0.0 && (gi < 0.0) != (gn < 0.0)) {
        const double root = bisect(g, knots[i], knots[i + 1]);
        if (std::abs(g(root)) <= tol) candidates.push_back(root);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());

  // Neighbours belong to the same root when the model stays within tolerance between
  // them; keep the one with the smallest residual.
  std::vector<double> roots;
  for (const double p : candidates) {
    if (!roots.empty()) {
      const double prev = roots.back();
      if (p == prev || std::abs(g(0.5 * (prev + p))) <= tol) {
        if (std::abs(g(p)) < std::abs(g(prev))) roots.back() = p;
        continue;
      }
    }
    roots.push_back(p);
  }
  return roots;
}

}  // namespace erode
