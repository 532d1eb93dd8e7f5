#include "erode/polyfit.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "text_util.hpp"

namespace erode {

namespace {

// Pivot ratio beyond which the scaled normal system is treated as singular.
constexpr double kSingularCondition = 1e13;

using Matrix = std::vector<std::vector<double>>;

struct Solution {
  std::vector<double> x;
  double condition_estimate = 1.0;
};

// Gaussian elimination with partial pivoting followed by one step of iterative
// refinement against the original system.
Solution solve_pivoted(const Matrix& a, const std::vector<double>& b) {
  const std::size_t n = b.size();
  Matrix lu = a;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  double max_pivot = 0.0;
  double min_pivot = std::numeric_limits<double>::infinity();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = col;
    for (std::size_t row = col + 1; row < n; ++row) {
      if (std::abs(lu[row][col]) > std::abs(lu[best][col])) best = row;
    }
    std::swap(lu[col], lu[best]);
    std::swap(perm[col], perm[best]);
    const double pivot = lu[col][col];
    max_pivot = std::max(max_pivot, std::abs(pivot));
    min_pivot = std::min(min_pivot, std::abs(pivot));
    if (pivot == 0.0) continue;
    for (std::size_t row = col + 1; row < n; ++row) {
      const double factor = lu[row][col] / pivot;
      lu[row][col] = factor;
      for (std::size_t k = col + 1; k < n; ++k) lu[row][k] -= factor * lu[col][k];
    }
  }
  const double condition =
      min_pivot > 0.0 ? max_pivot / min_pivot : std::numeric_limits<double>::infinity();
  if (!(condition < kSingularCondition)) {
    throw SingularSystemError("normal equations are numerically singular (condition estimate " +
                                  format_exact(condition) + ")",
                              condition);
  }

  const auto lu_solve = [&](const std::vector<double>& rhs) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = rhs[perm[i]];
      for (std::size_t k = 0; k < i; ++k) s -= lu[i][k] * y[k];
      y[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = y[i];
      for (std::size_t k = i + 1; k < n; ++k) s -= lu[i][k] * y[k];
      y[i] = s / lu[i][i];
    }
    return y;
  };

  std::vector<double> x = lu_solve(b);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    long double s = b[i];
    for (std::size_t k = 0; k < n; ++k) s -= static_cast<long double>(a[i][k]) * x[k];
    r[i] = static_cast<double>(s);
  }
  const std::vector<double> dx = lu_solve(r);
  for (std::size_t i = 0; i < n; ++i) x[i] += dx[i];
  return {std::move(x), condition};
}

// Coefficients in z = (x - center) / half_width rewritten as coefficients in x.
std::vector<double> unscale(const std::vector<double>& z_coeffs, const Scaling& s) {
  const double slope = 1.0 / s.half_width;
  const double offset = -s.center / s.half_width;
  std::vector<double> out{z_coeffs.back()};
  for (std::size_t k = z_coeffs.size() - 1; k-- > 0;) {
    // out <- out * (slope * x + offset) + c_k
    std::vector<double> next(out.size() + 1, 0.0);
    for (std::size_t j = 0; j < out.size(); ++j) {
      next[j] += out[j] * offset;
      next[j + 1] += out[j] * slope;
    }
    next[0] += z_coeffs[k];
    out = std::move(next);
  }
  return out;
}

// Raw coefficients rewritten in z: a Taylor shift to the center, then powers of the
// half-width. Carried in long double.
std::vector<double> rescale(const std::vector<double>& raw, const Scaling& s) {
  std::vector<long double> c(raw.begin(), raw.end());
  const long double center = s.center;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    for (std::size_t k = c.size() - 1; k > i; --k) c[k - 1] += center * c[k];
  }
  std::vector<double> out(c.size());
  long double scale = 1.0L;
  for (std::size_t k = 0; k < c.size(); ++k) {
    out[k] = static_cast<double>(c[k] * scale);
    scale *= s.half_width;
  }
  return out;
}

double sum_squares(std::span<const double> values) {
  double s = 0.0;
  for (const double v : values) s += v * v;
  return s;
}

}  // namespace

void PolynomialModel::check() const {
  if (coeffs_.empty()) {
    throw ValidationError("polynomial needs at least one coefficient");
  }
  for (const double c : coeffs_) {
    if (!std::isfinite(c)) throw ValidationError("polynomial coefficient is not finite");
  }
  for (const double c : scaled_) {
    if (!std::isfinite(c)) throw ValidationError("scaled coefficient is not finite");
  }
  if (!std::isfinite(domain_.lo) || !std::isfinite(domain_.hi) || !(domain_.lo < domain_.hi)) {
    throw ValidationError("polynomial domain must satisfy lo < hi, got [" +
                          format_exact(domain_.lo) + ", " + format_exact(domain_.hi) + "]");
  }
  if (!std::isfinite(scaling_.center) || !std::isfinite(scaling_.half_width) ||
      !(scaling_.half_width > 0.0)) {
    throw ValidationError("scaling half-width must be positive");
  }
}

PolynomialModel::PolynomialModel(std::vector<double> coeffs, Interval domain, Scaling scaling)
    : coeffs_(std::move(coeffs)), domain_(domain), scaling_(scaling) {
  if (!coeffs_.empty() && std::isfinite(scaling_.half_width) && scaling_.half_width > 0.0) {
    scaled_ = rescale(coeffs_, scaling_);
  }
  check();
}

PolynomialModel::PolynomialModel(std::vector<double> coeffs, Interval domain)
    : PolynomialModel(std::move(coeffs), domain, Scaling::for_interval(domain)) {}

PolynomialModel PolynomialModel::from_scaled(std::vector<double> scaled_coeffs, Interval domain,
                                             Scaling scaling) {
  PolynomialModel m;
  m.scaled_ = std::move(scaled_coeffs);
  m.domain_ = domain;
  m.scaling_ = scaling;
  if (!m.scaled_.empty() && std::isfinite(scaling.half_width) && scaling.half_width > 0.0) {
    m.coeffs_ = unscale(m.scaled_, scaling);
  }
  m.check();
  return m;
}

double PolynomialModel::evaluate(double p) const noexcept {
  const double z = (p - scaling_.center) / scaling_.half_width;
  double acc = scaled_.back();
  for (std::size_t k = scaled_.size() - 1; k-- > 0;) acc = acc * z + scaled_[k];
  return acc;
}

PolynomialModel derivative(const PolynomialModel& model) {
  const auto c = model.scaled_coefficients();
  const double hw = model.scaling().half_width;
  std::vector<double> d;
  if (c.size() == 1) {
    d.push_back(0.0);
  } else {
    d.reserve(c.size() - 1);
    for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k] / hw);
  }
  return PolynomialModel::from_scaled(std::move(d), model.domain(), model.scaling());
}

FitReport fit(const Dataset& data, int degree) {
  if (degree < 1 || degree > kMaxFitDegree) {
    throw ValidationError("degree must be in 1.." + std::to_string(kMaxFitDegree) + ", got " +
                          std::to_string(degree));
  }
  data.validate();
  const auto n_coeffs = static_cast<std::size_t>(degree) + 1;
  if (data.points.size() < n_coeffs) {
    throw ValidationError("degree " + std::to_string(degree) + " needs at least " +
                          std::to_string(n_coeffs) + " points, got " +
                          std::to_string(data.points.size()));
  }
  std::vector<double> xs;
  xs.reserve(data.points.size());
  for (const auto& p : data.points) xs.push_back(p.x);
  std::sort(xs.begin(), xs.end());
  const auto distinct =
      static_cast<std::size_t>(std::unique(xs.begin(), xs.end()) - xs.begin());
  if (distinct < n_coeffs) {
    throw ValidationError("degree " + std::to_string(degree) + " needs at least " +
                          std::to_string(n_coeffs) + " distinct powers, got " +
                          std::to_string(distinct));
  }

  const Interval domain{xs.front(), xs[distinct - 1]};
  const Scaling scaling = Scaling::for_interval(domain);

  // Normal equations in the scaled variable: G[j][k] = sum z^(j+k), b[j] = sum z^j y.
  std::vector<double> moments(2 * n_coeffs - 1, 0.0);
  std::vector<double> rhs(n_coeffs, 0.0);
  for (const auto& p : data.points) {
    const double z = (p.x - scaling.center) / scaling.half_width;
    double zk = 1.0;
    for (std::size_t k = 0; k < moments.size(); ++k) {
      moments[k] += zk;
      if (k < n_coeffs) rhs[k] += zk * p.y;
      zk *= z;
    }
  }
  Matrix normal(n_coeffs, std::vector<double>(n_coeffs));
  for (std::size_t j = 0; j < n_coeffs; ++j) {
    for (std::size_t k = 0; k < n_coeffs; ++k) normal[j][k] = moments[j + k];
  }
  const Solution solution = solve_pivoted(normal, rhs);

  PolynomialModel model = PolynomialModel::from_scaled(solution.x, domain, scaling);
  std::vector<double> residuals;
  residuals.reserve(data.points.size());
  for (const auto& p : data.points) residuals.push_back(model.evaluate(p.x) - p.y);
  const double rss = sum_squares(residuals);
  const double rmse = std::sqrt(rss / static_cast<double>(residuals.size()));
  return FitReport{std::move(model), std::move(residuals), rss, rmse,
                   solution.condition_estimate};
}

double deviation(const PolynomialModel& model, const Dataset& validation,
                 DeviationMetric metric) {
  if (validation.points.empty()) {
    throw ValidationError("validation dataset is empty");
  }
  double rss = 0.0;
  for (const auto& p : validation.points) {
    const double r = model.evaluate(p.x) - p.y;
    rss += r * r;
  }
  switch (metric) {
    case DeviationMetric::kRootSumSquares:
      return std::sqrt(rss);
    case DeviationMetric::kRmse:
      break;
  }
  return std::sqrt(rss / static_cast<double>(validation.points.size()));
}

std::size_t select_best_index(std::span<const FitReport> reports,
                              std::span<const double> deviations) {
  if (reports.empty()) {
    throw ValidationError("no fit reports to select from");
  }
  if (deviations.size() != reports.size()) {
    throw std::invalid_argument("one deviation per report is required");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const bool lower = deviations[i] < deviations[best];
    const bool tie_simpler = deviations[i] == deviations[best] &&
                             reports[i].model.degree() < reports[best].model.degree();
    if (lower || tie_simpler) best = i;
  }
  return best;
}

const FitReport& select_best(std::span<const FitReport> reports, const Dataset& validation,
                             DeviationMetric metric) {
  if (reports.empty()) {
    throw ValidationError("no fit reports to select from");
  }
  std::vector<double> devs;
  devs.reserve(reports.size());
  for (const auto& r : reports) devs.push_back(deviation(r.model, validation, metric));
  return reports[select_best_index(reports, devs)];
}

// ---------------------------------------------------------------------------

void write_model(std::ostream& out, const PolynomialModel& model) {
  out << kModelHeader << '\n' << "degree " << model.degree() << '\n' << "coefficients";
  for (const double c : model.coefficients()) out << ' ' << format_exact(c);
  out << '\n'
      << "domain " << format_exact(model.domain().lo) << ' ' << format_exact(model.domain().hi)
      << '\n'
      << "scaling " << format_exact(model.scaling().center) << ' '
      << format_exact(model.scaling().half_width) << '\n'
      << "scaled_coefficients";
  for (const double c : model.scaled_coefficients()) out << ' ' << format_exact(c);
  out << '\n';
}

std::string to_text(const PolynomialModel& model) {
  std::ostringstream out;
  write_model(out, model);
  return out.str();
}

PolynomialModel read_model(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  const auto next_line = [&](std::string_view key) {
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = detail::trim(raw);
      if (line.empty() || line.front() == '#') continue;
      if (!key.empty()) {
        const auto fields = detail::split(line, ' ');
        if (fields.front() != key) {
          throw ParseError(line_no, 0, "expected \"" + std::string(key) + "\"");
        }
      }
      return std::string(line);
    }
    throw ParseError(line_no + 1, 0,
                     "unexpected end of model text, expected \"" + std::string(key) + "\"");
  };
  const auto numbers = [&](const std::string& line, std::size_t expected) {
    std::vector<double> out;
    std::size_t column = 1;
    for (const auto field : detail::split(line, ' ')) {
      if (field.empty()) continue;
      if (column++ == 1) continue;  // key
      const auto v = detail::parse_double(field);
      if (!v) throw ParseError(line_no, column - 1, "bad number \"" + std::string(field) + "\"");
      out.push_back(*v);
    }
    if (expected != 0 && out.size() != expected) {
      throw ParseError(line_no, 0,
                       "expected " + std::to_string(expected) + " values, found " +
                           std::to_string(out.size()));
    }
    return out;
  };

  if (next_line({}) != kModelHeader) {
    throw ParseError(line_no, 0, "expected \"" + std::string(kModelHeader) + "\"");
  }
  const auto degree_value = numbers(next_line("degree"), 1).front();
  if (degree_value < 0 || degree_value != std::floor(degree_value) || degree_value > 64) {
    throw ParseError(line_no, 2, "bad degree");
  }
  const auto coeffs = numbers(next_line("coefficients"), static_cast<std::size_t>(degree_value) + 1);
  const auto domain = numbers(next_line("domain"), 2);
  const auto scaling = numbers(next_line("scaling"), 2);
  std::optional<std::vector<double>> scaled;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (scaled || detail::split(line, ' ').front() != "scaled_coefficients") {
      throw ParseError(line_no, 0, "unexpected line after \"scaling\"");
    }
    scaled = numbers(std::string(line), coeffs.size());
  }
  try {
    if (scaled) {
      PolynomialModel m;
      m.coeffs_ = coeffs;
      m.scaled_ = *scaled;
      m.domain_ = {domain[0], domain[1]};
      m.scaling_ = {scaling[0], scaling[1]};
      m.check();
      // Both series must describe the same polynomial across the domain, up to the
      // rounding that the raw coefficients carry on their own.
      double size = 0.0;
      for (const double c : m.scaled_) size += std::abs(c);
      for (const double p : {m.domain_.lo, 0.5 * (m.domain_.lo + m.domain_.hi), m.domain_.hi}) {
        long double raw_value = 0.0L;
        long double raw_size = 0.0L;
        for (std::size_t k = coeffs.size(); k-- > 0;) {
          raw_value = raw_value * p + coeffs[k];
          raw_size = raw_size * std::abs(p) + std::abs(coeffs[k]);
        }
        const double slack =
            1e-9 * size + 16.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(raw_size);
        if (std::abs(static_cast<double>(raw_value) - m.evaluate(p)) > slack) {
          throw ParseError(line_no, 0, "coefficients disagree with scaled_coefficients");
        }
      }
      return m;
    }
    return PolynomialModel(coeffs, {domain[0], domain[1]}, {scaling[0], scaling[1]});
  } catch (const ValidationError& e) {
    throw ParseError(line_no, 0, e.what());
  }
}

PolynomialModel model_from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_model(in);
}

}  // namespace erode
