#include "erode/reference_models.hpp"

#include <string>

namespace erode::reference {

PolynomialModel by_degree(int degree) {
  switch (degree) {
    case 1:
      return linear();
    case 2:
      return quadratic();
    case 3:
      return cubic();
    default:
      throw ValidationError("no reference model of degree " + std::to_string(degree));
  }
}

PolynomialModel by_name(std::string_view name) {
  if (name == "linear") return linear();
  if (name == "quadratic") return quadratic();
  if (name == "cubic") return cubic();
  throw ValidationError("unknown reference model \"" + std::string(name) +
                        "\" (expected linear, quadratic or cubic)");
}

}  // namespace erode::reference
