#include <gtest/gtest.h>

#include "support/property_checks.hpp"

namespace erode::testing {
namespace {

#define EXPECT_PROPERTY(check)                                      \
  do {                                                              \
    const CheckResult failure = (check)(kPropertyCases);            \
    EXPECT_FALSE(failure.has_value()) << failure.value_or("");      \
  } while (false)

TEST(Properties, InterpolationExactness) { EXPECT_PROPERTY(check_interpolation_exactness); }
TEST(Properties, MonotoneRssInDegree) { EXPECT_PROPERTY(check_monotone_rss); }
TEST(Properties, ResidualsSumToZero) { EXPECT_PROPERTY(check_residual_sum); }
TEST(Properties, DerivativeMatchesCentralDifference) {
  EXPECT_PROPERTY(check_derivative_finite_difference);
}
TEST(Properties, SeededDeterminism) { EXPECT_PROPERTY(check_seeded_determinism); }
TEST(Properties, ControlledRandomShrinks) { EXPECT_PROPERTY(check_controlled_shrinkage); }
TEST(Properties, InverseRoundTrip) { EXPECT_PROPERTY(check_inverse_round_trip); }
TEST(Properties, QueryLaws) { EXPECT_PROPERTY(check_query_laws); }
TEST(Properties, StoreRoundTrip) { EXPECT_PROPERTY(check_store_round_trip); }

}  // namespace
}  // namespace erode::testing
