#include <gtest/gtest.h>

#include <vector>

#include "aoi/oracle.hpp"
#include "oracle_compare.hpp"

namespace aoi {
namespace {

TEST(BruteForce, BernoulliNoReceptions) {
  const auto o = brute_force_posterior(pmf(Geometric{0.5}), SourceObservation{}, 3, 1.0);
  EXPECT_NEAR(o.table[3][3], 0.5, 1e-12);
  EXPECT_NEAR(o.table[3][2], 0.25, 1e-12);
  EXPECT_NEAR(o.table[3][1], 0.25, 1e-12);
  EXPECT_NEAR(o.source_timestamp, 2.25, 1e-12);
  EXPECT_DOUBLE_EQ(o.generation[1], 1.0);
}

TEST(BruteForce, PeriodicPointMass) {
  const auto o = brute_force_posterior(pmf(Periodic{2}), SourceObservation{}, 8, 1.0);
  for (Slot phi = 1; phi <= 8; ++phi) {
    const Slot last_odd = phi % 2 ? phi : phi - 1;
    EXPECT_DOUBLE_EQ(o.table[static_cast<std::size_t>(phi)][static_cast<std::size_t>(last_odd)], 1.0);
  }
}

TEST(BruteForce, TwoOrThreeGaps) {
  const auto o = brute_force_posterior(pmf(Explicit{{0.0, 0.5, 0.5}}), SourceObservation{}, 4, 1.0);
  EXPECT_NEAR(o.table[4][3], 0.5, 1e-12);
  EXPECT_NEAR(o.table[4][4], 0.5, 1e-12);
}

TEST(BruteForce, DeliveryDistribution) {
  const std::vector<int> one{2};
  auto d = brute_force_delivery_distribution(one, 0.5);
  EXPECT_NEAR(d[1], 0.75, 1e-15);
  EXPECT_NEAR(d[0], 0.25, 1e-15);
  const std::vector<int> two{1, 1};
  d = brute_force_delivery_distribution(two, 0.5);
  EXPECT_NEAR(d[2], 0.5, 1e-15);
  EXPECT_NEAR(d[1], 0.25, 1e-15);
  EXPECT_NEAR(d[0], 0.25, 1e-15);
  const std::vector<int> three{1, 2, 1};
  d = brute_force_delivery_distribution(three, 1.0);
  EXPECT_EQ(d, (std::vector<double>{0, 0, 0, 1}));
}

TEST(BruteForce, DestinationWithDelay) {
  // one packet received at 2 (fresh source), delay 1, pD = 0.5
  SourceObservation obs;
  obs.record(2, 2);
  const auto o = brute_force_posterior(pmf(Periodic{1}), obs, 3, 0.5, 1);
  EXPECT_NEAR(o.dest_timestamp, 1.0, 1e-12);
  EXPECT_NEAR(o.delivery[1], 0.5, 1e-12);
}

TEST(BruteForce, InconsistentRecordThrows) {
  SourceObservation obs;
  obs.record(1, 1);
  obs.record(2, 1);  // X = 1 always: slot 2 must hold a new packet
  EXPECT_THROW(brute_force_posterior(pmf(Periodic{1}), obs, 3, 1.0), ObservationError);
}

TEST(BruteForce, HorizonLimit) {
  EXPECT_THROW(brute_force_posterior(pmf(Periodic{1}), SourceObservation{}, kOracleMaxHorizon + 1, 1.0),
               std::invalid_argument);
}

class Equivalence : public ::testing::TestWithParam<int> {};

TEST_P(Equivalence, EstimatorsMatchEnumeration) {
  const std::vector<GenSpec> fam{Periodic{2}, Periodic{3}, Uniform{2, 4}, Geometric{0.5}, Explicit{{0.2, 0.5, 0.0, 0.3}}};
  const auto& g = fam[static_cast<std::size_t>(GetParam())];
  const auto gap = testing::oracle_family(g, 40, 100 + static_cast<std::uint64_t>(GetParam()));
  EXPECT_LE(gap.table, 1e-9) << describe(g);
  EXPECT_LE(gap.source, 1e-9);
  EXPECT_LE(gap.packet, 1e-9);
  EXPECT_LE(gap.delivery, 1e-9);
  EXPECT_LE(gap.dest, 1e-9);
  EXPECT_LE(gap.batch, 1e-12);
  EXPECT_GT(gap.checks, 0);
}

INSTANTIATE_TEST_SUITE_P(Families, Equivalence, ::testing::Range(0, 5));

}  // namespace
}  // namespace aoi
