#include <random>

#include <gtest/gtest.h>

#include "birthflow/metrics.hpp"

namespace birthflow {
namespace {

Pmf make(std::vector<double> probs) {
  Pmf p;
  p.probs = std::move(probs);
  return p;
}

TEST(KolmogorovDistance, Identical) {
  const Pmf p = make({0.1, 0.2, 0.7});
  EXPECT_EQ(kolmogorov_distance(p, p), 0.0);
}

TEST(KolmogorovDistance, DisjointPointMasses) {
  EXPECT_DOUBLE_EQ(kolmogorov_distance(Pmf::point_mass(0, 0), Pmf::point_mass(1, 1)), 1.0);
}

TEST(KolmogorovDistance, HandComputed) {
  // Partial sums of the difference: 0.3, 0.0.
  EXPECT_NEAR(kolmogorov_distance(make({0.5, 0.5}), make({0.2, 0.8})), 0.3, 1e-15);
}

TEST(KolmogorovDistance, PadsShorterSupport) {
  EXPECT_NEAR(kolmogorov_distance(make({1.0}), make({0.5, 0.25, 0.25})), 0.5, 1e-15);
}

TEST(KolmogorovDistance, IncludesTotalMassGap) {
  // Partial sums never exceed 0.1 before the end, where the deficit is 0.2.
  EXPECT_NEAR(kolmogorov_distance(make({0.4, 0.4}), make({0.5, 0.5})), 0.2, 1e-15);
}

TEST(KolmogorovDistance, MetricProperties) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(1, 30);
  std::exponential_distribution<double> w(1.0);
  auto random_pmf = [&] {
    std::vector<double> v(len(rng));
    double s = 0.0;
    for (auto& x : v) s += (x = w(rng));
    for (auto& x : v) x /= s;
    return make(v);
  };
  for (int trial = 0; trial < 500; ++trial) {
    const Pmf p = random_pmf(), q = random_pmf();
    const double d = kolmogorov_distance(p, q);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0 + 1e-15);
    EXPECT_EQ(d, kolmogorov_distance(q, p));
    EXPECT_EQ(kolmogorov_distance(p, p), 0.0);
  }
}

TEST(Verdict, Threshold) {
  EXPECT_EQ(approximation_verdict(0.009), Verdict::kAdmissible);
  EXPECT_EQ(approximation_verdict(0.136), Verdict::kInexpedient);
  EXPECT_EQ(approximation_verdict(0.03), Verdict::kAdmissible);
  EXPECT_EQ(approximation_verdict(0.05, 0.06), Verdict::kAdmissible);
  EXPECT_STREQ(to_string(Verdict::kInexpedient), "inexpedient");
}

TEST(DistanceTable, ReferenceAnchors) {
  const auto table = build_distance_table(1.0, 15, {0.8, 1.2}, {0.1, 1.0});
  ASSERT_TRUE(table.all_ok());
  EXPECT_NEAR(table.rho(0, 0), 0.009, 0.002);
  EXPECT_NEAR(table.rho(1, 1), 0.136, 0.002);
}

TEST(DistanceTable, ZeroTimeGivesZeroDistance) {
  const auto table = build_distance_table(1.0, 15, {1.0}, {0.0});
  ASSERT_TRUE(table.all_ok());
  EXPECT_NEAR(table.rho(0, 0), 0.0, 1e-12);
}

TEST(DistanceTable, RowMajorLayoutAndWorkerIndependence) {
  const std::vector<double> bs{0.8, 1.5, 1.9}, ts{0.2, 0.6};
  const auto serial = build_distance_table(1.0, 15, bs, ts);
  const auto parallel = build_distance_table(1.0, 15, bs, ts, {.workers = 3});
  for (std::size_t i = 0; i < bs.size(); ++i) {
    for (std::size_t j = 0; j < ts.size(); ++j) {
      EXPECT_EQ(serial.at(i, j).b, bs[i]);
      EXPECT_EQ(serial.at(i, j).t, ts[j]);
      EXPECT_EQ(serial.rho(i, j), parallel.rho(i, j));
    }
  }
}

TEST(DistanceTable, FailedCellsCarryCoordinates) {
  const auto table = build_distance_table(-1.0, 15, {0.8}, {0.5});
  EXPECT_FALSE(table.all_ok());
  EXPECT_NE(table.at(0, 0).error.find("b=0.8"), std::string::npos);
}

TEST(DistanceTable, RejectsEmptyGrid) {
  EXPECT_THROW(build_distance_table(1.0, 15, {}, {0.1}), InvalidArgument);
}

TEST(DistanceTable, MonotoneRowsForSubcriticalAndMildBirthRates) {
  const auto table = build_distance_table(1.0, 15, {0.8, 1.2}, {0.1, 0.2, 0.4, 0.6, 0.8, 1.0});
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 1; j < 6; ++j) EXPECT_GT(table.rho(i, j), table.rho(i, j - 1));
  }
  // Column trend: b = 1.9 above b = 0.8 at every t.
  const auto ends = build_distance_table(1.0, 15, {0.8, 1.9}, {0.1, 0.2, 0.4, 0.6, 0.8, 1.0});
  for (std::size_t j = 0; j < 6; ++j) EXPECT_GT(ends.rho(1, j), ends.rho(0, j));
}

}  // namespace
}  // namespace birthflow
