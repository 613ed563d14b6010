#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "support.hpp"
#include "thermident/simulation.hpp"

namespace thermident {
namespace {

const Timestamp kSaturday = testing::utc(2024, 3, 9);

ExcitationSchedule one_day(std::uint64_t seed) {
  ExcitationOptions o;
  o.start = kSaturday;
  return generate_excitation(testing::twin_building(), seed, 1, o);
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  return (da * db).sum() / std::sqrt((da * da).sum() * (db * db).sum());
}

// Largest correlation between step-to-step temperature changes of
// neighboring zones over samples [begin, end).
double max_neighbor_correlation(const TimeSeriesDataset& ds, Eigen::Index begin, Eigen::Index end) {
  const auto& desc = testing::twin_building();
  const Eigen::MatrixXd d = ds.y.middleCols(begin + 1, end - begin - 1) - ds.y.middleCols(begin, end - begin - 1);
  double worst = -1.0;
  for (std::size_t a = 0; a < desc.zones.size(); ++a) {
    for (const auto& n : desc.zones[a].adjacent) {
      const auto b = *desc.zone_index(n);
      worst = std::max(worst, correlation(d.row(static_cast<Eigen::Index>(a)), d.row(static_cast<Eigen::Index>(b))));
    }
  }
  return worst;
}

TEST(Excitation, SixTwoHourBlocksFromEight) {
  const auto s = one_day(3);
  ASSERT_EQ(s.blocks.size(), 6u);
  for (std::size_t i = 0; i < s.blocks.size(); ++i) {
    EXPECT_EQ(s.blocks[i].begin, kSaturday + 8 * 3600 + static_cast<Timestamp>(i) * 7200);
    EXPECT_EQ(s.blocks[i].end - s.blocks[i].begin, 7200);
  }
  EXPECT_EQ(s.u.cols(), kStepsPerDay);
  EXPECT_EQ(block_at(s, kSaturday + 7 * 3600 + 2700), nullptr);
  EXPECT_EQ(block_at(s, kSaturday + 20 * 3600), nullptr);
  ASSERT_NE(block_at(s, kSaturday + 9 * 3600), nullptr);
  EXPECT_EQ(block_at(s, kSaturday + 9 * 3600)->zone, s.blocks[0].zone);
}

TEST(Excitation, EveryZoneOncePerDay) {
  ExcitationOptions o;
  o.start = kSaturday;
  const auto s = generate_excitation(testing::twin_building(), 8, 2, o);
  ASSERT_EQ(s.blocks.size(), 12u);
  for (int day = 0; day < 2; ++day) {
    std::set<std::string> zones;
    for (const auto& b : s.blocks) {
      if (b.day == day) zones.insert(b.zone);
    }
    EXPECT_EQ(zones.size(), 6u);
  }
}

TEST(Excitation, SameSeedSameSchedule) {
  const auto a = one_day(42);
  const auto b = one_day(42);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.zone_order, b.zone_order);
  const auto c = one_day(43);
  EXPECT_NE(a.u, c.u);
}

TEST(Excitation, BlockInvariants) {
  const auto& desc = testing::twin_building();
  const auto m = build_rc_network(desc, testing::twin_params());
  const auto& lay = m.layout;
  ExcitationOptions o;
  o.start = kSaturday;
  const auto s = generate_excitation(desc, 17, 2, o);
  for (Eigen::Index k = 0; k < s.u.cols(); ++k) {
    const auto* block = block_at(s, s.timestamps[static_cast<std::size_t>(k)]);
    for (Eigen::Index j = 0; j < s.u.rows(); ++j) {
      const std::string zone = desc.box_zone(desc.vav_boxes[static_cast<std::size_t>(j)]);
      const double u = s.u(j, k);
      if (!block) {
        EXPECT_EQ(u, lay.box_min_flow[j]);
        continue;
      }
      const auto& excited = *desc.find_zone(block->zone);
      if (zone == block->zone) {
        EXPECT_EQ(u, lay.box_max_flow[j]);
      } else if (std::find(excited.adjacent.begin(), excited.adjacent.end(), zone) != excited.adjacent.end()) {
        EXPECT_EQ(u, lay.box_min_flow[j]) << "neighbor " << zone << " of " << block->zone;
      } else {
        EXPECT_GE(u, lay.box_min_flow[j]);
        EXPECT_LE(u, lay.box_max_flow[j]);
        // held for the whole block
        if (k > 0 && block_at(s, s.timestamps[static_cast<std::size_t>(k - 1)]) == block) {
          EXPECT_EQ(u, s.u(j, k - 1));
        }
      }
    }
  }
}

TEST(Excitation, DecorrelatesNeighboringZones) {
  const auto excited = testing::twin_weekend(0);
  const Eigen::Index day = kStepsPerDay;  // first excited day
  const double c_excited = max_neighbor_correlation(excited, day, 2 * day);

  SynthesisOptions o = testing::twin_config().operation_synthesis(testing::twin_building());
  o.days = 2;
  o.measurement_noise_sd = 0.0;
  const auto regular = synthesize_dataset(testing::twin_building(), testing::twin_params(), o);
  const double c_regular = max_neighbor_correlation(regular, day, 2 * day);
  EXPECT_LT(c_excited, c_regular);
}

TEST(Synthesis, NoiselessWeekendIsBitExact) {
  const auto a = testing::twin_weekend(0);
  const auto b = testing::twin_weekend(0);
  EXPECT_EQ(a.timestamps, b.timestamps);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.v, b.v);
  EXPECT_EQ(*a.true_x, *b.true_x);
  EXPECT_EQ(a.true_f_ig->cwiseAbs().maxCoeff(), 0.0);
}

TEST(Synthesis, SeedsChangeTheData) {
  SynthesisOptions o = testing::twin_config().operation_synthesis(testing::twin_building());
  o.days = 1;
  const auto a = synthesize_dataset(testing::twin_building(), testing::twin_params(), o);
  o.seed += 1;
  const auto b = synthesize_dataset(testing::twin_building(), testing::twin_params(), o);
  EXPECT_NE(a.v, b.v);
  a.validate();
}

TEST(Synthesis, RegularOperationRespectsBoxLimits) {
  SynthesisOptions o = testing::twin_config().operation_synthesis(testing::twin_building());
  o.days = 7;
  const auto ds = synthesize_dataset(testing::twin_building(), testing::twin_params(), o);
  const auto m = build_rc_network(testing::twin_building(), testing::twin_params());
  ds.validate(&m.layout);
  EXPECT_EQ(ds.size(), kStepsPerWeek);
  EXPECT_EQ(weekday(ds.timestamps.front()), 0);
  EXPECT_EQ(hour_of_day(ds.timestamps.front()), 0.0);
}

TEST(Synthesis, WeekdayGainsPeakEarlyAfternoon) {
  SynthesisOptions o = testing::twin_config().operation_synthesis(testing::twin_building());
  o.days = 28;
  const auto ds = synthesize_dataset(testing::twin_building(), testing::twin_params(), o);
  const Eigen::Index nz = ds.true_f_ig->rows();
  Eigen::MatrixXd daily = Eigen::MatrixXd::Zero(nz, kStepsPerDay);
  for (Eigen::Index k = 0; k < ds.size(); ++k) {
    if (weekday(ds.timestamps[static_cast<std::size_t>(k)]) < 5) daily.col(k % kStepsPerDay) += ds.true_f_ig->col(k);
  }
  for (Eigen::Index z = 0; z < nz; ++z) {
    Eigen::Index slot = 0;
    daily.row(z).maxCoeff(&slot);
    const double hour = static_cast<double>(slot) * 0.25;
    EXPECT_GE(hour, 12.0) << ds.zone_ids[static_cast<std::size_t>(z)];
    EXPECT_LE(hour, 15.0) << ds.zone_ids[static_cast<std::size_t>(z)];
  }
  // Nights are free of gains.
  for (Eigen::Index k = 0; k < ds.size(); ++k) {
    const Timestamp t = ds.timestamps[static_cast<std::size_t>(k)];
    if (hour_of_day(t) < 6.0) {
      EXPECT_EQ(ds.true_f_ig->col(k).maxCoeff(), 0.0);
    }
  }
}

TEST(Synthesis, GainsTemperatureEquivalentWithinOneDegree) {
  const auto& cfg = testing::twin_config();
  const auto dm = discretize(build_model(testing::twin_building(), testing::twin_params()));
  const GainsModel gains = cfg.operation_synthesis(testing::twin_building()).gains;
  Eigen::VectorXd peak = Eigen::VectorXd::Zero(dm.zone_count());
  for (int k = 0; k < kStepsPerWeek; ++k) {
    const Timestamp t = cfg.operation.start + static_cast<Timestamp>(k) * 900;
    peak = peak.cwiseMax(dm.C * dm.B_ig * (dm.c_ig + gains.mean(t)));
  }
  EXPECT_GT(peak.minCoeff(), 0.3);
  EXPECT_LE(peak.maxCoeff(), 1.0);
}

}  // namespace
}  // namespace thermident
