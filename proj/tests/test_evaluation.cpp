#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <boost/math/distributions/binomial.hpp>
#include <gtest/gtest.h>

#include "support.hpp"
#include "thermident/csv.hpp"
#include "thermident/error.hpp"
#include "thermident/evaluation.hpp"

namespace thermident {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Small dataset with two zones; y(z, k) = k + 10 z.
TimeSeriesDataset ramp(Eigen::Index n) {
  TimeSeriesDataset ds;
  ds.zone_ids = {"A", "B"};
  for (Eigen::Index k = 0; k < n; ++k) ds.timestamps.push_back(testing::utc(2024, 1, 1) + k * 900);
  ds.y.resize(2, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    ds.y(0, k) = static_cast<double>(k);
    ds.y(1, k) = static_cast<double>(k) + 10.0;
  }
  ds.u.resize(0, n);
  ds.v = Eigen::MatrixXd::Zero(6, n);
  return ds;
}

// Predictions with a known error e(z, h) = (z + 1) * h * sign, sign
// alternating between starts.
PredictionSet ramp_predictions(const TimeSeriesDataset& ds, std::vector<Eigen::Index> starts, Eigen::Index horizon) {
  PredictionSet p;
  p.starts = std::move(starts);
  p.horizon = horizon;
  for (std::size_t i = 0; i < p.starts.size(); ++i) {
    const double sign = i % 2 == 0 ? 1.0 : -1.0;
    Eigen::MatrixXd y = ds.y.middleCols(p.starts[i] + 1, horizon);
    for (Eigen::Index z = 0; z < 2; ++z) {
      for (Eigen::Index h = 0; h < horizon; ++h) y(z, h) += sign * static_cast<double>((z + 1) * (h + 1));
    }
    p.y.push_back(y);
  }
  return p;
}

TEST(Rms, WorkedExamples) {
  Eigen::MatrixXd pred(2, 4), meas(2, 4);
  pred << 1, 2, 3, 4, 0, 0, 0, 0;
  meas << 1, 2, 3, 8, 3, -3, 3, -3;
  const Eigen::VectorXd r = rms_by_zone(pred, meas);
  EXPECT_DOUBLE_EQ(r[0], 2.0);  // sqrt(16 / 4)
  EXPECT_DOUBLE_EQ(r[1], 3.0);
}

TEST(Rms, SkipsMissingEntries) {
  Eigen::MatrixXd pred(1, 4), meas(1, 4);
  pred << 1, kNaN, 3, 5;
  meas << 2, 7, kNaN, 1;
  EXPECT_DOUBLE_EQ(rms_by_zone(pred, meas)[0], std::sqrt((1.0 + 16.0) / 2.0));
}

TEST(Rms, EmptyOverlapIsAnError) {
  Eigen::MatrixXd pred(1, 2), meas(1, 2);
  pred << 1, kNaN;
  meas << kNaN, 2;
  try {
    rms_by_zone(pred, meas);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalid);
  }
  EXPECT_THROW(rms_by_zone(Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(2, 2)), Error);
}

TEST(Pooling, MatchesDoubleLoopForBothCadences) {
  const auto ds = ramp(40);
  for (const Eigen::Index stride : {1, 8}) {
    std::vector<Eigen::Index> starts;
    for (Eigen::Index s = 5; s + 6 <= 39; s += stride) starts.push_back(s);
    const auto p = ramp_predictions(ds, starts, 6);
    const auto curve = horizon_curve(p, ds);
    const auto pooled = prediction_rms(p, ds);
    for (Eigen::Index z = 0; z < 2; ++z) {
      double all = 0.0;
      for (Eigen::Index h = 0; h < 6; ++h) {
        double sum = 0.0;
        for (std::size_t i = 0; i < starts.size(); ++i) {
          const double e = p.y[i](z, h) - ds.y(z, starts[i] + h + 1);
          sum += e * e;
        }
        all += sum;
        EXPECT_NEAR(curve.zone_rms(z, h), std::sqrt(sum / static_cast<double>(starts.size())), 1e-12);
        // Errors are exactly (z + 1) (h + 1) in magnitude.
        EXPECT_NEAR(curve.zone_rms(z, h), static_cast<double>((z + 1) * (h + 1)), 1e-12);
      }
      EXPECT_NEAR(pooled[z], std::sqrt(all / static_cast<double>(6 * starts.size())), 1e-12);
    }
    EXPECT_EQ(curve.samples, Eigen::VectorXi::Constant(6, static_cast<int>(starts.size())));
    EXPECT_NEAR(curve.mean_rms[2], (3.0 + 6.0) / 2.0, 1e-12);
  }
}

TEST(Pooling, MissingMeasurementsDropSamples) {
  auto ds = ramp(30);
  const auto p = ramp_predictions(ds, {2, 10}, 4);
  ds.y(0, 3) = kNaN;  // start 2, horizon 1
  const auto curve = horizon_curve(p, ds);
  EXPECT_EQ(curve.samples[0], 2);  // zone B still has both
  EXPECT_NEAR(curve.zone_rms(0, 0), 1.0, 1e-12);
  ds.y.row(0).setConstant(kNaN);
  EXPECT_THROW(horizon_curve(p, ds), Error);
}

TEST(Pooling, PredictionsPastTheDataAreRejected) {
  const auto ds = ramp(20);
  auto p = ramp_predictions(ds, {10}, 5);
  p.starts[0] = 16;
  EXPECT_THROW(prediction_rms(p, ds), Error);
}

TEST(Pooling, InflatedZoneVarianceGrowsFastest) {
  // Random-walk prediction errors; zone A steps three times wider.
  auto ds = ramp(400);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  PredictionSet p;
  p.horizon = 24;
  for (Eigen::Index s = 0; s + 24 < 399; s += 3) {
    p.starts.push_back(s);
    Eigen::MatrixXd y = ds.y.middleCols(s + 1, 24);
    double ea = 0.0, eb = 0.0;
    for (Eigen::Index h = 0; h < 24; ++h) {
      ea += 0.3 * n01(rng);
      eb += 0.1 * n01(rng);
      y(0, h) += ea;
      y(1, h) += eb;
    }
    p.y.push_back(y);
  }
  const auto c = horizon_curve(p, ds);
  const double growth_a = c.zone_rms(0, 23) - c.zone_rms(0, 0);
  const double growth_b = c.zone_rms(1, 23) - c.zone_rms(1, 0);
  EXPECT_GT(growth_a, 2.0 * growth_b);
  Eigen::VectorXd lead(24);
  for (int h = 0; h < 24; ++h) lead[h] = h;
  EXPECT_GT(spearman_rho(lead, c.mean_rms), 0.9);
}

TEST(Compare, TableFixture) {
  const auto r = load_report(testing::data_dir() / "fixtures" / "table3.json");
  const double fixed = (0.84 + 0.42 + 0.48 + 0.43 + 0.36 + 0.38) / 6.0;
  const double online = (0.50 + 0.31 + 0.15 + 0.41 + 0.32 + 0.16) / 6.0;
  EXPECT_NEAR(r.mean_improvement, (fixed - online) / fixed, 1e-12);
  EXPECT_NEAR(100.0 * r.mean_improvement, 36.5, 0.1);
  EXPECT_NEAR(r.zone_improvement[2], (0.48 - 0.15) / 0.48, 1e-12);
  EXPECT_EQ(r.zone_ids.front(), "NW");
}

TEST(Compare, IdenticalPredictorsGiveZero) {
  PredictorSummary s;
  s.name = "x";
  s.cadence = "anchored";
  s.horizon = 96;
  s.zone_rms = Eigen::Vector2d(0.3, 0.5);
  const auto r = compare_predictors(s, s, {"A", "B"});
  EXPECT_EQ(r.mean_improvement, 0.0);
  EXPECT_EQ(r.zone_improvement, Eigen::VectorXd::Zero(2));
}

TEST(Compare, MismatchedSummariesAreRejected) {
  PredictorSummary a;
  a.cadence = "anchored";
  a.horizon = 96;
  a.zone_rms = Eigen::Vector2d(0.3, 0.5);
  for (int variant = 0; variant < 3; ++variant) {
    PredictorSummary b = a;
    if (variant == 0) b.cadence = "sliding";
    if (variant == 1) b.horizon = 4;
    if (variant == 2) b.zone_rms = Eigen::Vector3d(0.1, 0.1, 0.1);
    try {
      compare_predictors(a, b, {"A", "B"});
      FAIL() << variant;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalid);
    }
  }
}

TEST(Report, JsonRoundTripIsByteIdentical) {
  const auto ds = ramp(60);
  const auto pf = ramp_predictions(ds, {3, 20, 37}, 8);
  auto po = pf;
  for (auto& y : po.y) y = (y + ds.y.middleCols(1, 8)) * 0.5;
  const auto fixed = summarize("fixed", pf, ds, Cadence::kAnchored);
  const auto online = summarize("online", po, ds, Cadence::kAnchored);
  auto r = compare_predictors(fixed, online, ds.zone_ids);
  r.metadata["config_hash"] = "0123456789abcdef";
  const std::string text = report_to_json(r);
  EXPECT_EQ(report_to_json(report_from_json(text)), text);

  const auto dir = testing::scratch_dir("report");
  save_report_csvs(dir, r);
  const CsvTable zones = read_csv(dir / "zone_rms.csv");
  ASSERT_EQ(zones.rows.size(), 3u);
  EXPECT_EQ(zones.rows[2][0], "mean");
  EXPECT_EQ(parse_field(zones.rows[0][1]), r.fixed.zone_rms[0]);
  const CsvTable curve = read_csv(dir / "horizon_curve.csv");
  EXPECT_EQ(curve.rows.size(), 8u);
  EXPECT_EQ(curve.header.size(), 1u + 2u * 3u);
}

TEST(Report, SchemaErrorsNameTheField) {
  std::string text = read_file(testing::data_dir() / "fixtures" / "table3.json");
  text.replace(text.find("\"NW\": 0.84"), 10, "\"NW\": -1.0");
  try {
    report_from_json(text, "bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchema);
    EXPECT_NE(std::string(e.what()).find("/predictors/fixed/zone_rms/NW"), std::string::npos) << e.what();
  }
}

TEST(Report, PredictionCsvRoundTrip) {
  const auto ds = ramp(50);
  const auto p = ramp_predictions(ds, {4, 12, 30}, 5);
  const auto path = testing::scratch_dir("predictions") / "p.csv";
  save_predictions_csv(path, p, ds);
  const auto q = load_predictions_csv(path, ds);
  EXPECT_EQ(q.starts, p.starts);
  EXPECT_EQ(q.horizon, 5);
  for (std::size_t i = 0; i < p.y.size(); ++i) EXPECT_EQ(q.y[i], p.y[i]);
}

// Average rank by counting, then Pearson on the ranks.
double naive_spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  auto rank = [](const Eigen::VectorXd& v) {
    Eigen::VectorXd r(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      double less = 0.0, equal = 0.0;
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        less += v[j] < v[i] ? 1.0 : 0.0;
        equal += v[j] == v[i] ? 1.0 : 0.0;
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const Eigen::ArrayXd ra = rank(a).array() - rank(a).mean();
  const Eigen::ArrayXd rb = rank(b).array() - rank(b).mean();
  return (ra * rb).sum() / std::sqrt((ra * ra).sum() * (rb * rb).sum());
}

TEST(Statistics, SpearmanMatchesNaiveRanks) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> small(0, 5);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd a(12), b(12);
    for (Eigen::Index i = 0; i < 12; ++i) {
      a[i] = small(rng);  // plenty of ties
      b[i] = small(rng) + 0.5 * a[i];
    }
    EXPECT_NEAR(spearman_rho(a, b), naive_spearman(a, b), 1e-12);
  }
  Eigen::VectorXd x(5), y(5);
  x << 1, 2, 3, 4, 5;
  y << 2, 4, 9, 16, 100;
  EXPECT_DOUBLE_EQ(spearman_rho(x, y), 1.0);
  EXPECT_DOUBLE_EQ(spearman_rho(x, -y), -1.0);
  EXPECT_THROW(spearman_rho(x, Eigen::VectorXd::Zero(3)), Error);
}

TEST(Statistics, SignTestMatchesBinomialTail) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd d(10 + trial);
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = n01(rng) + 0.3;
    d[0] = 0.0;  // dropped
    const auto n = static_cast<unsigned>(d.size() - 1);
    const auto pos = static_cast<unsigned>((d.array() > 0.0).count());
    const boost::math::binomial bin(n, 0.5);
    const double ref = pos == 0 ? 1.0 : boost::math::cdf(boost::math::complement(bin, pos - 1));
    EXPECT_NEAR(sign_test_p_value(d), ref, 1e-12);
  }
  // Ten of ten positive: 2^-10.
  EXPECT_NEAR(sign_test_p_value(Eigen::VectorXd::Ones(10)), 1.0 / 1024.0, 1e-15);
  EXPECT_EQ(sign_test_p_value(Eigen::VectorXd::Zero(4)), 1.0);
}

}  // namespace
}  // namespace thermident
