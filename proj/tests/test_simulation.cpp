#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "support.hpp"
#include "thermident/error.hpp"
#include "thermident/simulation.hpp"

namespace thermident {
namespace {

const DiscreteModel& twin_dm() {
  static const DiscreteModel dm = discretize(build_model(testing::twin_building(), testing::twin_params()));
  return dm;
}

Eigen::VectorXd random_airflow(std::mt19937_64& rng, const ModelLayout& lay) {
  Eigen::VectorXd u(lay.box_count());
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    u[j] = std::uniform_real_distribution<double>(lay.box_min_flow[j], lay.box_max_flow[j])(rng);
  }
  return u;
}

// A week of regular operation with the twin's gains.
TimeSeriesDataset operation_week(double measurement_sd, double process_sd, std::uint64_t seed) {
  SynthesisOptions o = testing::twin_config().operation_synthesis(testing::twin_building());
  o.days = 7;
  o.seed = seed;
  o.measurement_noise_sd = measurement_sd;
  o.process_noise_sd = process_sd;
  return synthesize_dataset(testing::twin_building(), testing::twin_params(), o);
}

TEST(Step, MatchesDenseEvaluation) {
  const auto& dm = twin_dm();
  std::mt19937_64 rng(1);
  for (int probe = 0; probe < 50; ++probe) {
    const Eigen::VectorXd x = testing::uniform_vector(rng, dm.state_count(), 10.0, 30.0);
    const Eigen::VectorXd u = random_airflow(rng, dm.layout);
    const Disturbance v = testing::random_disturbance(rng);
    const Eigen::VectorXd f = testing::uniform_vector(rng, dm.zone_count(), 0.0, 20.0);
    Eigen::VectorXd ref = dm.A * x + dm.B_v * v + dm.B_ig * (dm.c_ig + f);
    for (Eigen::Index j = 0; j < dm.box_count(); ++j) {
      ref += (dm.B_xu[static_cast<std::size_t>(j)] * x + dm.B_vu[static_cast<std::size_t>(j)] * v) * u[j];
    }
    EXPECT_LT((step(dm, x, u, v, f) - ref).cwiseAbs().maxCoeff(), 1e-12 * ref.cwiseAbs().maxCoeff());
  }
}

TEST(Step, BilinearPartIsLinearInAirflow) {
  const auto& dm = twin_dm();
  std::mt19937_64 rng(2);
  const Eigen::VectorXd x = testing::uniform_vector(rng, dm.state_count(), 10.0, 30.0);
  const Disturbance v = testing::random_disturbance(rng);
  const Eigen::VectorXd f = testing::uniform_vector(rng, dm.zone_count(), 0.0, 20.0);
  const Eigen::VectorXd u1 = 0.5 * random_airflow(rng, dm.layout);
  const Eigen::VectorXd u2 = 0.5 * random_airflow(rng, dm.layout);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dm.box_count());
  const Eigen::VectorXd base = step(dm, x, zero, v, f);
  const Eigen::VectorXd lhs = step(dm, x, u1 + u2, v, f) - base;
  const Eigen::VectorXd rhs = (step(dm, x, u1, v, f) - base) + (step(dm, x, u2, v, f) - base);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Step, EquilibriumInputsLeaveStateUnchanged) {
  const auto& dm = twin_dm();
  Disturbance v = Disturbance::Zero();
  v[kTa] = 21.0;
  v[kTs] = 21.0;
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(dm.state_count(), 21.0);
  EXPECT_LT((step(dm, x, dm.layout.box_min_flow, v, -dm.c_ig) - x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Step, RejectsBadInputs) {
  const auto& dm = twin_dm();
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(dm.state_count(), 20.0);
  const Eigen::VectorXd u = dm.layout.box_min_flow;
  const Eigen::VectorXd f = Eigen::VectorXd::Zero(dm.zone_count());
  const Disturbance v = Disturbance::Zero();
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kConfig;
  };
  EXPECT_EQ(code([&] { step(dm, Eigen::VectorXd::Zero(3), u, v, f); }), ErrorCode::kDimension);
  EXPECT_EQ(code([&] { step(dm, x, Eigen::VectorXd::Zero(2), v, f); }), ErrorCode::kDimension);
  EXPECT_EQ(code([&] { step(dm, x, u, v, Eigen::VectorXd::Zero(5)); }), ErrorCode::kDimension);
  Eigen::VectorXd neg = u;
  neg[3] = -0.01;
  EXPECT_EQ(code([&] { step(dm, x, neg, v, f); }), ErrorCode::kInvalid);
}

TEST(Simulate, ZeroStepsReturnsInitialState) {
  const auto ds = testing::twin_weekend(0);
  const Eigen::VectorXd x0 = ds.true_x->col(0);
  const Trajectory t = simulate(twin_dm(), x0, ds, {}, 0, 0);
  ASSERT_EQ(t.x.cols(), 1);
  EXPECT_EQ(t.x.col(0), x0);
  EXPECT_EQ(t.y.col(0), twin_dm().C * x0);
}

TEST(Simulate, ReproducesTheGeneratorTrajectory) {
  const auto ds = operation_week(0.0, 0.0, 3);
  const Trajectory t = simulate(twin_dm(), ds.true_x->col(0), ds, *ds.true_f_ig);
  ASSERT_EQ(t.x.cols(), ds.size());
  EXPECT_EQ(t.x, *ds.true_x);
  EXPECT_EQ(t.y, ds.y);
}

TEST(Simulate, IsDeterministic) {
  const auto ds = testing::twin_weekend(1);
  const Trajectory a = simulate(twin_dm(), ds.true_x->col(0), ds);
  const Trajectory b = simulate(twin_dm(), ds.true_x->col(0), ds);
  EXPECT_EQ(a.x, b.x);
}

TEST(Simulate, PerturbedExteriorConvectionChangesOutputs) {
  const auto ds = testing::twin_weekend(0);
  ParameterVector p = testing::twin_params();
  p.gamma_EW *= 1.1;
  const auto dm = discretize(build_model(testing::twin_building(), p));
  const Trajectory t = simulate(dm, ds.true_x->col(0), ds);
  const double rms = std::sqrt((t.y - ds.y).squaredNorm() / static_cast<double>(ds.y.size()));
  EXPECT_GT(rms, 1e-3);
}

TEST(Simulate, DivergenceIsReported) {
  DiscreteModel dm = twin_dm();
  dm.A *= 1e6;
  const auto ds = testing::twin_weekend(0);
  try {
    simulate(dm, ds.true_x->col(0), ds);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnstable);
    EXPECT_NE(std::string(e.what()).find("20"), std::string::npos) << e.what();
  }
}

TEST(Kalman, NoiselessTwinConverges) {
  const auto ds = operation_week(0.0, 0.0, 4);
  KalmanOptions o;
  o.noise.r = 1e-4;
  const KalmanEstimate est = kalman_filter(twin_dm(), ds, o, *ds.true_f_ig);
  const auto& lay = twin_dm().layout;
  // The two NW rooms are only seen through their average; how heat splits
  // between them shows up slowly through the walls.
  std::vector<Eigen::Index> alone;
  for (Eigen::Index r = 0; r < lay.room_count(); ++r) {
    const auto z = lay.room_zone[static_cast<std::size_t>(r)];
    if (std::count(lay.room_zone.begin(), lay.room_zone.end(), z) == 1) {
      alone.push_back(lay.room_state[static_cast<std::size_t>(r)]);
    }
  }
  ASSERT_EQ(alone.size(), 5u);
  double room_err = 0.0, zone_err = 0.0, state_err = 0.0, innovation = 0.0;
  for (Eigen::Index k = kStepsPerDay; k < ds.size(); ++k) {
    const Eigen::VectorXd e = (est.mean.col(k) - ds.true_x->col(k)).cwiseAbs();
    for (auto s : alone) room_err = std::max(room_err, e[s]);
    zone_err = std::max(zone_err, (twin_dm().C * (est.mean.col(k) - ds.true_x->col(k))).cwiseAbs().maxCoeff());
    if (k >= 2 * kStepsPerDay) {
      state_err = std::max(state_err, e.maxCoeff());
      innovation = std::max(innovation, est.innovations.col(k).cwiseAbs().maxCoeff());
    }
  }
  EXPECT_LT(room_err, 0.1);
  EXPECT_LT(zone_err, 0.1);
  EXPECT_LT(state_err, 0.1);  // walls included
  EXPECT_LT(innovation, 1e-2);
  EXPECT_EQ(est.updates, ds.size());
}

TEST(Kalman, FullObservationTracksMeasurements) {
  // Every state measured directly, no gains.
  DiscreteModel dm = twin_dm();
  const Eigen::Index n = dm.state_count();
  dm.C = Eigen::MatrixXd::Identity(n, n);
  dm.B_ig = Eigen::MatrixXd::Zero(n, n);
  dm.c_ig = Eigen::VectorXd::Zero(n);
  dm.layout.zone_ids = dm.layout.state_labels;

  auto ds = testing::twin_weekend(0);
  ds.y = Eigen::MatrixXd::Zero(n, ds.size());
  const Trajectory truth = simulate(dm, ds.true_x->col(0), ds);
  ds.y = truth.x;
  ds.zone_ids = dm.layout.zone_ids;

  KalmanOptions o;
  o.noise.r = 1e-10;
  o.x0 = Eigen::VectorXd(truth.x.col(0).array() + 2.0);
  const KalmanEstimate est = kalman_filter(dm, ds, o);
  EXPECT_LT((est.mean - truth.x).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Kalman, CovarianceStaysSymmetricPositiveDefinite) {
  const auto ds = operation_week(0.02, 0.0, 5);
  KalmanOptions o = {testing::twin_config().noise, std::nullopt, std::nullopt, true};
  const KalmanEstimate est = kalman_filter(twin_dm(), ds, o, *ds.true_f_ig);
  ASSERT_EQ(static_cast<Eigen::Index>(est.covariance.size()), ds.size());
  double worst_asym = 0.0, smallest = 1e300;
  for (const auto& P : est.covariance) {
    worst_asym = std::max(worst_asym, (P - P.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P, Eigen::EigenvaluesOnly);
    smallest = std::min(smallest, eig.eigenvalues().minCoeff());
  }
  EXPECT_LT(worst_asym, 1e-12);
  EXPECT_GT(smallest, 0.0);
}

TEST(Kalman, NormalizedInnovationsMatchChiSquare) {
  const double meas_sd = 0.05, proc_sd = 0.01;
  const auto ds = operation_week(meas_sd, proc_sd, 6);
  KalmanOptions o;
  o.noise.q_air = o.noise.q_wall = proc_sd * proc_sd;
  o.noise.r = meas_sd * meas_sd;
  o.x0 = ds.true_x->col(0);
  const KalmanEstimate est = kalman_filter(twin_dm(), ds, o, *ds.true_f_ig);

  double sum = 0.0;
  int count = 0;
  for (Eigen::Index k = kStepsPerDay; k < ds.size(); ++k) {
    sum += est.nis[k];
    ++count;
  }
  const double dof = static_cast<double>(count) * static_cast<double>(twin_dm().zone_count());
  const boost::math::chi_squared chi2(dof);
  EXPECT_GT(sum, boost::math::quantile(chi2, 0.025));
  EXPECT_LT(sum, boost::math::quantile(chi2, 0.975));
}

TEST(Kalman, MissingOutputsSkipTheUpdate) {
  auto ds = operation_week(0.02, 0.0, 7);
  ds.y(2, 200) = std::numeric_limits<double>::quiet_NaN();
  ds.y.col(300).setConstant(std::numeric_limits<double>::quiet_NaN());
  const KalmanEstimate est = kalman_filter(twin_dm(), ds, {}, *ds.true_f_ig);
  EXPECT_EQ(est.updates, ds.size() - 2);
  EXPECT_TRUE(std::isnan(est.nis[300]));
  EXPECT_TRUE(est.mean.allFinite());
}

}  // namespace
}  // namespace thermident
