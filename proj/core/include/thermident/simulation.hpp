#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "thermident/dataset.hpp"
#include "thermident/discretization.hpp"

namespace thermident {

/// One application of the discrete bilinear model.
/// Throws Error(kDimension) on size mismatch and Error(kInvalid) on
/// negative airflow.
Eigen::VectorXd step(const DiscreteModel& dm, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                     const Disturbance& v, const Eigen::VectorXd& f_ig);

/// States and outputs of an open-loop rollout; column 0 is the initial
/// state.
struct Trajectory {
  Eigen::MatrixXd x;  // states x (steps + 1)
  Eigen::MatrixXd y;  // zones x (steps + 1)
};

/// Rolls the model from x0 at sample `start` for `steps` steps using the
/// dataset's u and v at samples start .. start + steps - 1. `f_ig` is
/// zones x dataset length (empty means zero). steps < 0 runs to the last
/// sample. Missing inputs must be filled beforehand (hold_missing_inputs).
/// Throws Error(kUnstable) when a state turns non-finite.
Trajectory simulate(const DiscreteModel& dm, const Eigen::VectorXd& x0, const TimeSeriesDataset& ds,
                    const Eigen::MatrixXd& f_ig = {}, Eigen::Index start = 0, Eigen::Index steps = -1);

/// Diagonal noise covariances and the initial uncertainty of the filter.
struct KalmanNoise {
  double q_air = 1e-4;     // process noise on room-air states, degC^2
  double q_wall = 1e-5;    // process noise on construction states, degC^2
  double r = 0.05 * 0.05;  // measurement noise per zone, degC^2
  double p0_air = 1.0;
  double p0_wall = 4.0;

  Eigen::MatrixXd process(const ModelLayout& layout) const;
  Eigen::MatrixXd measurement(const ModelLayout& layout) const;
  Eigen::MatrixXd initial(const ModelLayout& layout) const;
};

struct KalmanOptions {
  KalmanNoise noise;
  std::optional<Eigen::VectorXd> x0;  // prior mean; default from the first measurement
  std::optional<Eigen::MatrixXd> P0;
  bool store_covariances = false;
};

/// Filtered estimates x(k|k) for every sample of the run.
struct KalmanEstimate {
  Eigen::MatrixXd mean;                     // states x N
  std::vector<Eigen::MatrixXd> covariance;  // per sample when requested
  Eigen::MatrixXd last_covariance;          // P(N-1|N-1)
  Eigen::MatrixXd innovations;              // zones x N, NaN where no update
  Eigen::VectorXd nis;                      // normalized innovation squared, NaN where no update
  Eigen::Index updates = 0;
};

/// Prior mean used when no x0 is given: room air at its zone's reading,
/// everything else at the mean reading.
Eigen::VectorXd measurement_prior(const ModelLayout& layout, const Eigen::VectorXd& y);

/// Time-varying Kalman filter over samples [start, start + count) of the
/// dataset (count < 0: to the end). The known airflows make the model
/// linear time-varying with F_k = A + sum_j u_j(k) B_xu[j]. Samples with a
/// missing output skip the update. Covariances use the Joseph form and are
/// checked for positive definiteness (Error(kNumeric) on loss).
KalmanEstimate kalman_filter(const DiscreteModel& dm, const TimeSeriesDataset& ds,
                             const KalmanOptions& options = {}, const Eigen::MatrixXd& f_ig = {},
                             Eigen::Index start = 0, Eigen::Index count = -1);

}  // namespace thermident
