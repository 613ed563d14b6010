#include "thermident/simulation.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "thermident/error.hpp"

namespace thermident {
namespace {

void check_sizes(const DiscreteModel& dm, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                 const Eigen::VectorXd& f_ig) {
  if (x.size() != dm.state_count()) {
    throw Error(ErrorCode::kDimension, "state has " + std::to_string(x.size()) + " entries, model " +
                                           std::to_string(dm.state_count()));
  }
  if (u.size() != dm.box_count()) {
    throw Error(ErrorCode::kDimension, "airflow has " + std::to_string(u.size()) + " entries, model " +
                                           std::to_string(dm.box_count()));
  }
  if (f_ig.size() != dm.zone_count()) {
    throw Error(ErrorCode::kDimension, "internal gains have " + std::to_string(f_ig.size()) +
                                           " entries, model " + std::to_string(dm.zone_count()));
  }
}

Eigen::VectorXd gains_at(const DiscreteModel& dm, const Eigen::MatrixXd& f_ig, Eigen::Index k) {
  if (f_ig.size() == 0) return Eigen::VectorXd::Zero(dm.zone_count());
  return f_ig.col(k);
}

void check_gains_matrix(const DiscreteModel& dm, const Eigen::MatrixXd& f_ig, Eigen::Index n) {
  if (f_ig.size() == 0) return;
  if (f_ig.rows() != dm.zone_count() || f_ig.cols() < n) {
    throw Error(ErrorCode::kDimension, "internal-gains sequence does not cover the dataset");
  }
}

// One step without the size checks.
Eigen::VectorXd advance(const DiscreteModel& dm, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                        const Disturbance& v, const Eigen::VectorXd& f_ig) {
  Eigen::VectorXd next = dm.A * x + dm.B_v * v + dm.B_ig * (dm.c_ig + f_ig);
  next += dm.bilinear_term(x, u, v);
  return next;
}

}  // namespace

Eigen::VectorXd step(const DiscreteModel& dm, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                     const Disturbance& v, const Eigen::VectorXd& f_ig) {
  check_sizes(dm, x, u, f_ig);
  if ((u.array() < 0.0).any()) throw Error(ErrorCode::kInvalid, "negative airflow");
  return advance(dm, x, u, v, f_ig);
}

Trajectory simulate(const DiscreteModel& dm, const Eigen::VectorXd& x0, const TimeSeriesDataset& ds,
                    const Eigen::MatrixXd& f_ig, Eigen::Index start, Eigen::Index steps) {
  const Eigen::Index n_samples = ds.size();
  if (steps < 0) steps = std::max<Eigen::Index>(0, n_samples - 1 - start);
  if (start < 0 || (steps > 0 && start + steps > n_samples)) {
    throw Error(ErrorCode::kDimension, "rollout of " + std::to_string(steps) + " steps from sample " +
                                           std::to_string(start) + " exceeds dataset of length " +
                                           std::to_string(n_samples));
  }
  check_gains_matrix(dm, f_ig, start + steps);
  check_sizes(dm, x0, Eigen::VectorXd::Zero(dm.box_count()), Eigen::VectorXd::Zero(dm.zone_count()));
  if (ds.u.rows() != dm.box_count() || ds.y.rows() != dm.zone_count()) {
    throw Error(ErrorCode::kDimension, "dataset channels do not match the model");
  }

  Trajectory traj;
  traj.x.resize(dm.state_count(), steps + 1);
  traj.x.col(0) = x0;
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Eigen::Index k = start + s;
    const Eigen::VectorXd u = ds.u.col(k);
    if ((u.array() < 0.0).any()) {
      throw Error(ErrorCode::kInvalid, "negative airflow at " + format_iso8601(ds.timestamps[static_cast<std::size_t>(k)]));
    }
    traj.x.col(s + 1) = advance(dm, traj.x.col(s), u, ds.disturbance(k), gains_at(dm, f_ig, k));
    if (!traj.x.col(s + 1).allFinite()) {
      Eigen::Index bad = 0;
      for (Eigen::Index i = 0; i < dm.state_count(); ++i) {
        if (!std::isfinite(traj.x(i, s + 1))) {
          bad = i;
          break;
        }
      }
      throw Error(ErrorCode::kUnstable,
                  "state '" + dm.layout.state_labels[static_cast<std::size_t>(bad)] +
                      "' became non-finite at step " + std::to_string(s + 1) + " (" +
                      format_iso8601(ds.timestamps[static_cast<std::size_t>(k)]) + ")");
    }
  }
  traj.y = dm.C * traj.x;
  return traj;
}

Eigen::MatrixXd KalmanNoise::process(const ModelLayout& layout) const {
  Eigen::VectorXd d = Eigen::VectorXd::Constant(layout.state_count(), q_wall);
  d.head(layout.room_count()).setConstant(q_air);
  return d.asDiagonal();
}

Eigen::MatrixXd KalmanNoise::measurement(const ModelLayout& layout) const {
  return Eigen::MatrixXd::Identity(layout.zone_count(), layout.zone_count()) * r;
}

Eigen::MatrixXd KalmanNoise::initial(const ModelLayout& layout) const {
  Eigen::VectorXd d = Eigen::VectorXd::Constant(layout.state_count(), p0_wall);
  d.head(layout.room_count()).setConstant(p0_air);
  return d.asDiagonal();
}

Eigen::VectorXd measurement_prior(const ModelLayout& layout, const Eigen::VectorXd& y) {
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index z = 0; z < y.size(); ++z) {
    if (std::isfinite(y[z])) {
      sum += y[z];
      ++count;
    }
  }
  const double mean = count ? sum / count : 20.0;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(layout.state_count(), mean);
  for (Eigen::Index r = 0; r < layout.room_count(); ++r) {
    const double yz = y[layout.room_zone[static_cast<std::size_t>(r)]];
    x[layout.room_state[static_cast<std::size_t>(r)]] = std::isfinite(yz) ? yz : mean;
  }
  return x;
}

KalmanEstimate kalman_filter(const DiscreteModel& dm, const TimeSeriesDataset& ds,
                             const KalmanOptions& options, const Eigen::MatrixXd& f_ig,
                             Eigen::Index start, Eigen::Index count) {
  const Eigen::Index n = dm.state_count();
  const Eigen::Index nz = dm.zone_count();
  if (count < 0) count = ds.size() - start;
  if (start < 0 || count < 0 || start + count > ds.size()) {
    throw Error(ErrorCode::kDimension, "filter window exceeds the dataset");
  }
  if (ds.y.rows() != nz || ds.u.rows() != dm.box_count()) {
    throw Error(ErrorCode::kDimension, "dataset channels do not match the model");
  }
  check_gains_matrix(dm, f_ig, start + count);

  const Eigen::MatrixXd Q = options.noise.process(dm.layout);
  const Eigen::MatrixXd R = options.noise.measurement(dm.layout);
  if ((Q.diagonal().array() <= 0.0).any() || (R.diagonal().array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalid, "noise covariances must be positive definite");
  }
  const Eigen::MatrixXd& C = dm.C;

  KalmanEstimate est;
  est.mean.resize(n, count);
  est.innovations = Eigen::MatrixXd::Constant(nz, count, std::numeric_limits<double>::quiet_NaN());
  est.nis = Eigen::VectorXd::Constant(count, std::numeric_limits<double>::quiet_NaN());
  if (count == 0) return est;

  Eigen::VectorXd x = options.x0 ? *options.x0 : measurement_prior(dm.layout, ds.y.col(start));
  Eigen::MatrixXd P = options.P0 ? *options.P0 : options.noise.initial(dm.layout);
  if (x.size() != n || P.rows() != n || P.cols() != n) {
    throw Error(ErrorCode::kDimension, "prior does not match the state dimension");
  }

  Eigen::MatrixXd CP(nz, n);
  Eigen::MatrixXd K(n, nz);
  Eigen::MatrixXd M(n, n);
  Eigen::MatrixXd tmp(n, n);
  for (Eigen::Index s = 0; s < count; ++s) {
    const Eigen::Index k = start + s;
    if (s > 0) {
      const Eigen::Index kp = k - 1;
      const Eigen::VectorXd u = ds.u.col(kp);
      const Eigen::MatrixXd F = dm.transition(u);
      x = F * x + dm.affine_input(u, ds.disturbance(kp)) + dm.B_ig * gains_at(dm, f_ig, kp);
      tmp.noalias() = F * P;
      P.noalias() = tmp * F.transpose();
      P += Q;
    }

    const Eigen::VectorXd yk = ds.y.col(k);
    if (yk.allFinite()) {
      CP.noalias() = C * P;
      const Eigen::MatrixXd S = CP * C.transpose() + R;
      Eigen::LLT<Eigen::MatrixXd> llt(S);
      if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::kNumeric, "innovation covariance lost definiteness at step " + std::to_string(s));
      }
      const Eigen::VectorXd nu = yk - C * x;
      K = llt.solve(CP).transpose();  // P C^T S^-1, using symmetry of P and S
      x.noalias() += K * nu;
      // Joseph form: (I - K C) P (I - K C)^T + K R K^T.
      M = -K * C;
      M.diagonal().array() += 1.0;
      tmp.noalias() = M * P;
      P.noalias() = tmp * M.transpose();
      P.noalias() += K * R * K.transpose();
      est.innovations.col(s) = nu;
      est.nis[s] = nu.dot(llt.solve(nu));
      ++est.updates;
    }
    P = 0.5 * (P + P.transpose());
    if (!P.allFinite() || !x.allFinite() || Eigen::LLT<Eigen::MatrixXd>(P).info() != Eigen::Success) {
      throw Error(ErrorCode::kNumeric, "state covariance lost positive definiteness at step " + std::to_string(s));
    }
    est.mean.col(s) = x;
    if (options.store_covariances) est.covariance.push_back(P);
  }
  est.last_covariance = P;
  return est;
}

}  // namespace thermident
