#include "thermident/identification.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "thermident/discretization.hpp"
#include "thermident/error.hpp"

namespace thermident {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Model for a candidate; nullopt when the parameters do not give a valid
// stable model.
std::optional<DiscreteModel> candidate_model(const BuildingDescription& desc, const Eigen::VectorXd& flat,
                                             const IdentificationOptions& options) {
  if (!flat.allFinite()) return std::nullopt;
  try {
    const ParameterVector p = ParameterVector::from_vector(flat);
    return discretize(build_model(desc, p, options.network), options.dt);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUnstable || e.code() == ErrorCode::kNumeric || e.code() == ErrorCode::kInvalid) {
      return std::nullopt;
    }
    throw;
  }
}

std::vector<RolloutResiduals> all_residuals(const DiscreteModel& dm, const std::vector<TimeSeriesDataset>& data,
                                            const IdentificationOptions& options) {
  std::vector<RolloutResiduals> out;
  out.reserve(data.size());
  for (const auto& ds : data) out.push_back(rollout_residuals(dm, ds, options));
  return out;
}

}  // namespace

RolloutResiduals rollout_residuals(const DiscreteModel& dm, const TimeSeriesDataset& raw,
                                   const IdentificationOptions& options) {
  const Eigen::Index n = raw.size();
  const Eigen::Index w = options.warmup_steps;
  if (w < 0 || w >= n) {
    throw Error(ErrorCode::kDimension, "warm-up of " + std::to_string(w) + " steps leaves nothing to score in " +
                                           std::to_string(n) + " samples");
  }
  const TimeSeriesDataset ds = hold_missing_inputs(raw);
  KalmanOptions kf;
  kf.noise = options.noise;
  const KalmanEstimate est = kalman_filter(dm, ds, kf, {}, 0, w + 1);
  const Trajectory traj = simulate(dm, est.mean.col(w), ds, {}, w, n - 1 - w);

  RolloutResiduals out;
  out.residual = Eigen::MatrixXd::Constant(dm.zone_count(), n, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index k = w + 1; k < n; ++k) {
    const Eigen::VectorXd meas = ds.y.col(k);
    if (!meas.allFinite()) {
      ++out.dropped;
      continue;
    }
    out.residual.col(k) = traj.y.col(k - w) - meas;
    out.scored += meas.size();
  }
  return out;
}

double identification_objective(const BuildingDescription& desc, const Eigen::VectorXd& flat,
                                const std::vector<TimeSeriesDataset>& datasets,
                                const IdentificationOptions& options, std::vector<RolloutResiduals>* residuals) {
  const auto dm = candidate_model(desc, flat, options);
  if (!dm) return kInf;
  std::vector<RolloutResiduals> res;
  try {
    res = all_residuals(*dm, datasets, options);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUnstable || e.code() == ErrorCode::kNumeric) return kInf;
    throw;
  }
  double sse = 0.0;
  for (const auto& r : res) {
    for (Eigen::Index k = 0; k < r.residual.cols(); ++k) {
      if (r.residual.col(k).allFinite()) sse += r.residual.col(k).squaredNorm();
    }
  }
  if (residuals) *residuals = std::move(res);
  return std::isfinite(sse) ? sse : kInf;
}

Eigen::VectorXd residual_rms(const std::vector<RolloutResiduals>& residuals) {
  if (residuals.empty()) return {};
  const Eigen::Index nz = residuals.front().residual.rows();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(nz);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(nz);
  for (const auto& r : residuals) {
    for (Eigen::Index k = 0; k < r.residual.cols(); ++k) {
      for (Eigen::Index z = 0; z < nz; ++z) {
        const double e = r.residual(z, k);
        if (std::isfinite(e)) {
          sum[z] += e * e;
          count[z] += 1.0;
        }
      }
    }
  }
  if ((count.array() == 0.0).any()) throw Error(ErrorCode::kInvalid, "no scored samples for RMS");
  return (sum.array() / count.array()).sqrt();
}

IdentificationResult identify_parameters(const BuildingDescription& desc,
                                         const std::vector<TimeSeriesDataset>& training,
                                         const std::vector<TimeSeriesDataset>& validation,
                                         const ParameterVector& gamma0, const ParameterBounds& bounds,
                                         const IdentificationOptions& options) {
  if (training.empty()) throw Error(ErrorCode::kInvalid, "identification needs at least one dataset");
  const Eigen::VectorXd x0 = gamma0.to_vector();
  if (bounds.lower.size() != x0.size() || bounds.upper.size() != x0.size()) {
    throw Error(ErrorCode::kDimension, "bounds do not match the parameter count");
  }
  if ((bounds.lower.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalid, "lower bounds must be positive");
  }
  if (!bounds.contains(x0)) throw Error(ErrorCode::kInvalid, "initial guess violates the bounds");
  if (options.starts < 1) throw Error(ErrorCode::kInvalid, "at least one start is required");

  const Eigen::VectorXd log_lo = bounds.lower.array().log();
  const Eigen::VectorXd log_hi = bounds.upper.array().log();
  auto to_flat = [&](const Eigen::VectorXd& theta) {
    return bounds.clamp(theta.array().exp().matrix());
  };

  // The missing-data pattern does not depend on the parameters, so the
  // residual vector has a fixed length.
  Eigen::Index residual_size = 0;
  {
    const auto dm0 = candidate_model(desc, x0, options);
    if (!dm0) throw Error(ErrorCode::kUnstable, "initial guess gives an unstable model");
    for (const auto& r : all_residuals(*dm0, training, options)) residual_size += r.scored;
  }
  if (residual_size == 0) throw Error(ErrorCode::kInvalid, "training data contain no scored samples");

  int evaluations = 0;
  const ResidualFunction residual = [&](const Eigen::VectorXd& theta) {
    ++evaluations;
    Eigen::VectorXd out = Eigen::VectorXd::Constant(residual_size, kInf);
    std::vector<RolloutResiduals> res;
    if (!std::isfinite(identification_objective(desc, to_flat(theta), training, options, &res))) return out;
    Eigen::Index at = 0;
    for (const auto& r : res) {
      for (Eigen::Index k = 0; k < r.residual.cols(); ++k) {
        if (!r.residual.col(k).allFinite()) continue;
        out.segment(at, r.residual.rows()) = r.residual.col(k);
        at += r.residual.rows();
      }
    }
    return out;
  };

  IdentificationResult result;
  MinimizerOptions mopt;
  mopt.max_iterations = options.max_iterations;
  mopt.objective_tolerance = options.objective_tolerance;
  mopt.step_tolerance = options.step_tolerance;
  mopt.finite_difference_step = options.finite_difference_step;

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Eigen::VectorXd theta0 = x0.array().log();
  MinimizerResult best;
  best.value = kInf;
  for (int s = 0; s < options.starts; ++s) {
    Eigen::VectorXd start = theta0;
    if (s > 0) {
      for (Eigen::Index i = 0; i < start.size(); ++i) start[i] += options.start_spread * unit(rng);
      start = start.cwiseMax(log_lo).cwiseMin(log_hi);
    }
    const int evals_before = evaluations;
    mopt.on_iteration = [&](int it, double value, const Eigen::VectorXd& theta) {
      result.trace.push_back({it, s, value, evaluations - evals_before, to_flat(theta)});
    };
    MinimizerResult run;
    if (options.method == OptimizerMethod::kLevenbergMarquardt) {
      run = minimize_levenberg_marquardt(residual, start, log_lo, log_hi, mopt);
    } else {
      const ScalarFunction objective = [&](const Eigen::VectorXd& theta) {
        ++evaluations;
        return identification_objective(desc, to_flat(theta), training, options);
      };
      run = minimize_nelder_mead(objective, start, log_lo, log_hi, mopt);
    }
    result.iterations += run.iterations;
    if (run.value < best.value) {
      best = run;
      result.best_start = s;
    }
  }

  result.evaluations = evaluations;
  result.converged = best.converged;
  result.message = best.message;
  if (!std::isfinite(best.value)) {
    result.flat = x0;
    result.params = gamma0;
    result.objective = kInf;
    result.converged = false;
    result.message = "no start produced a finite objective";
    return result;
  }
  result.flat = to_flat(best.x);
  result.params = ParameterVector::from_vector(result.flat);
  result.objective = identification_objective(desc, result.flat, training, options, &result.training);
  result.training_rms = residual_rms(result.training);
  if (!validation.empty()) {
    const auto dm = candidate_model(desc, result.flat, options);
    if (dm) {
      result.validation = all_residuals(*dm, validation, options);
      result.validation_rms = residual_rms(result.validation);
    }
  }
  return result;
}

}  // namespace thermident
