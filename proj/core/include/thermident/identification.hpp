#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "thermident/building.hpp"
#include "thermident/dataset.hpp"
#include "thermident/parameters.hpp"
#include "thermident/rc_model.hpp"
#include "thermident/simulation.hpp"

namespace thermident {

enum class OptimizerMethod { kLevenbergMarquardt, kNelderMead };

struct IdentificationOptions {
  OptimizerMethod method = OptimizerMethod::kLevenbergMarquardt;
  KalmanNoise noise;
  Eigen::Index warmup_steps = kStepsPerDay;  // KF window before each rollout
  double dt = 900.0;
  NetworkOptions network;
  int max_iterations = 100;
  int starts = 1;                 // starts beyond the first are random perturbations of gamma0
  double start_spread = 0.5;      // log-uniform perturbation half-width (natural log units)
  std::uint64_t seed = 0;
  double objective_tolerance = 1e-12;  // relative decrease below which a step counts as stalled
  double step_tolerance = 1e-9;        // in log-parameter space
  double finite_difference_step = 1e-6;
};

/// Residuals y(k, gamma) - y_meas(k) of one dataset: zones x N, NaN
/// outside the scored window and where the measurement is missing.
struct RolloutResiduals {
  Eigen::MatrixXd residual;
  Eigen::Index scored = 0;   // finite entries
  Eigen::Index dropped = 0;  // scored-window samples skipped for missing data
};

/// Filters the first warmup_steps + 1 samples with f_IG = 0, rolls the
/// model out open loop from the last filtered state and scores every later
/// sample. Throws Error(kUnstable) if the rollout diverges.
RolloutResiduals rollout_residuals(const DiscreteModel& dm, const TimeSeriesDataset& ds,
                                   const IdentificationOptions& options);

/// Sum of squared residuals over all datasets for the parameters in flat
/// layout; +inf when the model cannot be built or the rollout diverges.
double identification_objective(const BuildingDescription& desc, const Eigen::VectorXd& flat,
                                const std::vector<TimeSeriesDataset>& datasets,
                                const IdentificationOptions& options,
                                std::vector<RolloutResiduals>* residuals = nullptr);

struct IterationRecord {
  int iteration = 0;
  int start = 0;
  double objective = 0.0;
  int evaluations = 0;
  Eigen::VectorXd parameters;
};

struct IdentificationResult {
  ParameterVector params;
  Eigen::VectorXd flat;
  double objective = 0.0;  // SSE over training data, degC^2
  std::vector<RolloutResiduals> training;
  std::vector<RolloutResiduals> validation;
  Eigen::VectorXd training_rms;    // per zone
  Eigen::VectorXd validation_rms;  // per zone, empty without validation data
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
  int best_start = 0;
  std::vector<IterationRecord> trace;
};

/// Fits the parameters to weekend data (f_IG = 0) by minimizing the
/// rollout SSE within `bounds`. The search runs in log-parameter space;
/// every returned parameter lies inside the bounds.
IdentificationResult identify_parameters(const BuildingDescription& desc,
                                         const std::vector<TimeSeriesDataset>& training,
                                         const std::vector<TimeSeriesDataset>& validation,
                                         const ParameterVector& gamma0, const ParameterBounds& bounds,
                                         const IdentificationOptions& options = {});

/// Per-zone RMS over the finite residual entries of several datasets.
Eigen::VectorXd residual_rms(const std::vector<RolloutResiduals>& residuals);

// Bound-constrained minimizers used by identify_parameters, exposed for
// testing. Both work on a box [lower, upper] and never evaluate outside it.

struct MinimizerOptions {
  int max_iterations = 100;
  double objective_tolerance = 1e-12;
  double step_tolerance = 1e-9;
  double finite_difference_step = 1e-6;
  std::function<void(int iteration, double value, const Eigen::VectorXd& x)> on_iteration;
};

struct MinimizerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
  std::vector<double> history;  // best value after each iteration
};

using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using ScalarFunction = std::function<double(const Eigen::VectorXd&)>;

/// Projected Levenberg-Marquardt with a forward-difference Jacobian. A
/// residual vector with non-finite entries rejects the point.
MinimizerResult minimize_levenberg_marquardt(const ResidualFunction& residual, Eigen::VectorXd x0,
                                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                             const MinimizerOptions& options = {});

/// Nelder-Mead with vertices projected onto the box.
MinimizerResult minimize_nelder_mead(const ScalarFunction& f, Eigen::VectorXd x0,
                                     const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                     const MinimizerOptions& options = {});

}  // namespace thermident
