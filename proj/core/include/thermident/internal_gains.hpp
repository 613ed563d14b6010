#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "thermident/dataset.hpp"
#include "thermident/discretization.hpp"
#include "thermident/simulation.hpp"

namespace thermident {

/// x~(k) = A x(k-1) + inputs with f_IG(k-1) = 0 (c_IG kept); y~ = C x~.
struct NoGainsStep {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};
NoGainsStep simulate_no_ig(const DiscreteModel& dm, const Eigen::VectorXd& x_prev, const Eigen::VectorXd& u_prev,
                           const Disturbance& v_prev);

struct SnapshotEstimate {
  Eigen::VectorXd f;  // f_IG(k-1) per zone, W/m^2
  Eigen::Index rank = 0;
  bool rank_deficient = false;
};

/// Least-squares solver for (C B_IG) f = y_meas - y_sim, factorized once
/// per model (column-pivoting QR, minimum-norm solution when rank
/// deficient).
class GainsSolver {
 public:
  explicit GainsSolver(const DiscreteModel& dm, double rank_tolerance = 1e-10);

  SnapshotEstimate solve(const Eigen::VectorXd& output_residual) const;
  double condition_number() const { return condition_; }
  Eigen::Index rank() const { return rank_; }
  const Eigen::MatrixXd& gain() const { return CB_; }

 private:
  Eigen::MatrixXd CB_;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
  double condition_ = 0.0;
  Eigen::Index rank_ = 0;
};

/// One-shot form of GainsSolver::solve. Logs a warning when rank deficient.
SnapshotEstimate estimate_ig_snapshot(const DiscreteModel& dm, const Eigen::VectorXd& y_meas,
                                      const Eigen::VectorXd& y_sim);

struct GainsEstimationOptions {
  KalmanNoise noise;
  Eigen::Index warmup_steps = kStepsPerDay;  // KF window (f_IG = 0) before the recursion starts
};

/// Sequence of snapshot estimates over one dataset. After the warm-up, the
/// state is advanced without gains and corrected with the estimated gains
/// at every step: x_w(k) = x~(k) + B_IG f(k-1).
struct GainsRecursion {
  Eigen::MatrixXd f;    // zones x N; column k holds f(k), NaN where unknown
  Eigen::MatrixXd x;    // states x N; x_w(k), valid from the warm-up end
  Eigen::Index first = 0;  // first sample with a state
  Eigen::Index skipped = 0;
  bool rank_deficient = false;
};
GainsRecursion estimate_ig_sequence(const DiscreteModel& dm, const TimeSeriesDataset& ds,
                                    const GainsEstimationOptions& options = {});

/// Fixed internal-gains model on the weekly grid (Monday 00:00 anchor).
struct InternalGainsProfile {
  std::vector<std::string> zone_ids;
  Eigen::VectorXd c_ig;             // W/m^2
  double dt = 900.0;
  Eigen::MatrixXd f;                // zones x slots, mean estimate
  Eigen::MatrixXi count;            // zones x slots, contributing weeks
  std::vector<Eigen::MatrixXd> weeks;  // per-week estimates, NaN where missing

  Eigen::Index slots() const { return f.cols(); }
  /// Gains at an arbitrary time (slot lookup; NaN slots give zero).
  Eigen::VectorXd at(Timestamp t) const;
  /// zones x N sequence aligned with a dataset.
  Eigen::MatrixXd sequence(const TimeSeriesDataset& ds) const;
};

/// Per-week snapshot estimates averaged per time-of-week slot. Estimates
/// are assigned to calendar weeks starting Monday 00:00.
InternalGainsProfile estimate_fixed_ig(const DiscreteModel& dm, const std::vector<TimeSeriesDataset>& training,
                                       const GainsEstimationOptions& options = {});

/// Mean over the per-week estimates; recomputes f and count.
void average_weeks(InternalGainsProfile& profile);

/// CSV: slot, time_of_week ("D HH:MM", D = 0 for Monday), one column per
/// zone. The per-week file has an extra leading "week" column.
void save_profile_csv(const std::filesystem::path& path, const InternalGainsProfile& profile);
InternalGainsProfile load_profile_csv(const std::filesystem::path& path);
void save_weekly_estimates_csv(const std::filesystem::path& path, const InternalGainsProfile& profile);

enum class Cadence {
  kAnchored,  // starts every 24 h from the end of the warm-up
  kSliding,   // starts at every sample
};

struct PredictionOptions {
  Eigen::Index horizon = kStepsPerDay;
  Cadence cadence = Cadence::kAnchored;
  KalmanNoise noise;
  Eigen::Index warmup_steps = kStepsPerDay;
};

/// Open-loop predictions from a set of start samples; y[i] column h - 1 is
/// the prediction of sample starts[i] + h.
struct PredictionSet {
  std::vector<Eigen::Index> starts;
  Eigen::Index horizon = 0;
  std::vector<Eigen::MatrixXd> y;
};

/// Start samples for a dataset of length n under the cadence.
std::vector<Eigen::Index> prediction_starts(Eigen::Index n, const PredictionOptions& options);

/// State from a Kalman filter that treats the profile gains as a known
/// input, then rollouts with the profile indexed by time of week.
PredictionSet predict_fixed_ig(const DiscreteModel& dm, const InternalGainsProfile& profile,
                               const TimeSeriesDataset& ds, const PredictionOptions& options = {});

/// State from the gains recursion; at each start the latest snapshot
/// estimate f(k-1) is held constant over the horizon.
PredictionSet predict_online_ig(const DiscreteModel& dm, const TimeSeriesDataset& ds,
                                const PredictionOptions& options = {});

}  // namespace thermident
