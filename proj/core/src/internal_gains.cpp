#include "thermident/internal_gains.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include "thermident/csv.hpp"
#include "thermident/error.hpp"

namespace thermident {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Monday 00:00 on or before t.
Timestamp week_start(Timestamp t) {
  const Timestamp day = t - static_cast<Timestamp>(hour_of_day(t) * 3600.0);
  return day - static_cast<Timestamp>(weekday(t)) * 86400;
}

// Open-loop outputs for samples start + 1 .. start + horizon.
template <typename Gains>
Eigen::MatrixXd rollout_outputs(const DiscreteModel& dm, Eigen::VectorXd x, const TimeSeriesDataset& ds,
                                Eigen::Index start, Eigen::Index horizon, Gains gains) {
  Eigen::MatrixXd y(dm.zone_count(), horizon);
  for (Eigen::Index h = 0; h < horizon; ++h) {
    const Eigen::Index k = start + h;
    x = step(dm, x, ds.u.col(k), ds.disturbance(k), gains(k));
    y.col(h) = dm.C * x;
  }
  if (!y.allFinite()) throw Error(ErrorCode::kUnstable, "prediction rollout diverged");
  return y;
}

std::string slot_label(Eigen::Index slot, double dt) {
  const auto seconds = static_cast<long long>(std::llround(static_cast<double>(slot) * dt));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld %02lld:%02lld", seconds / 86400, seconds % 86400 / 3600,
                seconds % 3600 / 60);
  return buf;
}

}  // namespace

NoGainsStep simulate_no_ig(const DiscreteModel& dm, const Eigen::VectorXd& x_prev, const Eigen::VectorXd& u_prev,
                           const Disturbance& v_prev) {
  NoGainsStep out;
  out.x = step(dm, x_prev, u_prev, v_prev, Eigen::VectorXd::Zero(dm.zone_count()));
  out.y = dm.C * out.x;
  return out;
}

GainsSolver::GainsSolver(const DiscreteModel& dm, double rank_tolerance) : CB_(dm.C * dm.B_ig) {
  if (CB_.rows() == 0) throw Error(ErrorCode::kDimension, "model has no outputs");
  cod_.setThreshold(rank_tolerance);
  cod_.compute(CB_);
  rank_ = cod_.rank();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(CB_);
  const auto& sv = svd.singularValues();
  const double smallest = sv[sv.size() - 1];
  condition_ = smallest > 0.0 ? sv[0] / smallest : std::numeric_limits<double>::infinity();
}

SnapshotEstimate GainsSolver::solve(const Eigen::VectorXd& output_residual) const {
  if (output_residual.size() != CB_.rows()) {
    throw Error(ErrorCode::kDimension, "output residual does not match the zone count");
  }
  SnapshotEstimate est;
  est.f = cod_.solve(output_residual);
  est.rank = rank_;
  est.rank_deficient = rank_ < CB_.cols();
  return est;
}

SnapshotEstimate estimate_ig_snapshot(const DiscreteModel& dm, const Eigen::VectorXd& y_meas,
                                      const Eigen::VectorXd& y_sim) {
  const GainsSolver solver(dm);
  const SnapshotEstimate est = solver.solve(y_meas - y_sim);
  if (est.rank_deficient) {
    spdlog::warn("C*B_IG has rank {} < {}; using the minimum-norm gains estimate", est.rank, dm.zone_count());
  }
  return est;
}

GainsRecursion estimate_ig_sequence(const DiscreteModel& dm, const TimeSeriesDataset& raw,
                                    const GainsEstimationOptions& options) {
  const Eigen::Index n = raw.size();
  const Eigen::Index w = options.warmup_steps;
  if (w < 0 || w >= n) throw Error(ErrorCode::kDimension, "warm-up leaves no samples for gains estimation");
  const TimeSeriesDataset ds = hold_missing_inputs(raw);
  const GainsSolver solver(dm);

  GainsRecursion rec;
  rec.first = w;
  rec.rank_deficient = solver.rank() < dm.zone_count();
  if (rec.rank_deficient) {
    spdlog::warn("C*B_IG has rank {} < {}; using minimum-norm gains estimates", solver.rank(), dm.zone_count());
  }
  rec.f = Eigen::MatrixXd::Constant(dm.zone_count(), n, kNaN);
  rec.x = Eigen::MatrixXd::Constant(dm.state_count(), n, kNaN);

  KalmanOptions kf;
  kf.noise = options.noise;
  rec.x.col(w) = kalman_filter(dm, ds, kf, {}, 0, w + 1).mean.col(w);

  Eigen::VectorXd f_held = Eigen::VectorXd::Zero(dm.zone_count());
  for (Eigen::Index k = w + 1; k < n; ++k) {
    const NoGainsStep pred = simulate_no_ig(dm, rec.x.col(k - 1), ds.u.col(k - 1), ds.disturbance(k - 1));
    const Eigen::VectorXd meas = ds.y.col(k);
    if (meas.allFinite()) {
      f_held = solver.solve(meas - pred.y).f;
      rec.f.col(k - 1) = f_held;
    } else {
      ++rec.skipped;
    }
    rec.x.col(k) = pred.x + dm.B_ig * f_held;
  }
  return rec;
}

Eigen::VectorXd InternalGainsProfile::at(Timestamp t) const {
  const Eigen::Index slot = time_of_week_slot(t, dt);
  if (slot >= f.cols()) throw Error(ErrorCode::kDimension, "profile grid does not cover the week");
  Eigen::VectorXd out = f.col(slot);
  for (Eigen::Index z = 0; z < out.size(); ++z) {
    if (!std::isfinite(out[z])) out[z] = 0.0;
  }
  return out;
}

Eigen::MatrixXd InternalGainsProfile::sequence(const TimeSeriesDataset& ds) const {
  Eigen::MatrixXd out(f.rows(), ds.size());
  for (Eigen::Index k = 0; k < ds.size(); ++k) out.col(k) = at(ds.timestamps[static_cast<std::size_t>(k)]);
  return out;
}

void average_weeks(InternalGainsProfile& profile) {
  const Eigen::Index nz = static_cast<Eigen::Index>(profile.zone_ids.size());
  const auto slots = static_cast<Eigen::Index>(std::llround(7 * 86400.0 / profile.dt));
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(nz, slots);
  profile.count = Eigen::MatrixXi::Zero(nz, slots);
  for (const auto& week : profile.weeks) {
    if (week.rows() != nz || week.cols() != slots) {
      throw Error(ErrorCode::kDimension, "weekly estimate does not match the profile grid");
    }
    for (Eigen::Index s = 0; s < slots; ++s) {
      for (Eigen::Index z = 0; z < nz; ++z) {
        if (std::isfinite(week(z, s))) {
          sum(z, s) += week(z, s);
          ++profile.count(z, s);
        }
      }
    }
  }
  profile.f.resize(nz, slots);
  for (Eigen::Index s = 0; s < slots; ++s) {
    for (Eigen::Index z = 0; z < nz; ++z) {
      const int c = profile.count(z, s);
      profile.f(z, s) = c > 0 ? sum(z, s) / c : kNaN;
    }
  }
}

InternalGainsProfile estimate_fixed_ig(const DiscreteModel& dm, const std::vector<TimeSeriesDataset>& training,
                                       const GainsEstimationOptions& options) {
  if (training.empty()) throw Error(ErrorCode::kInvalid, "gains estimation needs at least one dataset");
  InternalGainsProfile profile;
  profile.zone_ids = dm.layout.zone_ids;
  profile.c_ig = dm.c_ig;
  profile.dt = dm.dt;
  const auto slots = static_cast<Eigen::Index>(std::llround(7 * 86400.0 / dm.dt));
  const Eigen::Index nz = dm.zone_count();

  std::map<Timestamp, Eigen::MatrixXd> weeks;
  for (const auto& ds : training) {
    if (ds.size() >= 2 && std::abs(ds.step() - dm.dt) > 1e-9) {
      throw Error(ErrorCode::kInvalid, "dataset step differs from the model step");
    }
    const GainsRecursion rec = estimate_ig_sequence(dm, ds, options);
    for (Eigen::Index k = rec.first; k < ds.size(); ++k) {
      const Timestamp t = ds.timestamps[static_cast<std::size_t>(k)];
      auto [it, inserted] = weeks.try_emplace(week_start(t), Eigen::MatrixXd::Constant(nz, slots, kNaN));
      if (!rec.f.col(k).allFinite()) continue;
      it->second.col(time_of_week_slot(t, dm.dt)) = rec.f.col(k);
    }
  }
  for (auto& [start, est] : weeks) {
    if (est.array().isFinite().any()) profile.weeks.push_back(std::move(est));
  }
  average_weeks(profile);
  return profile;
}

void save_profile_csv(const std::filesystem::path& path, const InternalGainsProfile& profile) {
  CsvTable t;
  t.header = {"slot", "time_of_week"};
  for (const auto& z : profile.zone_ids) t.header.push_back(z);
  for (Eigen::Index s = 0; s < profile.slots(); ++s) {
    std::vector<std::string> row{std::to_string(s), slot_label(s, profile.dt)};
    for (Eigen::Index z = 0; z < profile.f.rows(); ++z) row.push_back(format_double(profile.f(z, s)));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

InternalGainsProfile load_profile_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 3 || t.header[0] != "slot" || t.header[1] != "time_of_week") {
    throw Error(ErrorCode::kIo, path.string() + ": expected slot, time_of_week and zone columns");
  }
  InternalGainsProfile p;
  p.zone_ids.assign(t.header.begin() + 2, t.header.end());
  const auto slots = static_cast<Eigen::Index>(t.rows.size());
  if (slots == 0) throw Error(ErrorCode::kIo, path.string() + ": empty profile");
  p.dt = 7 * 86400.0 / static_cast<double>(slots);
  p.f.resize(static_cast<Eigen::Index>(p.zone_ids.size()), slots);
  p.count = Eigen::MatrixXi::Ones(p.f.rows(), slots);
  for (Eigen::Index s = 0; s < slots; ++s) {
    const auto& row = t.rows[static_cast<std::size_t>(s)];
    for (Eigen::Index z = 0; z < p.f.rows(); ++z) {
      p.f(z, s) = parse_field(row[static_cast<std::size_t>(z + 2)]);
      if (!std::isfinite(p.f(z, s))) p.count(z, s) = 0;
    }
  }
  return p;
}

void save_weekly_estimates_csv(const std::filesystem::path& path, const InternalGainsProfile& profile) {
  CsvTable t;
  t.header = {"week", "slot", "time_of_week"};
  for (const auto& z : profile.zone_ids) t.header.push_back(z);
  for (std::size_t w = 0; w < profile.weeks.size(); ++w) {
    const auto& est = profile.weeks[w];
    for (Eigen::Index s = 0; s < est.cols(); ++s) {
      std::vector<std::string> row{std::to_string(w), std::to_string(s), slot_label(s, profile.dt)};
      for (Eigen::Index z = 0; z < est.rows(); ++z) row.push_back(format_double(est(z, s)));
      t.rows.push_back(std::move(row));
    }
  }
  write_csv(path, t);
}

std::vector<Eigen::Index> prediction_starts(Eigen::Index n, const PredictionOptions& options) {
  if (options.horizon < 1) throw Error(ErrorCode::kInvalid, "horizon must be at least one step");
  const Eigen::Index first = options.warmup_steps + 1;
  if (first + options.horizon > n - 1) {
    throw Error(ErrorCode::kDimension, "horizon of " + std::to_string(options.horizon) +
                                           " steps exceeds the data after warm-up (" +
                                           std::to_string(std::max<Eigen::Index>(0, n - 1 - first)) + " steps)");
  }
  const Eigen::Index stride = options.cadence == Cadence::kAnchored ? kStepsPerDay : 1;
  std::vector<Eigen::Index> starts;
  for (Eigen::Index s = first; s + options.horizon <= n - 1; s += stride) starts.push_back(s);
  return starts;
}

PredictionSet predict_fixed_ig(const DiscreteModel& dm, const InternalGainsProfile& profile,
                               const TimeSeriesDataset& raw, const PredictionOptions& options) {
  if (static_cast<Eigen::Index>(profile.zone_ids.size()) != dm.zone_count()) {
    throw Error(ErrorCode::kDimension, "profile zones do not match the model");
  }
  const TimeSeriesDataset ds = hold_missing_inputs(raw);
  PredictionSet out;
  out.horizon = options.horizon;
  out.starts = prediction_starts(ds.size(), options);
  const Eigen::MatrixXd f = profile.sequence(ds);
  KalmanOptions kf;
  kf.noise = options.noise;
  const KalmanEstimate est = kalman_filter(dm, ds, kf, f);
  out.y.reserve(out.starts.size());
  for (const Eigen::Index s : out.starts) {
    out.y.push_back(rollout_outputs(dm, est.mean.col(s), ds, s, options.horizon,
                                    [&f](Eigen::Index k) { return Eigen::VectorXd(f.col(k)); }));
  }
  return out;
}

PredictionSet predict_online_ig(const DiscreteModel& dm, const TimeSeriesDataset& raw,
                                const PredictionOptions& options) {
  const TimeSeriesDataset ds = hold_missing_inputs(raw);
  PredictionSet out;
  out.horizon = options.horizon;
  out.starts = prediction_starts(ds.size(), options);
  GainsEstimationOptions go;
  go.noise = options.noise;
  go.warmup_steps = options.warmup_steps;
  const GainsRecursion rec = estimate_ig_sequence(dm, raw, go);
  out.y.reserve(out.starts.size());
  for (const Eigen::Index s : out.starts) {
    // Latest available snapshot before the start.
    Eigen::VectorXd held = Eigen::VectorXd::Zero(dm.zone_count());
    for (Eigen::Index k = s - 1; k >= rec.first; --k) {
      if (rec.f.col(k).allFinite()) {
        held = rec.f.col(k);
        break;
      }
    }
    out.y.push_back(rollout_outputs(dm, rec.x.col(s), ds, s, options.horizon,
                                    [&held](Eigen::Index) { return held; }));
  }
  return out;
}

}  // namespace thermident
