#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "thermident/rc_model.hpp"

namespace thermident {

/// Seconds since 1970-01-01T00:00:00Z.
using Timestamp = std::int64_t;

std::string format_iso8601(Timestamp t);
/// Accepts "YYYY-MM-DDTHH:MM:SS" with an optional trailing "Z".
Timestamp parse_iso8601(std::string_view text);
/// Days since the epoch of a civil (proleptic Gregorian) date.
std::int64_t days_from_civil(int year, unsigned month, unsigned day);

inline constexpr int kStepsPerDay = 96;
inline constexpr int kStepsPerWeek = 7 * kStepsPerDay;

/// Index of `t` on the weekly grid anchored at Monday 00:00 UTC.
int time_of_week_slot(Timestamp t, double dt = 900.0);
/// Monday = 0 ... Sunday = 6.
int weekday(Timestamp t);
double hour_of_day(Timestamp t);

/// Aligned measurement sequences on a uniform grid; time runs along
/// columns. NaN marks a missing sample. Ground truth is present only for
/// synthetic data.
struct TimeSeriesDataset {
  std::vector<Timestamp> timestamps;
  std::vector<std::string> zone_ids;
  std::vector<std::string> box_ids;
  Eigen::MatrixXd y;  // zones x N, deg C
  Eigen::MatrixXd u;  // boxes x N, kg/s
  Eigen::MatrixXd v;  // 6 x N
  std::vector<std::string> state_labels;
  std::optional<Eigen::MatrixXd> true_x;     // states x N
  std::optional<Eigen::MatrixXd> true_f_ig;  // zones x N, W/m^2

  Eigen::Index size() const { return static_cast<Eigen::Index>(timestamps.size()); }
  double step() const;
  Disturbance disturbance(Eigen::Index k) const { return v.col(k); }

  /// Samples [begin, end).
  TimeSeriesDataset slice(Eigen::Index begin, Eigen::Index end) const;

  /// True if any measured channel (y, u or v) is missing at k.
  bool missing(Eigen::Index k) const;

  /// Checks equal lengths and a uniform grid; with a layout, also the
  /// channel counts and box airflow limits. Throws Error(kInvalid).
  void validate(const ModelLayout* layout = nullptr) const;
};

/// Copy with NaN inputs (u, v) replaced by the last valid value so the
/// model can be rolled through gaps; outputs are left untouched.
TimeSeriesDataset hold_missing_inputs(const TimeSeriesDataset& ds);

/// Concatenates datasets that share channels (timestamps must keep
/// increasing on the common grid).
TimeSeriesDataset concatenate(const std::vector<TimeSeriesDataset>& parts);

/// CSV layout: timestamp, y_<zone>..., u_<box>..., v_Ta, v_Ts, v_solE,
/// v_solS, v_solW, v_solN. Ground truth goes to the sibling
/// "<stem>.truth.csv" with timestamp, x_<state>..., f_<zone>... columns.
void save_dataset_csv(const std::filesystem::path& path, const TimeSeriesDataset& ds);
TimeSeriesDataset load_dataset_csv(const std::filesystem::path& path);
std::filesystem::path truth_path_for(const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace thermident
