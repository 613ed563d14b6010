#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "thermident/dataset.hpp"
#include "thermident/internal_gains.hpp"

namespace thermident {

inline constexpr std::string_view kReportSchema = "thermident-report/1";

/// Per-zone sqrt(mean(e^2)) over columns where both entries are finite.
/// Throws Error(kInvalid) when a zone has no overlapping samples.
Eigen::VectorXd rms_by_zone(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& measured);

/// RMS at each lead time, pooled over the prediction starts.
struct HorizonCurve {
  Eigen::MatrixXd zone_rms;  // zones x horizon
  Eigen::VectorXd mean_rms;  // zone mean per horizon
  Eigen::VectorXi samples;   // pooled samples per horizon (per zone)
  Eigen::Index horizon() const { return mean_rms.size(); }
};

HorizonCurve horizon_curve(const PredictionSet& predictions, const TimeSeriesDataset& measured);

/// RMS per zone pooled over every start and lead time of a prediction set.
Eigen::VectorXd prediction_rms(const PredictionSet& predictions, const TimeSeriesDataset& measured);

struct PredictorSummary {
  std::string name;
  std::string cadence;  // "anchored" or "sliding"
  Eigen::Index horizon = 0;
  Eigen::VectorXd zone_rms;
  double mean_rms = 0.0;
  HorizonCurve curve;  // may be empty
};

PredictorSummary summarize(std::string name, const PredictionSet& predictions, const TimeSeriesDataset& measured,
                           Cadence cadence, bool with_curve = true);

struct EvaluationReport {
  std::vector<std::string> zone_ids;
  PredictorSummary fixed;
  PredictorSummary online;
  Eigen::VectorXd zone_improvement;  // (fixed - online) / fixed
  double mean_improvement = 0.0;     // from the zone-mean RMS values
  std::map<std::string, std::string> metadata;
};

/// Throws Error(kInvalid) when the summaries were made with different
/// cadences, horizons or zone counts.
EvaluationReport compare_predictors(const PredictorSummary& fixed, const PredictorSummary& online,
                                    std::vector<std::string> zone_ids);

std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(std::string_view text, std::string_view source_name = "<input>");
EvaluationReport load_report(const std::filesystem::path& path);

/// horizon_curve.csv (horizon, <zone>_fixed..., <zone>_online..., mean_*)
/// and zone_rms.csv (zone, fixed, online, improvement).
void save_report_csvs(const std::filesystem::path& dir, const EvaluationReport& report);

/// Long-format CSV with columns start, time, horizon and one per zone;
/// start and time are ISO 8601 timestamps on the dataset's grid.
void save_predictions_csv(const std::filesystem::path& path, const PredictionSet& predictions,
                          const TimeSeriesDataset& ds);
PredictionSet load_predictions_csv(const std::filesystem::path& path, const TimeSeriesDataset& ds);

/// Spearman rank correlation with average ranks for ties.
double spearman_rho(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// One-sided exact sign test of "positive" against p = 1/2, zeros dropped;
/// returns P(X >= positives).
double sign_test_p_value(const Eigen::VectorXd& differences);

}  // namespace thermident
