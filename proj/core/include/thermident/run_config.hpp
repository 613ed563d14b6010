#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "thermident/building.hpp"
#include "thermident/identification.hpp"
#include "thermident/internal_gains.hpp"
#include "thermident/parameters.hpp"
#include "thermident/synthesis.hpp"

namespace thermident {

inline constexpr std::string_view kRunSchema = "thermident-run/1";

/// Identification weekends: each dataset starts `lead_days` before the
/// excitation (for the filter warm-up) and covers lead_days + days days.
struct ExcitationPlan {
  Timestamp first_day = 0;  // midnight of the first excited day
  int weekends = 2;
  int days = 2;
  int lead_days = 1;
  int start_hour = 8;
  int block_hours = 2;
  double measurement_noise_sd = 0.0;
};

/// Regular operation data split into training and validation weeks.
struct OperationPlan {
  Timestamp start = 0;  // Monday 00:00
  int weeks = 11;
  int training_weeks = 8;
  int burn_in_days = 3;
  double measurement_noise_sd = 0.0;
  double process_noise_sd = 0.0;
  GainsModel gains;  // shape settings; peak and daily_sd are filled per zone
  double default_peak = 15.0;
  double default_daily_sd = 0.3;
  std::map<std::string, double> zone_peak;
  std::map<std::string, double> zone_daily_sd;
  WeatherModel weather;
  ControllerModel controller;
};

struct RunConfig {
  std::filesystem::path source;
  std::string hash;  // 16 hex digits

  std::filesystem::path building;
  std::optional<std::filesystem::path> parameters;  // ground truth for synthesis
  std::filesystem::path output_dir;
  std::vector<std::filesystem::path> identification_data;  // empty: synthesized weekends
  std::vector<std::filesystem::path> training_data;         // empty: synthesized training
  std::vector<std::filesystem::path> validation_data;       // empty: synthesized validation

  double dt = 900.0;
  KalmanNoise noise;
  Eigen::Index warmup_steps = kStepsPerDay;

  OptimizerMethod method = OptimizerMethod::kLevenbergMarquardt;
  std::optional<std::filesystem::path> initial_guess;  // params file; plausible guess when absent
  std::vector<std::pair<std::string, std::pair<double, double>>> bound_overrides;
  int max_iterations = 100;
  int starts = 1;
  double start_spread = 0.5;

  std::uint64_t excitation_seed = 100;
  std::uint64_t synthesis_seed = 10;
  std::uint64_t optimizer_seed = 0;

  ExcitationPlan excitation;
  OperationPlan operation;

  Eigen::Index horizon = kStepsPerDay;
  Cadence cadence = Cadence::kAnchored;

  IdentificationOptions identification_options() const;
  GainsEstimationOptions gains_options() const;
  PredictionOptions prediction_options() const;
  ParameterBounds bounds(const BuildingDescription& desc) const;
  /// Regular-operation synthesis covering all weeks (training first).
  SynthesisOptions operation_synthesis(const BuildingDescription& desc) const;
  /// Synthesis of identification weekend w, without the schedule.
  SynthesisOptions weekend_synthesis(int w) const;
  ExcitationOptions weekend_excitation(int w) const;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// Parses a run config. Relative paths resolve against `base_dir`. Each
/// override is (JSON pointer, value); values that parse as JSON are used
/// as such, anything else as a string. The hash covers the canonical form
/// after overrides. Referenced input paths must exist (Error(kConfig)).
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir,
                           const std::vector<std::pair<std::string, std::string>>& overrides = {},
                           std::string_view source_name = "<input>");
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::pair<std::string, std::string>>& overrides = {});

}  // namespace thermident
