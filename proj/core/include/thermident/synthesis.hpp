#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "thermident/building.hpp"
#include "thermident/dataset.hpp"
#include "thermident/excitation.hpp"
#include "thermident/parameters.hpp"
#include "thermident/rc_model.hpp"

namespace thermident {

/// Ambient temperature as a daily sinusoid plus AR(1) noise; half-sine
/// irradiance per facade scaled by a daily cloud factor.
struct WeatherModel {
  double ambient_mean = 17.0;       // degC
  double ambient_amplitude = 6.0;   // degC, maximum at 15:00
  double ambient_noise_sd = 0.6;    // stationary sd of the AR(1) term
  double ambient_noise_ar = 0.98;   // per step
  double supply_temperature = 13.0; // degC
  double supply_noise_sd = 0.1;
  double peak_irradiance = 450.0;   // W/m^2 on a clear day
  double cloud_min = 0.3;           // daily cloud factor drawn from [cloud_min, 1]
};

/// Occupancy-shaped internal gains: zero overnight, rising from
/// onset_hour to a peak at peak_hour and decaying into the night. Each day
/// scales the zone's mean peak by a random factor; weekends are attenuated.
struct GainsModel {
  bool enabled = true;
  Eigen::VectorXd peak;      // mean weekday peak per zone, W/m^2
  Eigen::VectorXd daily_sd;  // relative sd of the daily amplitude per zone
  double weekend_factor = 0.1;
  double onset_hour = 7.0;
  double peak_hour = 13.5;
  double shape = 3.0;        // larger is narrower
  double fluctuation_sd = 0.0;  // relative AR(1) fluctuation within the day
  double fluctuation_ar = 0.9;

  /// Normalized daily shape, 1 at peak_hour.
  double profile(double hour) const;
  /// Expected gains at t (the daily factor has mean one).
  Eigen::VectorXd mean(Timestamp t) const;
};

/// Per-zone proportional cooling toward a setpoint: all boxes of a zone
/// move together from minimum flow at the setpoint to maximum flow at
/// setpoint + band.
struct ControllerModel {
  double setpoint = 21.0;
  double band = 2.0;  // K
};

struct SynthesisOptions {
  Timestamp start = 0;
  int days = 7;
  double dt = 900.0;
  WeatherModel weather;
  GainsModel gains;
  ControllerModel controller;
  std::optional<ExcitationSchedule> schedule;  // overrides the controller where it has samples
  double measurement_noise_sd = 0.0;
  double process_noise_sd = 0.0;
  int burn_in_days = 0;
  std::optional<Eigen::VectorXd> x0;  // state at the start of burn-in
  double initial_temperature = 21.0;
  std::uint64_t seed = 0;
  NetworkOptions network;
};

/// Generates a ground-truth rollout of the model built from (desc, params)
/// and the measured channels derived from it. true_f_ig(k) acts over step
/// k; y(k) = C x(k) plus measurement noise.
TimeSeriesDataset synthesize_dataset(const BuildingDescription& desc, const ParameterVector& params,
                                     const SynthesisOptions& options);

/// Twin defaults for the gains model (peak and variability per zone).
GainsModel default_gains(const BuildingDescription& desc);

}  // namespace thermident
