#include "thermident/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "thermident/discretization.hpp"
#include "thermident/error.hpp"
#include "thermident/simulation.hpp"

namespace thermident {
namespace {

// Half-sine bump over [rise, set] hours.
double half_sine(double hour, double rise, double set) {
  if (hour <= rise || hour >= set) return 0.0;
  return std::sin(std::numbers::pi * (hour - rise) / (set - rise));
}

// Separate streams so that, e.g., turning on measurement noise leaves the
// weather and the gains unchanged.
struct Streams {
  std::mt19937_64 weather;
  std::mt19937_64 gains;
  std::mt19937_64 noise;

  explicit Streams(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    std::array<std::uint64_t, 3> s{};
    std::vector<std::uint32_t> words(6);
    seq.generate(words.begin(), words.end());
    for (std::size_t i = 0; i < 3; ++i) s[i] = (std::uint64_t{words[2 * i]} << 32) | words[2 * i + 1];
    weather.seed(s[0]);
    gains.seed(s[1]);
    noise.seed(s[2]);
  }
};

}  // namespace

double GainsModel::profile(double hour) const {
  if (hour <= onset_hour) return 0.0;
  const double x = (hour - onset_hour) / (peak_hour - onset_hour);
  return std::pow(x, shape) * std::exp(shape * (1.0 - x));
}

Eigen::VectorXd GainsModel::mean(Timestamp t) const {
  if (!enabled) return Eigen::VectorXd::Zero(peak.size());
  const double day_factor = weekday(t) >= 5 ? weekend_factor : 1.0;
  return peak * (day_factor * profile(hour_of_day(t)));
}

GainsModel default_gains(const BuildingDescription& desc) {
  GainsModel g;
  const auto nz = static_cast<Eigen::Index>(desc.zones.size());
  g.peak = Eigen::VectorXd::Constant(nz, 15.0);
  g.daily_sd = Eigen::VectorXd::Constant(nz, 0.3);
  g.fluctuation_sd = 0.2;
  return g;
}

TimeSeriesDataset synthesize_dataset(const BuildingDescription& desc, const ParameterVector& params,
                                     const SynthesisOptions& o) {
  if (o.days < 0 || o.burn_in_days < 0) throw Error(ErrorCode::kInvalid, "days must be nonnegative");
  const RCStateSpaceModel model = build_model(desc, params, o.network);
  const DiscreteModel dm = discretize(model, o.dt);
  const ModelLayout& lay = dm.layout;
  const Eigen::Index nz = lay.zone_count();
  const Eigen::Index m = lay.box_count();
  const Eigen::Index n = lay.state_count();

  GainsModel gains = o.gains;
  if (gains.peak.size() == 0) {
    const GainsModel d = default_gains(desc);
    gains.peak = d.peak;
    gains.daily_sd = d.daily_sd;
  }
  if (gains.peak.size() != nz || gains.daily_sd.size() != nz) {
    throw Error(ErrorCode::kDimension, "gains model needs one peak and one sd per zone");
  }

  const auto dt = static_cast<Timestamp>(std::llround(o.dt));
  const Eigen::Index steps_per_day = 86400 / dt;
  const Eigen::Index burn = o.burn_in_days * steps_per_day;
  const Eigen::Index total = burn + o.days * steps_per_day;
  const Timestamp t0 = o.start - burn * dt;

  Streams rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Eigen::VectorXd x = o.x0 ? *o.x0 : Eigen::VectorXd::Constant(n, o.initial_temperature);
  if (x.size() != n) throw Error(ErrorCode::kDimension, "initial state does not match the model");

  TimeSeriesDataset ds;
  ds.zone_ids = lay.zone_ids;
  ds.box_ids = lay.box_ids;
  ds.state_labels = lay.state_labels;
  const Eigen::Index keep = total - burn;
  ds.timestamps.resize(static_cast<std::size_t>(keep));
  ds.y.resize(nz, keep);
  ds.u.resize(m, keep);
  ds.v.resize(kDisturbanceCount, keep);
  Eigen::MatrixXd true_x(n, keep);
  Eigen::MatrixXd true_f(nz, keep);

  // Zone membership of each box for the controller.
  std::vector<Eigen::Index> box_zone(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    box_zone[static_cast<std::size_t>(j)] = lay.room_zone[static_cast<std::size_t>(lay.box_room[static_cast<std::size_t>(j)])];
  }

  const double ar = o.weather.ambient_noise_ar;
  const double ar_sd = o.weather.ambient_noise_sd * std::sqrt(std::max(0.0, 1.0 - ar * ar));
  double ambient_noise = o.weather.ambient_noise_sd * normal(rng.weather);
  double cloud = 1.0;
  Eigen::VectorXd day_amp = gains.peak;
  Eigen::VectorXd fluct = Eigen::VectorXd::Zero(nz);
  const double f_ar = gains.fluctuation_ar;
  const double f_sd = gains.fluctuation_sd * std::sqrt(std::max(0.0, 1.0 - f_ar * f_ar));

  for (Eigen::Index k = 0; k < total; ++k) {
    const Timestamp t = t0 + k * dt;
    const double hour = hour_of_day(t);
    if (k % steps_per_day == 0 || k == 0) {
      cloud = o.weather.cloud_min + (1.0 - o.weather.cloud_min) * unit(rng.weather);
      const double day_factor = weekday(t) >= 5 ? gains.weekend_factor : 1.0;
      for (Eigen::Index z = 0; z < nz; ++z) {
        day_amp[z] = gains.peak[z] * day_factor * std::max(0.0, 1.0 + gains.daily_sd[z] * normal(rng.gains));
      }
    }

    Disturbance v;
    ambient_noise = ar * ambient_noise + ar_sd * normal(rng.weather);
    v[kTa] = o.weather.ambient_mean +
             o.weather.ambient_amplitude * std::cos(2.0 * std::numbers::pi * (hour - 15.0) / 24.0) + ambient_noise;
    v[kTs] = o.weather.supply_temperature + o.weather.supply_noise_sd * normal(rng.weather);
    const double sun = o.weather.peak_irradiance * cloud;
    v[kSolE] = sun * half_sine(hour, 6.0, 13.0);
    v[kSolS] = sun * half_sine(hour, 8.0, 18.0);
    v[kSolW] = sun * half_sine(hour, 12.0, 20.0);
    v[kSolN] = 0.2 * sun * half_sine(hour, 6.0, 20.0);

    Eigen::VectorXd f = Eigen::VectorXd::Zero(nz);
    if (gains.enabled) {
      const double shape = gains.profile(hour);
      for (Eigen::Index z = 0; z < nz; ++z) {
        fluct[z] = f_ar * fluct[z] + f_sd * normal(rng.gains);
        f[z] = std::max(0.0, day_amp[z] * shape * (1.0 + fluct[z]));
      }
    }

    Eigen::VectorXd y = dm.C * x;
    if (o.measurement_noise_sd > 0.0) {
      for (Eigen::Index z = 0; z < nz; ++z) y[z] += o.measurement_noise_sd * normal(rng.noise);
    }

    Eigen::VectorXd u(m);
    bool scheduled = false;
    if (o.schedule && !o.schedule->timestamps.empty()) {
      const Timestamp s0 = o.schedule->timestamps.front();
      const Timestamp idx = (t - s0) / dt;
      if (t >= s0 && (t - s0) % dt == 0 && idx < static_cast<Timestamp>(o.schedule->timestamps.size())) {
        u = o.schedule->u.col(static_cast<Eigen::Index>(idx));
        scheduled = true;
      }
    }
    if (!scheduled) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const double err = (y[box_zone[static_cast<std::size_t>(j)]] - o.controller.setpoint) / o.controller.band;
        const double a = std::clamp(err, 0.0, 1.0);
        u[j] = lay.box_min_flow[j] + a * (lay.box_max_flow[j] - lay.box_min_flow[j]);
      }
    }

    if (k >= burn) {
      const Eigen::Index c = k - burn;
      ds.timestamps[static_cast<std::size_t>(c)] = t;
      ds.y.col(c) = y;
      ds.u.col(c) = u;
      ds.v.col(c) = v;
      true_x.col(c) = x;
      true_f.col(c) = f;
    }

    x = step(dm, x, u, v, f);
    if (o.process_noise_sd > 0.0) {
      for (Eigen::Index i = 0; i < n; ++i) x[i] += o.process_noise_sd * normal(rng.noise);
    }
    if (!x.allFinite()) throw Error(ErrorCode::kUnstable, "synthetic rollout diverged");
  }
  ds.true_x = std::move(true_x);
  ds.true_f_ig = std::move(true_f);
  return ds;
}

}  // namespace thermident
