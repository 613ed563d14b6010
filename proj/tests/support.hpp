#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Core>
#include <boost/numeric/odeint.hpp>

#include "thermident/building.hpp"
#include "thermident/dataset.hpp"
#include "thermident/discretization.hpp"
#include "thermident/parameters.hpp"
#include "thermident/rc_model.hpp"
#include "thermident/run_config.hpp"
#include "thermident/synthesis.hpp"

namespace thermident::testing {

inline std::filesystem::path data_dir() { return THERMIDENT_DATA_DIR; }

inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::path(THERMIDENT_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline const BuildingDescription& twin_building() {
  static const BuildingDescription desc = load_building(data_dir() / "twin" / "building.json");
  return desc;
}

inline const ParameterVector& twin_params() {
  static const ParameterVector p = load_parameters(data_dir() / "twin" / "params.json", twin_building());
  return p;
}

inline const RunConfig& twin_config() {
  static const RunConfig cfg = load_run_config(data_dir() / "twin" / "run.json");
  return cfg;
}

inline Timestamp utc(int y, unsigned m, unsigned d, int hour = 0) {
  return days_from_civil(y, m, d) * 86400 + hour * 3600;
}

inline Eigen::VectorXd uniform_vector(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

inline Disturbance random_disturbance(std::mt19937_64& rng) {
  Disturbance v;
  v << std::uniform_real_distribution<double>(-5.0, 35.0)(rng), std::uniform_real_distribution<double>(10.0, 16.0)(rng),
      std::uniform_real_distribution<double>(0.0, 600.0)(rng), std::uniform_real_distribution<double>(0.0, 600.0)(rng),
      std::uniform_real_distribution<double>(0.0, 600.0)(rng), std::uniform_real_distribution<double>(0.0, 200.0)(rng);
  return v;
}

// Continuous bilinear right-hand side written out term by term.
inline Eigen::VectorXd continuous_rhs(const RCStateSpaceModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                      const Disturbance& v, const Eigen::VectorXd& gains) {
  Eigen::VectorXd dx = m.A * x + m.B_v * v + m.B_ig * gains;
  for (std::size_t j = 0; j < m.B_xu.size(); ++j) {
    dx += u[static_cast<Eigen::Index>(j)] * (m.B_xu[j] * x + m.B_vu[j] * v);
  }
  return dx;
}

// Adaptive Dormand-Prince integration of the continuous model over one
// interval with inputs held constant.
inline Eigen::VectorXd integrate_interval(const RCStateSpaceModel& m, Eigen::VectorXd x, const Eigen::VectorXd& u,
                                          const Disturbance& v, const Eigen::VectorXd& gains, double duration,
                                          double tol = 1e-11) {
  namespace odeint = boost::numeric::odeint;
  using State = std::vector<double>;
  State s(x.data(), x.data() + x.size());
  auto rhs = [&](const State& in, State& out, double) {
    const Eigen::Map<const Eigen::VectorXd> xi(in.data(), static_cast<Eigen::Index>(in.size()));
    const Eigen::VectorXd d = continuous_rhs(m, xi, u, v, gains);
    out.assign(d.data(), d.data() + d.size());
  };
  odeint::integrate_adaptive(odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(tol, tol), rhs, s, 0.0,
                             duration, duration / 50.0);
  return Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

// Noiseless, gains-free identification weekend of the twin.
inline TimeSeriesDataset twin_weekend(int w) {
  const RunConfig& cfg = twin_config();
  SynthesisOptions o = cfg.weekend_synthesis(w);
  o.schedule = generate_excitation(twin_building(), cfg.excitation_seed + static_cast<std::uint64_t>(w),
                                   cfg.excitation.days, cfg.weekend_excitation(w));
  return synthesize_dataset(twin_building(), twin_params(), o);
}

inline Layer brick(double thickness = 0.2) { return Layer{thickness, 0.7, 1800.0, 840.0}; }

inline BuildingElement room(const std::string& id, const std::string& zone, double floor_area) {
  BuildingElement e;
  e.id = id;
  e.kind = ElementKind::kRoomAir;
  e.zone = zone;
  e.floor_area = floor_area;
  e.volume = 3.0 * floor_area;
  return e;
}

inline BuildingElement construction(const std::string& id, ElementKind kind, const std::string& a, const std::string& b,
                                    double area, double window_area = 0.0,
                                    Orientation orientation = Orientation::kNone) {
  BuildingElement e;
  e.id = id;
  e.kind = kind;
  e.neighbors = {a, b};
  e.layers = {Layer{0.0125, 0.25, 900.0, 1000.0}, brick()};
  e.area = area;
  e.window_area = window_area;
  e.orientation = orientation;
  return e;
}

// One zone, one room, one south facade; optional box.
inline BuildingDescription single_room(double wall_area, double window_area, bool with_box = true) {
  BuildingDescription d;
  d.name = "single room";
  d.zones = {Zone{"S", 10.0, {}}};
  d.elements = {room("R", "S", 10.0),
                construction("EW", ElementKind::kWindowBearingWall, "R", std::string(kAmbient), wall_area,
                             window_area, Orientation::kSouth)};
  if (with_box) d.vav_boxes = {VavBox{"B", "R", 0.0, 0.5}};
  return d;
}

// Two zones sharing a wall, both with a facade, floor and ceiling.
inline BuildingDescription two_zones() {
  BuildingDescription d;
  d.name = "two zones";
  d.zones = {Zone{"NW", 50.0, {"S"}}, Zone{"S", 30.0, {"NW"}}};
  d.elements = {room("R1", "NW", 50.0),
                room("R2", "S", 10.0),
                room("R3", "S", 20.0),
                construction("EW1", ElementKind::kWindowBearingWall, "R1", std::string(kAmbient), 30.0, 10.0,
                             Orientation::kNorth),
                construction("EW2", ElementKind::kWindowBearingWall, "R2", std::string(kAmbient), 20.0, 6.0,
                             Orientation::kSouth),
                construction("EW3", ElementKind::kWall, std::string(kAmbient), "R3", 15.0, 0.0, Orientation::kEast),
                construction("IW12", ElementKind::kWall, "R1", "R2", 20.0),
                construction("IW23", ElementKind::kWall, "R2", "R3", 12.0),
                construction("FL1", ElementKind::kFloor, "R1", std::string(kAdiabatic), 50.0),
                construction("CE3", ElementKind::kCeiling, "R3", std::string(kAdiabatic), 20.0)};
  d.vav_boxes = {VavBox{"B1", "R1", 0.02, 0.3}, VavBox{"B2", "R1", 0.0, 0.2}, VavBox{"B3", "R2", 0.01, 0.2},
                 VavBox{"B4", "R3", 0.01, 0.25}};
  return d;
}

inline ParameterVector table_params(Eigen::Index zones) {
  ParameterVector p;
  p.gamma_EW = 10.5;
  p.gamma_IW = 29.4;
  p.gamma_floor = 51.5;
  p.gamma_ceil = 44.3;
  p.gamma_absorp = 0.75;
  p.gamma_winSolAbs = 0.03;
  p.U_win = 0.63;
  p.c_ig = Eigen::VectorXd::Constant(zones, 5.0);
  return p;
}

}  // namespace thermident::testing
