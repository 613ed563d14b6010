#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "thermident/building.hpp"
#include "thermident/parameters.hpp"

namespace thermident {

inline constexpr double kAirSpecificHeat = 1005.0;  // J/(kg K)
inline constexpr double kAirDensity = 1.2;          // kg/m^3

/// Disturbance channels: ambient air, supply air upstream of the reheat
/// coils, and solar irradiance on the four facades.
enum DisturbanceChannel : Eigen::Index {
  kTa = 0,
  kTs = 1,
  kSolE = 2,
  kSolS = 3,
  kSolW = 4,
  kSolN = 5,
};
inline constexpr Eigen::Index kDisturbanceCount = 6;
using Disturbance = Eigen::Matrix<double, kDisturbanceCount, 1>;

const std::array<std::string_view, kDisturbanceCount>& disturbance_names();

/// Irradiance channel for an orientation, or -1 for none.
Eigen::Index solar_channel(Orientation orientation);

struct NetworkOptions {
  int nodes_per_element = 2;  // capacitive nodes per layered construction (2 or 3)
  double air_density = kAirDensity;
  double c_p = kAirSpecificHeat;
};

/// A hull surface exchanging heat with the outdoors: either the opaque outer
/// node of an exterior construction or the glazing attached to a room node.
struct HullSurface {
  Eigen::Index state = 0;
  double area = 0.0;
  Eigen::Index solar = -1;  // disturbance channel, -1 when unlit
};

/// Everything that ties state indices back to the building.
struct ModelLayout {
  std::vector<std::string> state_labels;   // room id or "<element>#<node>"
  std::vector<std::string> state_element;  // owning building element per state
  std::vector<std::string> zone_ids;
  std::vector<std::string> room_ids;
  std::vector<std::string> box_ids;
  std::vector<Eigen::Index> room_state;  // per room
  std::vector<Eigen::Index> room_zone;   // per room
  Eigen::VectorXd room_floor_area;       // a_floor per room, m^2
  std::vector<Eigen::Index> box_room;    // per box, index into rooms
  std::vector<std::vector<Eigen::Index>> room_boxes;
  Eigen::VectorXd box_min_flow;
  Eigen::VectorXd box_max_flow;
  Eigen::VectorXd capacitance;  // J/K per state
  std::vector<HullSurface> opaque_hull;
  std::vector<HullSurface> windows;
  double c_p = kAirSpecificHeat;

  Eigen::Index state_count() const { return capacitance.size(); }
  Eigen::Index zone_count() const { return static_cast<Eigen::Index>(zone_ids.size()); }
  Eigen::Index box_count() const { return static_cast<Eigen::Index>(box_ids.size()); }
  Eigen::Index room_count() const { return static_cast<Eigen::Index>(room_ids.size()); }
};

/// Continuous-time bilinear RC model
///   xdot = A_t x + B_t (q_BH + q_HVAC + q_IG)
///        = A x + B_v v + B_IG (c_IG + f_IG) + sum_j (B_xu[j] x + B_vu[j] v) u_j.
struct RCStateSpaceModel {
  ModelLayout layout;
  ParameterVector params;

  Eigen::MatrixXd A_t;      // closed thermal network
  Eigen::VectorXd B_t_diag; // B_t = diag(1 / capacitance)

  Eigen::MatrixXd A;
  Eigen::MatrixXd B_v;
  Eigen::MatrixXd B_ig;
  std::vector<Eigen::MatrixXd> B_xu;
  std::vector<Eigen::MatrixXd> B_vu;
  Eigen::MatrixXd C;  // zone outputs, floor-area weighted over room air
  bool assembled = false;

  Eigen::Index state_count() const { return A_t.rows(); }
  Eigen::MatrixXd B_t() const { return B_t_diag.asDiagonal(); }
};

/// Builds the RC network (A_t, B_t and all structural maps). The interior
/// convection coefficients of `params` enter A_t; hull and gains terms are
/// added by assemble_continuous.
RCStateSpaceModel build_rc_network(const BuildingDescription& desc,
                                   const ParameterVector& params,
                                   const NetworkOptions& options = {});

/// Building-hull heat flux per state, W.
Eigen::VectorXd hull_flux(const RCStateSpaceModel& model, const Eigen::VectorXd& x,
                          const Disturbance& v, const ParameterVector& params);

/// HVAC heat flux per state, W. Throws on negative airflow.
Eigen::VectorXd hvac_flux(const RCStateSpaceModel& model, const Eigen::VectorXd& x,
                          const Disturbance& v, const Eigen::VectorXd& u);

/// Internal-gains heat flux per state, W.
Eigen::VectorXd ig_flux(const RCStateSpaceModel& model, const Eigen::VectorXd& c_ig,
                        const Eigen::VectorXd& f_ig);

/// Populates A, B_v, B_IG and the bilinear families from the network and
/// the hull/gains coefficients of `params`.
RCStateSpaceModel assemble_continuous(RCStateSpaceModel model, const ParameterVector& params);

/// build_rc_network followed by assemble_continuous.
RCStateSpaceModel build_model(const BuildingDescription& desc, const ParameterVector& params,
                              const NetworkOptions& options = {});

/// xdot evaluated from the assembled matrices.
Eigen::VectorXd continuous_derivative(const RCStateSpaceModel& model, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u, const Disturbance& v,
                                      const Eigen::VectorXd& f_ig);

}  // namespace thermident
