#include "thermident/rc_model.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include "thermident/error.hpp"

namespace thermident {
namespace {

// Integrates a per-layer density over [from, to] of a layer stack (positions
// measured in metres from the neighbors[0] side).
template <typename PerMetre>
double integrate_stack(const std::vector<Layer>& layers, double from, double to,
                       PerMetre per_metre) {
  double acc = 0.0;
  double start = 0.0;
  for (const auto& layer : layers) {
    const double end = start + layer.thickness;
    const double lo = std::max(from, start);
    const double hi = std::min(to, end);
    if (hi > lo) acc += (hi - lo) * per_metre(layer);
    start = end;
  }
  return acc;
}

double thermal_resistance(const std::vector<Layer>& layers, double from, double to) {
  return integrate_stack(layers, from, to, [](const Layer& l) { return 1.0 / l.conductivity; });
}

double heat_capacity(const std::vector<Layer>& layers, double from, double to) {
  return integrate_stack(layers, from, to,
                         [](const Layer& l) { return l.density * l.specific_heat; });
}

// Convection coefficient seen from neighbor `side` of an element.
double room_side_coefficient(const BuildingElement& e, int side, const ParameterVector& p) {
  switch (e.kind) {
    case ElementKind::kFloor: return side == 0 ? p.gamma_floor : p.gamma_ceil;
    case ElementKind::kCeiling: return side == 0 ? p.gamma_ceil : p.gamma_floor;
    default: return p.gamma_IW;
  }
}

}  // namespace

const std::array<std::string_view, kDisturbanceCount>& disturbance_names() {
  static const std::array<std::string_view, kDisturbanceCount> names{"Ta",   "Ts",   "solE",
                                                                     "solS", "solW", "solN"};
  return names;
}

Eigen::Index solar_channel(Orientation orientation) {
  switch (orientation) {
    case Orientation::kEast: return kSolE;
    case Orientation::kSouth: return kSolS;
    case Orientation::kWest: return kSolW;
    case Orientation::kNorth: return kSolN;
    case Orientation::kNone: break;
  }
  return -1;
}

RCStateSpaceModel build_rc_network(const BuildingDescription& desc,
                                   const ParameterVector& params,
                                   const NetworkOptions& options) {
  validate(desc);
  if (options.nodes_per_element < 1) {
    throw Error(ErrorCode::kInvalid, "nodes_per_element must be at least 1");
  }
  if (params.c_ig.size() != static_cast<Eigen::Index>(desc.zones.size())) {
    throw Error(ErrorCode::kDimension, "c_IG needs one entry per zone");
  }

  RCStateSpaceModel model;
  model.params = params;
  ModelLayout& lay = model.layout;
  lay.c_p = options.c_p;
  for (const auto& z : desc.zones) lay.zone_ids.push_back(z.id);

  std::vector<double> capacitance;
  std::map<std::string, Eigen::Index> room_index;
  for (const auto& e : desc.elements) {
    if (!e.is_room()) continue;
    const auto state = static_cast<Eigen::Index>(capacitance.size());
    room_index[e.id] = static_cast<Eigen::Index>(lay.room_ids.size());
    lay.room_ids.push_back(e.id);
    lay.room_state.push_back(state);
    lay.room_zone.push_back(static_cast<Eigen::Index>(*desc.zone_index(e.zone)));
    lay.state_labels.push_back(e.id);
    lay.state_element.push_back(e.id);
    capacitance.push_back(options.air_density * options.c_p * e.volume);
  }
  lay.room_floor_area.resize(lay.room_count());
  for (const auto& e : desc.elements) {
    if (e.is_room()) lay.room_floor_area[room_index.at(e.id)] = e.floor_area;
  }

  // Conductance links (i, j, W/K) of the closed network.
  struct Link {
    Eigen::Index i, j;
    double g;
  };
  std::vector<Link> links;
  const int k = options.nodes_per_element;

  for (const auto& e : desc.elements) {
    if (e.is_room()) continue;
    const double mass_area = e.opaque_area();
    const double depth = [&] {
      double d = 0.0;
      for (const auto& l : e.layers) d += l.thickness;
      return d;
    }();
    const auto first = static_cast<Eigen::Index>(capacitance.size());
    std::vector<double> mid(k);
    for (int s = 0; s < k; ++s) {
      const double a = depth * s / k;
      const double b = depth * (s + 1) / k;
      mid[s] = 0.5 * (a + b);
      const double cap = mass_area * heat_capacity(e.layers, a, b);
      if (!(cap > 0.0)) {
        throw Error(ErrorCode::kInvalid,
                    "element '" + e.id + "' yields a non-positive node capacitance");
      }
      capacitance.push_back(cap);
      lay.state_labels.push_back(e.id + "#" + std::to_string(s));
      lay.state_element.push_back(e.id);
    }
    for (int s = 0; s + 1 < k; ++s) {
      links.push_back({first + s, first + s + 1,
                       mass_area / thermal_resistance(e.layers, mid[s], mid[s + 1])});
    }

    for (int side = 0; side < 2; ++side) {
      const std::string& n = e.neighbors[side];
      const Eigen::Index node = side == 0 ? first : first + k - 1;
      const double r_cond = side == 0 ? thermal_resistance(e.layers, 0.0, mid.front())
                                      : thermal_resistance(e.layers, mid.back(), depth);
      if (n == kAdiabatic) continue;
      if (n == kAmbient) {
        lay.opaque_hull.push_back({node, mass_area, solar_channel(e.orientation)});
        continue;
      }
      const Eigen::Index room = lay.room_state[room_index.at(n)];
      const double r_surface = 1.0 / room_side_coefficient(e, side, params);
      links.push_back({room, node, mass_area / (r_surface + r_cond)});
    }

    if (e.window_area > 0.0) {
      const std::string& inner = e.neighbors[0] == kAmbient ? e.neighbors[1] : e.neighbors[0];
      if (inner == kAmbient || inner == kAdiabatic) {
        throw Error(ErrorCode::kInvalid, "glazed element '" + e.id + "' has no room side");
      }
      lay.windows.push_back(
          {lay.room_state[room_index.at(inner)], e.window_area, solar_channel(e.orientation)});
    }
  }

  const auto n = static_cast<Eigen::Index>(capacitance.size());
  lay.capacitance = Eigen::Map<const Eigen::VectorXd>(capacitance.data(), n);

  Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(n, n);
  for (const auto& l : links) {
    laplacian(l.i, l.j) -= l.g;
    laplacian(l.j, l.i) -= l.g;
    laplacian(l.i, l.i) += l.g;
    laplacian(l.j, l.j) += l.g;
  }

  // Every node needs a conductive path to some room air volume.
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::deque<Eigen::Index> queue(lay.room_state.begin(), lay.room_state.end());
  for (auto r : lay.room_state) seen[static_cast<std::size_t>(r)] = true;
  while (!queue.empty()) {
    const Eigen::Index i = queue.front();
    queue.pop_front();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!seen[static_cast<std::size_t>(j)] && laplacian(i, j) != 0.0) {
        seen[static_cast<std::size_t>(j)] = true;
        queue.push_back(j);
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!seen[static_cast<std::size_t>(i)]) {
      throw Error(ErrorCode::kInvalid, "disconnected network node '" +
                                           lay.state_labels[static_cast<std::size_t>(i)] +
                                           "' has no thermal path to room air");
    }
  }

  model.B_t_diag = lay.capacitance.cwiseInverse();
  model.A_t = -(model.B_t_diag.asDiagonal() * laplacian);

  lay.room_boxes.assign(lay.room_ids.size(), {});
  lay.box_min_flow.resize(static_cast<Eigen::Index>(desc.vav_boxes.size()));
  lay.box_max_flow.resize(static_cast<Eigen::Index>(desc.vav_boxes.size()));
  for (std::size_t j = 0; j < desc.vav_boxes.size(); ++j) {
    const auto& b = desc.vav_boxes[j];
    const Eigen::Index room = room_index.at(b.room);
    lay.box_ids.push_back(b.id);
    lay.box_room.push_back(room);
    lay.room_boxes[static_cast<std::size_t>(room)].push_back(static_cast<Eigen::Index>(j));
    lay.box_min_flow[static_cast<Eigen::Index>(j)] = b.min_flow;
    lay.box_max_flow[static_cast<Eigen::Index>(j)] = b.max_flow;
  }

  // Zone outputs: floor-area weighted room-air average.
  model.C = Eigen::MatrixXd::Zero(lay.zone_count(), n);
  for (Eigen::Index r = 0; r < lay.room_count(); ++r) {
    const auto ru = static_cast<std::size_t>(r);
    model.C(lay.room_zone[ru], lay.room_state[ru]) = lay.room_floor_area[r];
  }
  for (Eigen::Index z = 0; z < model.C.rows(); ++z) {
    model.C.row(z) /= model.C.row(z).sum();
  }
  return model;
}

Eigen::VectorXd hull_flux(const RCStateSpaceModel& model, const Eigen::VectorXd& x,
                          const Disturbance& v, const ParameterVector& params) {
  const ModelLayout& lay = model.layout;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(lay.state_count());
  for (const auto& s : lay.opaque_hull) {
    const double sun = s.solar >= 0 ? v[s.solar] : 0.0;
    q[s.state] += params.gamma_EW * s.area * (v[kTa] - x[s.state]) +
                  params.gamma_absorp * s.area * sun;
  }
  for (const auto& w : lay.windows) {
    const double sun = w.solar >= 0 ? v[w.solar] : 0.0;
    q[w.state] +=
        params.U_win * w.area * (v[kTa] - x[w.state]) + params.gamma_winSolAbs * w.area * sun;
  }
  return q;
}

Eigen::VectorXd hvac_flux(const RCStateSpaceModel& model, const Eigen::VectorXd& x,
                          const Disturbance& v, const Eigen::VectorXd& u) {
  const ModelLayout& lay = model.layout;
  if (u.size() != lay.box_count()) throw Error(ErrorCode::kDimension, "airflow vector size");
  if ((u.array() < 0.0).any()) throw Error(ErrorCode::kInvalid, "negative airflow");
  Eigen::VectorXd q = Eigen::VectorXd::Zero(lay.state_count());
  for (Eigen::Index r = 0; r < lay.room_count(); ++r) {
    double flow = 0.0;
    for (auto j : lay.room_boxes[static_cast<std::size_t>(r)]) flow += u[j];
    const Eigen::Index i = lay.room_state[static_cast<std::size_t>(r)];
    q[i] = lay.c_p * flow * (v[kTs] - x[i]);
  }
  return q;
}

Eigen::VectorXd ig_flux(const RCStateSpaceModel& model, const Eigen::VectorXd& c_ig,
                        const Eigen::VectorXd& f_ig) {
  const ModelLayout& lay = model.layout;
  if (c_ig.size() != lay.zone_count() || f_ig.size() != lay.zone_count()) {
    throw Error(ErrorCode::kDimension, "internal gains need one entry per zone");
  }
  Eigen::VectorXd q = Eigen::VectorXd::Zero(lay.state_count());
  for (Eigen::Index r = 0; r < lay.room_count(); ++r) {
    const auto ru = static_cast<std::size_t>(r);
    const Eigen::Index z = lay.room_zone[ru];
    q[lay.room_state[ru]] = lay.room_floor_area[r] * (c_ig[z] + f_ig[z]);
  }
  return q;
}

RCStateSpaceModel assemble_continuous(RCStateSpaceModel model, const ParameterVector& params) {
  const ModelLayout& lay = model.layout;
  const Eigen::Index n = lay.state_count();
  const Eigen::VectorXd& inv_cap = model.B_t_diag;
  model.params.gamma_EW = params.gamma_EW;
  model.params.gamma_absorp = params.gamma_absorp;
  model.params.gamma_winSolAbs = params.gamma_winSolAbs;
  model.params.U_win = params.U_win;
  model.params.c_ig = params.c_ig;

  Eigen::VectorXd hull_conductance = Eigen::VectorXd::Zero(n);
  model.B_v = Eigen::MatrixXd::Zero(n, kDisturbanceCount);
  for (const auto& s : lay.opaque_hull) {
    hull_conductance[s.state] += params.gamma_EW * s.area;
    if (s.solar >= 0) model.B_v(s.state, s.solar) += params.gamma_absorp * s.area * inv_cap[s.state];
  }
  for (const auto& w : lay.windows) {
    hull_conductance[w.state] += params.U_win * w.area;
    if (w.solar >= 0) {
      model.B_v(w.state, w.solar) += params.gamma_winSolAbs * w.area * inv_cap[w.state];
    }
  }
  model.B_v.col(kTa) = hull_conductance.cwiseProduct(inv_cap);
  model.A = model.A_t;
  model.A.diagonal() -= hull_conductance.cwiseProduct(inv_cap);

  model.B_ig = Eigen::MatrixXd::Zero(n, lay.zone_count());
  for (Eigen::Index r = 0; r < lay.room_count(); ++r) {
    const auto ru = static_cast<std::size_t>(r);
    const Eigen::Index i = lay.room_state[ru];
    model.B_ig(i, lay.room_zone[ru]) = lay.room_floor_area[r] * inv_cap[i];
  }

  model.B_xu.assign(static_cast<std::size_t>(lay.box_count()), Eigen::MatrixXd::Zero(n, n));
  model.B_vu.assign(static_cast<std::size_t>(lay.box_count()),
                    Eigen::MatrixXd::Zero(n, kDisturbanceCount));
  for (Eigen::Index j = 0; j < lay.box_count(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const Eigen::Index i = lay.room_state[static_cast<std::size_t>(lay.box_room[ju])];
    model.B_xu[ju](i, i) = -lay.c_p * inv_cap[i];
    model.B_vu[ju](i, kTs) = lay.c_p * inv_cap[i];
  }
  model.assembled = true;
  return model;
}

RCStateSpaceModel build_model(const BuildingDescription& desc, const ParameterVector& params,
                              const NetworkOptions& options) {
  return assemble_continuous(build_rc_network(desc, params, options), params);
}

Eigen::VectorXd continuous_derivative(const RCStateSpaceModel& model, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u, const Disturbance& v,
                                      const Eigen::VectorXd& f_ig) {
  if (!model.assembled) throw Error(ErrorCode::kInvalid, "model is not assembled");
  Eigen::VectorXd dx = model.A * x + model.B_v * v + model.B_ig * (model.params.c_ig + f_ig);
  for (std::size_t j = 0; j < model.B_xu.size(); ++j) {
    const double uj = u[static_cast<Eigen::Index>(j)];
    if (uj != 0.0) dx += (model.B_xu[j] * x + model.B_vu[j] * v) * uj;
  }
  return dx;
}

}  // namespace thermident
