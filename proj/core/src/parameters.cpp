#include "thermident/parameters.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "thermident/error.hpp"
#include "thermident/json_doc.hpp"

namespace thermident {

Eigen::VectorXd ParameterVector::to_vector() const {
  Eigen::VectorXd flat(size());
  flat.head<kSharedCount>() << gamma_EW, gamma_IW, gamma_floor, gamma_ceil, gamma_absorp,
      gamma_winSolAbs, U_win;
  flat.tail(c_ig.size()) = c_ig;
  return flat;
}

ParameterVector ParameterVector::from_vector(const Eigen::VectorXd& flat) {
  if (flat.size() < static_cast<Eigen::Index>(kSharedCount)) {
    throw Error(ErrorCode::kDimension, "parameter vector too short");
  }
  ParameterVector p;
  p.gamma_EW = flat[0];
  p.gamma_IW = flat[1];
  p.gamma_floor = flat[2];
  p.gamma_ceil = flat[3];
  p.gamma_absorp = flat[4];
  p.gamma_winSolAbs = flat[5];
  p.U_win = flat[6];
  p.c_ig = flat.tail(flat.size() - kSharedCount);
  return p;
}

void ParameterVector::validate() const {
  const Eigen::VectorXd flat = to_vector();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    if (!(flat[i] > 0.0) || !std::isfinite(flat[i])) {
      throw Error(ErrorCode::kInvalid,
                  "parameter entry " + std::to_string(i) + " must be finite and positive");
    }
  }
  if (gamma_absorp > 1.0 || gamma_winSolAbs > 1.0) {
    throw Error(ErrorCode::kInvalid, "absorption coefficients must lie in [0, 1]");
  }
}

std::vector<std::string> parameter_names(const BuildingDescription& desc) {
  std::vector<std::string> names{"gamma_EW",     "gamma_IW",        "gamma_floor", "gamma_ceil",
                                 "gamma_absorp", "gamma_winSolAbs", "U_win"};
  for (const auto& z : desc.zones) names.push_back("c_IG[" + z.id + "]");
  return names;
}

std::vector<std::string> parameter_units(const BuildingDescription& desc) {
  std::vector<std::string> units{"W/(m^2 K)", "W/(m^2 K)", "W/(m^2 K)", "W/(m^2 K)",
                                 "-",         "-",         "W/(m^2 K)"};
  for (std::size_t i = 0; i < desc.zones.size(); ++i) units.push_back("W/m^2");
  return units;
}

bool ParameterBounds::contains(const Eigen::VectorXd& flat) const {
  return flat.size() == lower.size() && (flat.array() >= lower.array()).all() &&
         (flat.array() <= upper.array()).all();
}

Eigen::VectorXd ParameterBounds::clamp(const Eigen::VectorXd& flat) const {
  return flat.cwiseMax(lower).cwiseMin(upper);
}

ParameterBounds default_bounds(std::size_t zone_count) {
  const auto n = static_cast<Eigen::Index>(ParameterVector::kSharedCount + zone_count);
  ParameterBounds b{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  b.lower.head<7>() << 0.5, 0.5, 0.5, 0.5, 1e-3, 1e-4, 0.02;
  b.upper.head<7>() << 100.0, 100.0, 150.0, 150.0, 1.0, 1.0, 10.0;
  b.lower.tail(n - 7).setConstant(1e-3);
  b.upper.tail(n - 7).setConstant(80.0);
  return b;
}

ParameterVector plausible_initial_guess(std::size_t zone_count) {
  ParameterVector p;
  p.gamma_EW = 15.0;
  p.gamma_IW = 20.0;
  p.gamma_floor = 30.0;
  p.gamma_ceil = 30.0;
  p.gamma_absorp = 0.5;
  p.gamma_winSolAbs = 0.1;
  p.U_win = 1.5;
  p.c_ig = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(zone_count), 5.0);
  return p;
}

ParameterVector parse_parameters(std::string_view text, const BuildingDescription& desc,
                                 std::string_view source_name) {
  using pointer = nlohmann::json::json_pointer;
  JsonDocument doc{std::string(text), std::string(source_name)};
  doc.expect_schema(kParamsSchema);
  ParameterVector p;
  p.gamma_EW = doc.positive(pointer("/gamma_EW"));
  p.gamma_IW = doc.positive(pointer("/gamma_IW"));
  p.gamma_floor = doc.positive(pointer("/gamma_floor"));
  p.gamma_ceil = doc.positive(pointer("/gamma_ceil"));
  p.gamma_absorp = doc.positive(pointer("/gamma_absorp"));
  p.gamma_winSolAbs = doc.positive(pointer("/gamma_winSolAbs"));
  p.U_win = doc.positive(pointer("/U_win"));
  doc.object(pointer("/c_IG"));
  p.c_ig.resize(static_cast<Eigen::Index>(desc.zones.size()));
  for (std::size_t i = 0; i < desc.zones.size(); ++i) {
    p.c_ig[static_cast<Eigen::Index>(i)] = doc.positive(pointer("/c_IG") / desc.zones[i].id);
  }
  if (p.gamma_absorp > 1.0) doc.fail(pointer("/gamma_absorp"), "must not exceed 1");
  if (p.gamma_winSolAbs > 1.0) doc.fail(pointer("/gamma_winSolAbs"), "must not exceed 1");
  return p;
}

ParameterVector load_parameters(const std::filesystem::path& path,
                                const BuildingDescription& desc) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open parameter file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_parameters(buffer.str(), desc, path.string());
}

std::string dump_parameters(const ParameterVector& params, const BuildingDescription& desc) {
  nlohmann::json root;
  root["schema"] = kParamsSchema;
  root["gamma_EW"] = params.gamma_EW;
  root["gamma_IW"] = params.gamma_IW;
  root["gamma_floor"] = params.gamma_floor;
  root["gamma_ceil"] = params.gamma_ceil;
  root["gamma_absorp"] = params.gamma_absorp;
  root["gamma_winSolAbs"] = params.gamma_winSolAbs;
  root["U_win"] = params.U_win;
  for (std::size_t i = 0; i < desc.zones.size(); ++i) {
    root["c_IG"][desc.zones[i].id] = params.c_ig[static_cast<Eigen::Index>(i)];
  }
  return root.dump(2);
}

}  // namespace thermident
