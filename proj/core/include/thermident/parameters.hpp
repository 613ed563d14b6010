#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "thermident/building.hpp"

namespace thermident {

inline constexpr std::string_view kParamsSchema = "thermident-params/1";

/// The tunable physical parameters: seven building-wide coefficients plus a
/// background internal-gain density per zone (ordered like the building's
/// zones).
struct ParameterVector {
  double gamma_EW = 0.0;         // exterior wall convection, W/(m^2 K)
  double gamma_IW = 0.0;         // interior wall convection, W/(m^2 K)
  double gamma_floor = 0.0;      // floor convection, W/(m^2 K)
  double gamma_ceil = 0.0;       // ceiling convection, W/(m^2 K)
  double gamma_absorp = 0.0;     // exterior wall solar absorption, [0, 1]
  double gamma_winSolAbs = 0.0;  // window solar absorption, [0, 1]
  double U_win = 0.0;            // window transmission, W/(m^2 K)
  Eigen::VectorXd c_ig;          // background gains per zone, W/m^2

  static constexpr std::size_t kSharedCount = 7;

  std::size_t size() const { return kSharedCount + static_cast<std::size_t>(c_ig.size()); }

  /// Flat layout: the seven shared coefficients, then c_ig.
  Eigen::VectorXd to_vector() const;
  static ParameterVector from_vector(const Eigen::VectorXd& flat);

  /// Throws Error(kInvalid) unless every entry is positive and both
  /// absorption coefficients lie in [0, 1].
  void validate() const;
};

/// Names ("gamma_EW", ..., "c_IG[NW]") and units of the flat layout.
std::vector<std::string> parameter_names(const BuildingDescription& desc);
std::vector<std::string> parameter_units(const BuildingDescription& desc);

/// Box constraints on the flat layout.
struct ParameterBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  bool contains(const Eigen::VectorXd& flat) const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& flat) const;
};

/// Physically motivated default bounds (all strictly positive, absorption
/// coefficients capped at 1).
ParameterBounds default_bounds(std::size_t zone_count);

/// A physically plausible starting guess for identification.
ParameterVector plausible_initial_guess(std::size_t zone_count);

ParameterVector parse_parameters(std::string_view text, const BuildingDescription& desc,
                                 std::string_view source_name = "<input>");
ParameterVector load_parameters(const std::filesystem::path& path,
                                const BuildingDescription& desc);
std::string dump_parameters(const ParameterVector& params, const BuildingDescription& desc);

}  // namespace thermident
