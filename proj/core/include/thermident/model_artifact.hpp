#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "thermident/building.hpp"
#include "thermident/discretization.hpp"
#include "thermident/rc_model.hpp"

namespace thermident {

inline constexpr std::string_view kModelSchema = "thermident-model/1";

/// Continuous and discrete matrices of a built model plus labels and
/// free-form metadata. Matrices are stored as sparse triplets.
struct ModelArtifact {
  std::vector<std::string> state_labels;
  std::vector<std::string> zone_ids;
  std::vector<std::string> box_ids;
  std::vector<std::string> parameter_names;
  Eigen::VectorXd parameters;
  Eigen::VectorXd capacitance;
  double dt = kDefaultStep;

  struct Matrices {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B_v;
    Eigen::MatrixXd B_ig;
    std::vector<Eigen::MatrixXd> B_xu;
    std::vector<Eigen::MatrixXd> B_vu;
    Eigen::MatrixXd C;
  };
  Matrices continuous;
  Matrices discrete;
  Eigen::VectorXd c_ig;
  std::map<std::string, std::string> metadata;
};

ModelArtifact make_artifact(const BuildingDescription& desc, const RCStateSpaceModel& model, const DiscreteModel& dm);

std::string artifact_to_json(const ModelArtifact& artifact);
ModelArtifact artifact_from_json(std::string_view text, std::string_view source_name = "<input>");
void save_artifact(const std::filesystem::path& path, const ModelArtifact& artifact);
ModelArtifact load_artifact(const std::filesystem::path& path);

}  // namespace thermident
