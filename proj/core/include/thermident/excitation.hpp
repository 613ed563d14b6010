#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "thermident/building.hpp"
#include "thermident/dataset.hpp"

namespace thermident {

struct ExcitationBlock {
  int day = 0;
  std::string zone;  // zone held at maximum flow
  Timestamp begin = 0;
  Timestamp end = 0;  // exclusive
};

/// Airflow setpoints for the forced-response experiment: from start_hour
/// each day, every block_hours one zone goes to maximum flow, its
/// neighbors to minimum and all other boxes to a flow drawn uniformly from
/// their range and held for the block. Outside the blocks every box sits
/// at minimum flow.
struct ExcitationSchedule {
  std::vector<Timestamp> timestamps;
  std::vector<std::string> box_ids;
  Eigen::MatrixXd u;  // boxes x N, kg/s
  std::vector<ExcitationBlock> blocks;
  std::vector<std::vector<std::string>> zone_order;  // per day
  std::uint64_t seed = 0;
  int start_hour = 8;
  int block_hours = 2;
};

struct ExcitationOptions {
  Timestamp start = 0;  // midnight of the first day
  double dt = 900.0;
  int start_hour = 8;
  int block_hours = 2;
  bool shuffle_zones = true;  // random zone order per day, else declaration order
};

ExcitationSchedule generate_excitation(const BuildingDescription& desc, std::uint64_t seed, int days,
                                       const ExcitationOptions& options = {});

/// Block active at `t`, or nullptr.
const ExcitationBlock* block_at(const ExcitationSchedule& schedule, Timestamp t);

/// CSV: timestamp, zone at maximum ("" outside blocks), u_<box>...
void save_schedule_csv(const std::filesystem::path& path, const ExcitationSchedule& schedule);
ExcitationSchedule load_schedule_csv(const std::filesystem::path& path);

}  // namespace thermident
