#include "thermident/excitation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "thermident/csv.hpp"
#include "thermident/error.hpp"

namespace thermident {

ExcitationSchedule generate_excitation(const BuildingDescription& desc, std::uint64_t seed, int days,
                                       const ExcitationOptions& options) {
  validate(desc);
  if (days < 0) throw Error(ErrorCode::kInvalid, "days must be nonnegative");
  if (!(options.dt > 0.0)) throw Error(ErrorCode::kInvalid, "time step must be positive");
  const auto zone_count = static_cast<int>(desc.zones.size());
  if (options.start_hour < 0 || options.block_hours <= 0 ||
      options.start_hour + zone_count * options.block_hours > 24) {
    throw Error(ErrorCode::kInvalid, "excitation blocks do not fit into one day");
  }

  std::mt19937_64 rng(seed);
  ExcitationSchedule s;
  s.seed = seed;
  s.start_hour = options.start_hour;
  s.block_hours = options.block_hours;
  const auto dt = static_cast<Timestamp>(std::llround(options.dt));
  const Eigen::Index steps_per_day = 86400 / dt;
  const Eigen::Index n = steps_per_day * days;
  const auto m = static_cast<Eigen::Index>(desc.vav_boxes.size());

  Eigen::VectorXd lo(m);
  Eigen::VectorXd hi(m);
  std::vector<std::string> box_zone(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& box = desc.vav_boxes[static_cast<std::size_t>(j)];
    s.box_ids.push_back(box.id);
    lo[j] = box.min_flow;
    hi[j] = box.max_flow;
    box_zone[static_cast<std::size_t>(j)] = desc.box_zone(box);
  }

  s.timestamps.resize(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) s.timestamps[static_cast<std::size_t>(k)] = options.start + k * dt;
  s.u = lo.replicate(1, n);

  const Eigen::Index block_steps = options.block_hours * 3600 / dt;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int d = 0; d < days; ++d) {
    std::vector<std::string> order;
    for (const auto& z : desc.zones) order.push_back(z.id);
    if (options.shuffle_zones) std::shuffle(order.begin(), order.end(), rng);
    s.zone_order.push_back(order);

    for (int b = 0; b < zone_count; ++b) {
      const Zone& hot = *desc.find_zone(order[static_cast<std::size_t>(b)]);
      const Eigen::Index first =
          d * steps_per_day + (static_cast<Eigen::Index>(options.start_hour) * 3600) / dt + b * block_steps;
      Eigen::VectorXd flow(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        const std::string& z = box_zone[static_cast<std::size_t>(j)];
        if (z == hot.id) {
          flow[j] = hi[j];
        } else if (std::find(hot.adjacent.begin(), hot.adjacent.end(), z) != hot.adjacent.end()) {
          flow[j] = lo[j];
        } else {
          flow[j] = lo[j] + (hi[j] - lo[j]) * unit(rng);
        }
      }
      s.u.middleCols(first, block_steps) = flow.replicate(1, block_steps);
      s.blocks.push_back({d, hot.id, s.timestamps[static_cast<std::size_t>(first)],
                          s.timestamps[static_cast<std::size_t>(first)] + block_steps * dt});
    }
  }
  return s;
}

const ExcitationBlock* block_at(const ExcitationSchedule& schedule, Timestamp t) {
  for (const auto& b : schedule.blocks) {
    if (t >= b.begin && t < b.end) return &b;
  }
  return nullptr;
}

void save_schedule_csv(const std::filesystem::path& path, const ExcitationSchedule& schedule) {
  CsvTable t;
  t.header = {"timestamp", "max_zone"};
  for (const auto& b : schedule.box_ids) t.header.push_back("u_" + b);
  for (std::size_t k = 0; k < schedule.timestamps.size(); ++k) {
    std::vector<std::string> row{format_iso8601(schedule.timestamps[k])};
    const auto* block = block_at(schedule, schedule.timestamps[k]);
    row.push_back(block ? block->zone : "");
    for (Eigen::Index j = 0; j < schedule.u.rows(); ++j) {
      row.push_back(format_double(schedule.u(j, static_cast<Eigen::Index>(k))));
    }
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

ExcitationSchedule load_schedule_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  ExcitationSchedule s;
  const std::size_t zone_col = t.column("max_zone");
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c].rfind("u_", 0) == 0) {
      s.box_ids.push_back(t.header[c].substr(2));
      cols.push_back(c);
    }
  }
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  const std::size_t ts_col = t.column("timestamp");
  const Timestamp step =
      n >= 2 ? parse_iso8601(t.rows[1][ts_col]) - parse_iso8601(t.rows[0][ts_col]) : 900;
  s.u.resize(static_cast<Eigen::Index>(cols.size()), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& row = t.rows[static_cast<std::size_t>(k)];
    const Timestamp ts = parse_iso8601(row[ts_col]);
    s.timestamps.push_back(ts);
    for (std::size_t j = 0; j < cols.size(); ++j) s.u(static_cast<Eigen::Index>(j), k) = parse_field(row[cols[j]]);
    const std::string& zone = row[zone_col];
    if (!zone.empty()) {
      if (!s.blocks.empty() && s.blocks.back().zone == zone && s.blocks.back().end == ts) {
        s.blocks.back().end = ts + step;
      } else {
        s.blocks.push_back({static_cast<int>((ts - s.timestamps.front()) / 86400), zone, ts,
                            ts + step});
      }
    }
  }
  return s;
}

}  // namespace thermident
