#include "thermident/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "thermident/csv.hpp"
#include "thermident/error.hpp"

namespace thermident {
namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

// Inverse of days_from_civil (H. Hinnant's algorithm).
void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<int>(yoe + era * 400) + (m <= 2 ? 1 : 0);
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int parse_int(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  if (pos + len > text.size()) throw Error(ErrorCode::kIo, "truncated timestamp");
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
  if (ec != std::errc() || ptr != text.data() + pos + len) {
    throw Error(ErrorCode::kIo, "bad timestamp '" + std::string(text) + "'");
  }
  return value;
}

bool column_missing(const Eigen::MatrixXd& m, Eigen::Index k) {
  return m.rows() > 0 && !m.col(k).allFinite();
}

}  // namespace

std::int64_t days_from_civil(int year, unsigned month, unsigned day) {
  const int y = year - (month <= 2 ? 1 : 0);
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (month > 2 ? month - 3 : month + 9) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::string format_iso8601(Timestamp t) {
  const std::int64_t days = floor_div(t, kSecondsPerDay);
  const std::int64_t secs = t - days * kSecondsPerDay;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60),
                static_cast<int>(secs % 60));
  return buf;
}

Timestamp parse_iso8601(std::string_view text) {
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  if (text.size() != 19 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':' || text[16] != ':') {
    throw Error(ErrorCode::kIo, "bad timestamp '" + std::string(text) + "'");
  }
  const int y = parse_int(text, 0, 4);
  const int mo = parse_int(text, 5, 2);
  const int d = parse_int(text, 8, 2);
  const int h = parse_int(text, 11, 2);
  const int mi = parse_int(text, 14, 2);
  const int s = parse_int(text, 17, 2);
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) {
    throw Error(ErrorCode::kIo, "timestamp out of range '" + std::string(text) + "'");
  }
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * kSecondsPerDay +
         h * 3600 + mi * 60 + s;
}

int weekday(Timestamp t) {
  const std::int64_t days = floor_div(t, kSecondsPerDay);
  // 1970-01-01 was a Thursday.
  return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

double hour_of_day(Timestamp t) {
  const std::int64_t days = floor_div(t, kSecondsPerDay);
  return static_cast<double>(t - days * kSecondsPerDay) / 3600.0;
}

int time_of_week_slot(Timestamp t, double dt) {
  const double since_monday = weekday(t) * 86400.0 + hour_of_day(t) * 3600.0;
  const int slots = static_cast<int>(std::llround(7 * 86400.0 / dt));
  const int slot = static_cast<int>(std::floor(since_monday / dt + 1e-9));
  return slot % slots;
}

double TimeSeriesDataset::step() const {
  if (timestamps.size() < 2) return 900.0;
  return static_cast<double>(timestamps[1] - timestamps[0]);
}

TimeSeriesDataset TimeSeriesDataset::slice(Eigen::Index begin, Eigen::Index end) const {
  if (begin < 0 || end > size() || begin > end) {
    throw Error(ErrorCode::kDimension, "slice [" + std::to_string(begin) + ", " +
                                           std::to_string(end) + ") outside dataset of length " +
                                           std::to_string(size()));
  }
  const Eigen::Index n = end - begin;
  TimeSeriesDataset out;
  out.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + end);
  out.zone_ids = zone_ids;
  out.box_ids = box_ids;
  out.state_labels = state_labels;
  out.y = y.middleCols(begin, n);
  out.u = u.middleCols(begin, n);
  out.v = v.middleCols(begin, n);
  if (true_x) out.true_x = true_x->middleCols(begin, n);
  if (true_f_ig) out.true_f_ig = true_f_ig->middleCols(begin, n);
  return out;
}

bool TimeSeriesDataset::missing(Eigen::Index k) const {
  return column_missing(y, k) || column_missing(u, k) || column_missing(v, k);
}

void TimeSeriesDataset::validate(const ModelLayout* layout) const {
  const Eigen::Index n = size();
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalid, "dataset: " + msg); };
  if (y.cols() != n || u.cols() != n || v.cols() != n) fail("sequences differ in length");
  if (y.rows() != static_cast<Eigen::Index>(zone_ids.size())) fail("output rows != zone ids");
  if (u.rows() != static_cast<Eigen::Index>(box_ids.size())) fail("input rows != box ids");
  if (v.rows() != kDisturbanceCount) fail("disturbance must have 6 channels");
  if (true_x && true_x->cols() != n) fail("ground-truth states differ in length");
  if (true_f_ig && true_f_ig->cols() != n) fail("ground-truth gains differ in length");
  for (Eigen::Index k = 1; k < n; ++k) {
    if (timestamps[static_cast<std::size_t>(k)] - timestamps[static_cast<std::size_t>(k - 1)] !=
        timestamps[1] - timestamps[0]) {
      fail("non-uniform grid at " + format_iso8601(timestamps[static_cast<std::size_t>(k)]));
    }
  }
  if (n >= 2 && timestamps[1] <= timestamps[0]) fail("timestamps must increase");
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index c = kSolE; c <= kSolN; ++c) {
      if (v(c, k) < 0.0) fail("negative irradiance at sample " + std::to_string(k));
    }
  }
  if (!layout) return;
  if (y.rows() != layout->zone_count()) fail("zone count differs from model");
  if (u.rows() != layout->box_count()) fail("box count differs from model");
  constexpr double kTol = 1e-9;
  for (Eigen::Index j = 0; j < u.rows(); ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double q = u(j, k);
      if (std::isnan(q)) continue;
      if (q < layout->box_min_flow[j] - kTol || q > layout->box_max_flow[j] + kTol) {
        fail("airflow of box " + box_ids[static_cast<std::size_t>(j)] + " outside limits at " +
             format_iso8601(timestamps[static_cast<std::size_t>(k)]));
      }
    }
  }
}

TimeSeriesDataset hold_missing_inputs(const TimeSeriesDataset& ds) {
  TimeSeriesDataset out = ds;
  auto hold = [](Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      double last = std::numeric_limits<double>::quiet_NaN();
      for (Eigen::Index k = 0; k < m.cols(); ++k) {
        if (std::isfinite(m(r, k))) {
          last = m(r, k);
        } else if (std::isfinite(last)) {
          m(r, k) = last;
        }
      }
      // Leading gap: back-fill from the first valid sample.
      Eigen::Index first = 0;
      while (first < m.cols() && !std::isfinite(m(r, first))) ++first;
      if (first < m.cols()) {
        for (Eigen::Index k = 0; k < first; ++k) m(r, k) = m(r, first);
      }
    }
  };
  hold(out.u);
  hold(out.v);
  return out;
}

TimeSeriesDataset concatenate(const std::vector<TimeSeriesDataset>& parts) {
  if (parts.empty()) return {};
  TimeSeriesDataset out;
  const auto& first = parts.front();
  out.zone_ids = first.zone_ids;
  out.box_ids = first.box_ids;
  out.state_labels = first.state_labels;
  Eigen::Index total = 0;
  bool truth_x = true;
  bool truth_f = true;
  for (const auto& p : parts) {
    if (p.zone_ids != first.zone_ids || p.box_ids != first.box_ids) {
      throw Error(ErrorCode::kInvalid, "cannot concatenate datasets with different channels");
    }
    if (!out.timestamps.empty() && !p.timestamps.empty() && p.timestamps.front() <= out.timestamps.back()) {
      throw Error(ErrorCode::kInvalid, "concatenated datasets overlap in time");
    }
    out.timestamps.insert(out.timestamps.end(), p.timestamps.begin(), p.timestamps.end());
    total += p.size();
    truth_x = truth_x && p.true_x.has_value();
    truth_f = truth_f && p.true_f_ig.has_value();
  }
  out.y.resize(first.y.rows(), total);
  out.u.resize(first.u.rows(), total);
  out.v.resize(kDisturbanceCount, total);
  if (truth_x) out.true_x = Eigen::MatrixXd(first.true_x->rows(), total);
  if (truth_f) out.true_f_ig = Eigen::MatrixXd(first.true_f_ig->rows(), total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    const Eigen::Index n = p.size();
    out.y.middleCols(at, n) = p.y;
    out.u.middleCols(at, n) = p.u;
    out.v.middleCols(at, n) = p.v;
    if (truth_x) out.true_x->middleCols(at, n) = *p.true_x;
    if (truth_f) out.true_f_ig->middleCols(at, n) = *p.true_f_ig;
    at += n;
  }
  return out;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error(ErrorCode::kIo, "cannot format number");
  return std::string(buf, ptr);
}

std::filesystem::path truth_path_for(const std::filesystem::path& path) {
  auto out = path;
  out.replace_filename(path.stem().string() + ".truth.csv");
  return out;
}

void save_dataset_csv(const std::filesystem::path& path, const TimeSeriesDataset& ds) {
  CsvTable table;
  table.header.push_back("timestamp");
  for (const auto& z : ds.zone_ids) table.header.push_back("y_" + z);
  for (const auto& b : ds.box_ids) table.header.push_back("u_" + b);
  for (auto name : disturbance_names()) table.header.push_back("v_" + std::string(name));
  table.rows.reserve(ds.timestamps.size());
  for (Eigen::Index k = 0; k < ds.size(); ++k) {
    std::vector<std::string> row;
    row.reserve(table.header.size());
    row.push_back(format_iso8601(ds.timestamps[static_cast<std::size_t>(k)]));
    for (Eigen::Index r = 0; r < ds.y.rows(); ++r) row.push_back(format_double(ds.y(r, k)));
    for (Eigen::Index r = 0; r < ds.u.rows(); ++r) row.push_back(format_double(ds.u(r, k)));
    for (Eigen::Index r = 0; r < ds.v.rows(); ++r) row.push_back(format_double(ds.v(r, k)));
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);

  const auto truth = truth_path_for(path);
  if (!ds.true_x && !ds.true_f_ig) {
    std::error_code ec;
    std::filesystem::remove(truth, ec);
    return;
  }
  CsvTable t;
  t.header.push_back("timestamp");
  if (ds.true_x) {
    for (const auto& s : ds.state_labels) t.header.push_back("x_" + s);
  }
  if (ds.true_f_ig) {
    for (const auto& z : ds.zone_ids) t.header.push_back("f_" + z);
  }
  for (Eigen::Index k = 0; k < ds.size(); ++k) {
    std::vector<std::string> row;
    row.push_back(format_iso8601(ds.timestamps[static_cast<std::size_t>(k)]));
    if (ds.true_x) {
      for (Eigen::Index r = 0; r < ds.true_x->rows(); ++r) row.push_back(format_double((*ds.true_x)(r, k)));
    }
    if (ds.true_f_ig) {
      for (Eigen::Index r = 0; r < ds.true_f_ig->rows(); ++r) {
        row.push_back(format_double((*ds.true_f_ig)(r, k)));
      }
    }
    t.rows.push_back(std::move(row));
  }
  write_csv(truth, t);
}

TimeSeriesDataset load_dataset_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header[0] != "timestamp") {
    throw Error(ErrorCode::kIo, path.string() + ": first column must be 'timestamp'");
  }
  TimeSeriesDataset ds;
  std::vector<std::size_t> y_cols;
  std::vector<std::size_t> u_cols;
  for (std::size_t c = 1; c < table.header.size(); ++c) {
    const auto& h = table.header[c];
    if (h.rfind("y_", 0) == 0) {
      ds.zone_ids.push_back(h.substr(2));
      y_cols.push_back(c);
    } else if (h.rfind("u_", 0) == 0) {
      ds.box_ids.push_back(h.substr(2));
      u_cols.push_back(c);
    }
  }
  std::vector<std::size_t> v_cols;
  for (auto name : disturbance_names()) v_cols.push_back(table.column("v_" + std::string(name)));

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  ds.y.resize(static_cast<Eigen::Index>(y_cols.size()), n);
  ds.u.resize(static_cast<Eigen::Index>(u_cols.size()), n);
  ds.v.resize(kDisturbanceCount, n);
  ds.timestamps.reserve(table.rows.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& row = table.rows[static_cast<std::size_t>(k)];
    ds.timestamps.push_back(parse_iso8601(row[0]));
    for (std::size_t i = 0; i < y_cols.size(); ++i) ds.y(static_cast<Eigen::Index>(i), k) = parse_field(row[y_cols[i]]);
    for (std::size_t i = 0; i < u_cols.size(); ++i) ds.u(static_cast<Eigen::Index>(i), k) = parse_field(row[u_cols[i]]);
    for (std::size_t i = 0; i < v_cols.size(); ++i) ds.v(static_cast<Eigen::Index>(i), k) = parse_field(row[v_cols[i]]);
  }

  const auto truth = truth_path_for(path);
  if (std::filesystem::exists(truth)) {
    const CsvTable t = read_csv(truth);
    if (t.rows.size() != table.rows.size()) {
      throw Error(ErrorCode::kIo, truth.string() + ": row count differs from " + path.string());
    }
    std::vector<std::size_t> x_cols;
    std::vector<std::size_t> f_cols;
    for (std::size_t c = 1; c < t.header.size(); ++c) {
      if (t.header[c].rfind("x_", 0) == 0) {
        ds.state_labels.push_back(t.header[c].substr(2));
        x_cols.push_back(c);
      } else if (t.header[c].rfind("f_", 0) == 0) {
        f_cols.push_back(c);
      }
    }
    if (!x_cols.empty()) ds.true_x = Eigen::MatrixXd(static_cast<Eigen::Index>(x_cols.size()), n);
    if (!f_cols.empty()) ds.true_f_ig = Eigen::MatrixXd(static_cast<Eigen::Index>(f_cols.size()), n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto& row = t.rows[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < x_cols.size(); ++i) (*ds.true_x)(static_cast<Eigen::Index>(i), k) = parse_field(row[x_cols[i]]);
      for (std::size_t i = 0; i < f_cols.size(); ++i) (*ds.true_f_ig)(static_cast<Eigen::Index>(i), k) = parse_field(row[f_cols[i]]);
    }
  }
  ds.validate();
  return ds;
}

}  // namespace thermident
