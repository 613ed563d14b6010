#include "thermident/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "thermident/csv.hpp"
#include "thermident/error.hpp"
#include "thermident/json_doc.hpp"

namespace thermident {
namespace {

using json = nlohmann::json;
using pointer = json::json_pointer;

std::string cadence_name(Cadence c) { return c == Cadence::kAnchored ? "anchored" : "sliding"; }

void check_prediction_fit(const PredictionSet& p, const TimeSeriesDataset& ds) {
  for (std::size_t i = 0; i < p.starts.size(); ++i) {
    if (p.starts[i] < 0 || p.starts[i] + p.horizon > ds.size() - 1) {
      throw Error(ErrorCode::kDimension, "prediction beyond the end of the measured data");
    }
    if (p.y[i].rows() != ds.y.rows() || p.y[i].cols() != p.horizon) {
      throw Error(ErrorCode::kDimension, "prediction block has the wrong shape");
    }
  }
}

json summary_to_json(const PredictorSummary& s, const std::vector<std::string>& zones) {
  json j;
  j["name"] = s.name;
  j["cadence"] = s.cadence;
  j["horizon"] = s.horizon;
  json rms = json::object();
  for (std::size_t z = 0; z < zones.size(); ++z) rms[zones[z]] = s.zone_rms[static_cast<Eigen::Index>(z)];
  j["zone_rms"] = rms;
  j["mean_rms"] = s.mean_rms;
  if (s.curve.horizon() > 0) {
    json curve;
    curve["mean"] = std::vector<double>(s.curve.mean_rms.data(), s.curve.mean_rms.data() + s.curve.mean_rms.size());
    json per_zone = json::object();
    for (std::size_t z = 0; z < zones.size(); ++z) {
      const Eigen::VectorXd row = s.curve.zone_rms.row(static_cast<Eigen::Index>(z));
      per_zone[zones[z]] = std::vector<double>(row.data(), row.data() + row.size());
    }
    curve["zones"] = per_zone;
    curve["samples"] = std::vector<int>(s.curve.samples.data(), s.curve.samples.data() + s.curve.samples.size());
    j["horizon_curve"] = curve;
  }
  return j;
}

PredictorSummary summary_from_json(const JsonDocument& doc, const pointer& p, const std::vector<std::string>& zones) {
  PredictorSummary s;
  doc.object(p);
  s.name = doc.has(p, "name") ? doc.string(p / "name") : p.back();
  s.cadence = doc.has(p, "cadence") ? doc.string(p / "cadence") : "anchored";
  s.horizon = doc.has(p, "horizon") ? doc.integer(p / "horizon") : 0;
  doc.object(p / "zone_rms");
  s.zone_rms.resize(static_cast<Eigen::Index>(zones.size()));
  for (std::size_t z = 0; z < zones.size(); ++z) {
    s.zone_rms[static_cast<Eigen::Index>(z)] = doc.nonnegative(p / "zone_rms" / zones[z]);
  }
  s.mean_rms = s.zone_rms.mean();
  if (doc.has(p, "horizon_curve")) {
    const pointer c = p / "horizon_curve";
    const auto& mean = doc.array(c / "mean");
    const auto h = static_cast<Eigen::Index>(mean.size());
    s.curve.mean_rms.resize(h);
    s.curve.zone_rms.resize(static_cast<Eigen::Index>(zones.size()), h);
    s.curve.samples = Eigen::VectorXi::Zero(h);
    for (Eigen::Index i = 0; i < h; ++i) s.curve.mean_rms[i] = doc.number(c / "mean" / static_cast<std::size_t>(i));
    for (std::size_t z = 0; z < zones.size(); ++z) {
      const auto& row = doc.array(c / "zones" / zones[z]);
      if (static_cast<Eigen::Index>(row.size()) != h) doc.fail(c / "zones" / zones[z], "length differs from 'mean'");
      for (Eigen::Index i = 0; i < h; ++i) {
        s.curve.zone_rms(static_cast<Eigen::Index>(z), i) = doc.number(c / "zones" / zones[z] / static_cast<std::size_t>(i));
      }
    }
    if (doc.has(c, "samples")) {
      for (Eigen::Index i = 0; i < h; ++i) {
        s.curve.samples[i] = static_cast<int>(doc.integer(c / "samples" / static_cast<std::size_t>(i)));
      }
    }
  }
  return s;
}

}  // namespace

Eigen::VectorXd rms_by_zone(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& measured) {
  if (predicted.rows() != measured.rows() || predicted.cols() != measured.cols()) {
    throw Error(ErrorCode::kDimension, "predicted and measured series differ in shape");
  }
  Eigen::VectorXd out(predicted.rows());
  for (Eigen::Index z = 0; z < predicted.rows(); ++z) {
    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index k = 0; k < predicted.cols(); ++k) {
      const double e = predicted(z, k) - measured(z, k);
      if (std::isfinite(e)) {
        sum += e * e;
        ++count;
      }
    }
    if (count == 0) throw Error(ErrorCode::kInvalid, "no overlapping samples for RMS");
    out[z] = std::sqrt(sum / static_cast<double>(count));
  }
  return out;
}

HorizonCurve horizon_curve(const PredictionSet& p, const TimeSeriesDataset& ds) {
  check_prediction_fit(p, ds);
  if (p.starts.empty()) throw Error(ErrorCode::kInvalid, "no prediction starts to pool");
  const Eigen::Index nz = ds.y.rows();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(nz, p.horizon);
  Eigen::MatrixXi count = Eigen::MatrixXi::Zero(nz, p.horizon);
  for (std::size_t i = 0; i < p.starts.size(); ++i) {
    for (Eigen::Index h = 0; h < p.horizon; ++h) {
      const Eigen::Index k = p.starts[i] + h + 1;
      for (Eigen::Index z = 0; z < nz; ++z) {
        const double e = p.y[i](z, h) - ds.y(z, k);
        if (std::isfinite(e)) {
          sum(z, h) += e * e;
          ++count(z, h);
        }
      }
    }
  }
  if ((count.array() == 0).any()) throw Error(ErrorCode::kInvalid, "a horizon has no measured samples");
  HorizonCurve c;
  c.zone_rms = (sum.array() / count.cast<double>().array()).sqrt();
  c.mean_rms = c.zone_rms.colwise().mean().transpose();
  c.samples = count.colwise().maxCoeff().transpose();
  return c;
}

Eigen::VectorXd prediction_rms(const PredictionSet& p, const TimeSeriesDataset& ds) {
  check_prediction_fit(p, ds);
  const Eigen::Index nz = ds.y.rows();
  const Eigen::Index h = p.horizon;
  Eigen::MatrixXd pred(nz, static_cast<Eigen::Index>(p.starts.size()) * h);
  Eigen::MatrixXd meas(nz, pred.cols());
  for (std::size_t i = 0; i < p.starts.size(); ++i) {
    const auto at = static_cast<Eigen::Index>(i) * h;
    pred.middleCols(at, h) = p.y[i];
    meas.middleCols(at, h) = ds.y.middleCols(p.starts[i] + 1, h);
  }
  return rms_by_zone(pred, meas);
}

PredictorSummary summarize(std::string name, const PredictionSet& p, const TimeSeriesDataset& ds, Cadence cadence,
                           bool with_curve) {
  PredictorSummary s;
  s.name = std::move(name);
  s.cadence = cadence_name(cadence);
  s.horizon = p.horizon;
  s.zone_rms = prediction_rms(p, ds);
  s.mean_rms = s.zone_rms.mean();
  if (with_curve) s.curve = horizon_curve(p, ds);
  return s;
}

EvaluationReport compare_predictors(const PredictorSummary& fixed, const PredictorSummary& online,
                                    std::vector<std::string> zone_ids) {
  if (fixed.zone_rms.size() != online.zone_rms.size() ||
      fixed.zone_rms.size() != static_cast<Eigen::Index>(zone_ids.size())) {
    throw Error(ErrorCode::kInvalid, "predictors were evaluated on different zones");
  }
  if (fixed.cadence != online.cadence || fixed.horizon != online.horizon) {
    throw Error(ErrorCode::kInvalid, "predictors were evaluated with different cadence or horizon (" +
                                         fixed.cadence + "/" + std::to_string(fixed.horizon) + " vs " +
                                         online.cadence + "/" + std::to_string(online.horizon) + ")");
  }
  EvaluationReport r;
  r.zone_ids = std::move(zone_ids);
  r.fixed = fixed;
  r.online = online;
  r.fixed.mean_rms = fixed.zone_rms.mean();
  r.online.mean_rms = online.zone_rms.mean();
  r.zone_improvement.resize(fixed.zone_rms.size());
  for (Eigen::Index z = 0; z < fixed.zone_rms.size(); ++z) {
    r.zone_improvement[z] = fixed.zone_rms[z] > 0.0 ? (fixed.zone_rms[z] - online.zone_rms[z]) / fixed.zone_rms[z] : 0.0;
  }
  r.mean_improvement = r.fixed.mean_rms > 0.0 ? (r.fixed.mean_rms - r.online.mean_rms) / r.fixed.mean_rms : 0.0;
  return r;
}

std::string report_to_json(const EvaluationReport& r) {
  json j;
  j["schema"] = kReportSchema;
  j["zones"] = r.zone_ids;
  j["predictors"]["fixed"] = summary_to_json(r.fixed, r.zone_ids);
  j["predictors"]["online"] = summary_to_json(r.online, r.zone_ids);
  json imp = json::object();
  for (std::size_t z = 0; z < r.zone_ids.size(); ++z) imp[r.zone_ids[z]] = r.zone_improvement[static_cast<Eigen::Index>(z)];
  j["improvement"]["zones"] = imp;
  j["improvement"]["mean"] = r.mean_improvement;
  j["improvement"]["mean_percent"] = 100.0 * r.mean_improvement;
  j["metadata"] = r.metadata;
  return j.dump(2) + "\n";
}

EvaluationReport report_from_json(std::string_view text, std::string_view source_name) {
  const JsonDocument doc{std::string(text), std::string(source_name)};
  doc.expect_schema(kReportSchema);
  const auto zones = doc.strings(pointer("/zones"));
  if (zones.empty()) doc.fail(pointer("/zones"), "expected at least one zone");
  doc.object(pointer("/predictors"));
  const PredictorSummary fixed = summary_from_json(doc, pointer("/predictors/fixed"), zones);
  const PredictorSummary online = summary_from_json(doc, pointer("/predictors/online"), zones);
  EvaluationReport r = compare_predictors(fixed, online, zones);
  if (doc.has(pointer(""), "metadata")) {
    for (const auto& [k, v] : doc.object(pointer("/metadata")).items()) {
      r.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  return r;
}

EvaluationReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open report " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return report_from_json(buf.str(), path.string());
}

void save_report_csvs(const std::filesystem::path& dir, const EvaluationReport& r) {
  CsvTable zones;
  zones.header = {"zone", "fixed", "online", "improvement"};
  for (std::size_t z = 0; z < r.zone_ids.size(); ++z) {
    const auto i = static_cast<Eigen::Index>(z);
    zones.rows.push_back({r.zone_ids[z], format_double(r.fixed.zone_rms[i]), format_double(r.online.zone_rms[i]),
                          format_double(r.zone_improvement[i])});
  }
  zones.rows.push_back({"mean", format_double(r.fixed.mean_rms), format_double(r.online.mean_rms),
                        format_double(r.mean_improvement)});
  write_csv(dir / "zone_rms.csv", zones);

  const Eigen::Index h = std::min(r.fixed.curve.horizon(), r.online.curve.horizon());
  if (h == 0) return;
  CsvTable curve;
  curve.header = {"horizon"};
  for (const auto* s : {&r.fixed, &r.online}) {
    for (const auto& z : r.zone_ids) curve.header.push_back(z + "_" + s->name);
    curve.header.push_back("mean_" + s->name);
  }
  for (Eigen::Index i = 0; i < h; ++i) {
    std::vector<std::string> row{std::to_string(i + 1)};
    for (const auto* s : {&r.fixed, &r.online}) {
      for (Eigen::Index z = 0; z < s->curve.zone_rms.rows(); ++z) row.push_back(format_double(s->curve.zone_rms(z, i)));
      row.push_back(format_double(s->curve.mean_rms[i]));
    }
    curve.rows.push_back(std::move(row));
  }
  write_csv(dir / "horizon_curve.csv", curve);
}

void save_predictions_csv(const std::filesystem::path& path, const PredictionSet& p, const TimeSeriesDataset& ds) {
  check_prediction_fit(p, ds);
  CsvTable t;
  t.header = {"start", "time", "horizon"};
  for (const auto& z : ds.zone_ids) t.header.push_back(z);
  for (std::size_t i = 0; i < p.starts.size(); ++i) {
    const std::string start = format_iso8601(ds.timestamps[static_cast<std::size_t>(p.starts[i])]);
    for (Eigen::Index h = 0; h < p.horizon; ++h) {
      std::vector<std::string> row{start, format_iso8601(ds.timestamps[static_cast<std::size_t>(p.starts[i] + h + 1)]),
                                   std::to_string(h + 1)};
      for (Eigen::Index z = 0; z < p.y[i].rows(); ++z) row.push_back(format_double(p.y[i](z, h)));
      t.rows.push_back(std::move(row));
    }
  }
  write_csv(path, t);
}

PredictionSet load_predictions_csv(const std::filesystem::path& path, const TimeSeriesDataset& ds) {
  const CsvTable t = read_csv(path);
  const std::size_t c_start = t.column("start");
  const std::size_t c_h = t.column("horizon");
  std::vector<std::size_t> c_zone;
  for (const auto& z : ds.zone_ids) c_zone.push_back(t.column(z));
  if (ds.size() < 2) throw Error(ErrorCode::kInvalid, "dataset too short for predictions");
  const Timestamp t0 = ds.timestamps.front();
  const auto step = static_cast<Timestamp>(ds.step());
  PredictionSet p;
  for (const auto& row : t.rows) {
    const Timestamp ts = parse_iso8601(row[c_start]);
    const Eigen::Index s = (ts - t0) / step;
    if ((ts - t0) % step != 0 || s < 0 || s >= ds.size()) {
      throw Error(ErrorCode::kInvalid, path.string() + ": start " + row[c_start] + " is not on the dataset grid");
    }
    const Eigen::Index h = static_cast<Eigen::Index>(parse_field(row[c_h]));
    if (p.starts.empty() || p.starts.back() != s) {
      p.starts.push_back(s);
      p.y.emplace_back(static_cast<Eigen::Index>(c_zone.size()), 0);
    }
    Eigen::MatrixXd& block = p.y.back();
    if (h != block.cols() + 1) throw Error(ErrorCode::kInvalid, path.string() + ": horizons must run 1, 2, ... per start");
    block.conservativeResize(Eigen::NoChange, h);
    for (std::size_t z = 0; z < c_zone.size(); ++z) block(static_cast<Eigen::Index>(z), h - 1) = parse_field(row[c_zone[z]]);
  }
  if (p.y.empty()) throw Error(ErrorCode::kInvalid, path.string() + ": no predictions");
  p.horizon = p.y.front().cols();
  for (const auto& b : p.y) {
    if (b.cols() != p.horizon) throw Error(ErrorCode::kInvalid, path.string() + ": starts have different horizons");
  }
  check_prediction_fit(p, ds);
  return p;
}

double spearman_rho(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) throw Error(ErrorCode::kInvalid, "Spearman needs two equal series of length >= 2");
  auto ranks = [](const Eigen::VectorXd& v) {
    const auto n = static_cast<std::size_t>(v.size());
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&v](std::size_t i, std::size_t j) {
      return v[static_cast<Eigen::Index>(i)] < v[static_cast<Eigen::Index>(j)];
    });
    Eigen::VectorXd r(v.size());
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[static_cast<Eigen::Index>(idx[j + 1])] == v[static_cast<Eigen::Index>(idx[i])]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[static_cast<Eigen::Index>(idx[k])] = avg;
      i = j + 1;
    }
    return r;
  };
  const Eigen::VectorXd ra = ranks(a);
  const Eigen::VectorXd rb = ranks(b);
  const Eigen::VectorXd da = ra.array() - ra.mean();
  const Eigen::VectorXd db = rb.array() - rb.mean();
  const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
  return denom > 0.0 ? da.dot(db) / denom : 0.0;
}

double sign_test_p_value(const Eigen::VectorXd& d) {
  int n = 0;
  int pos = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] == 0.0 || !std::isfinite(d[i])) continue;
    ++n;
    if (d[i] > 0.0) ++pos;
  }
  if (n == 0) return 1.0;
  double p = 0.0;
  for (int k = pos; k <= n; ++k) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  }
  return std::min(1.0, p);
}

}  // namespace thermident
