#include "thermident/run_config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "thermident/error.hpp"
#include "thermident/json_doc.hpp"

namespace thermident {
namespace {

using json = nlohmann::json;
using pointer = json::json_pointer;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::filesystem::path existing(const JsonDocument& doc, const pointer& where, const std::filesystem::path& base) {
  auto path = resolve(base, doc.string(where));
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kConfig, doc.source() + ": " + where.to_string() + ": path does not exist: " + path.string());
  }
  return path;
}

std::vector<std::filesystem::path> existing_list(const JsonDocument& doc, const pointer& where,
                                                 const std::filesystem::path& base) {
  std::vector<std::filesystem::path> out;
  const auto& arr = doc.array(where);
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(existing(doc, where / i, base));
  return out;
}

Timestamp timestamp(const JsonDocument& doc, const pointer& where) {
  try {
    return parse_iso8601(doc.string(where));
  } catch (const Error& e) {
    doc.fail(where, e.what());
  }
}

std::uint64_t seed(const JsonDocument& doc, const pointer& where) {
  const auto v = doc.integer(where);
  if (v < 0) doc.fail(where, "seed must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

int count(const JsonDocument& doc, const pointer& where, int minimum) {
  const auto v = doc.integer(where);
  if (v < minimum) doc.fail(where, "must be at least " + std::to_string(minimum));
  return static_cast<int>(v);
}

// Either one number for every zone or an object keyed by zone id.
void per_zone(const JsonDocument& doc, const pointer& where, double& scalar, std::map<std::string, double>& zones) {
  if (doc.at(where).is_number()) {
    scalar = doc.nonnegative(where);
    return;
  }
  for (const auto& [key, value] : doc.object(where).items()) zones[key] = doc.nonnegative(where / key);
}

void apply_overrides(json& root, const std::vector<std::pair<std::string, std::string>>& overrides) {
  for (const auto& [where, text] : overrides) {
    pointer ptr;
    try {
      ptr = pointer(where);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kConfig, "bad override key '" + where + "': " + e.what());
    }
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    root[ptr] = value;
  }
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

IdentificationOptions RunConfig::identification_options() const {
  IdentificationOptions o;
  o.method = method;
  o.noise = noise;
  o.warmup_steps = warmup_steps;
  o.dt = dt;
  o.max_iterations = max_iterations;
  o.starts = starts;
  o.start_spread = start_spread;
  o.seed = optimizer_seed;
  return o;
}

GainsEstimationOptions RunConfig::gains_options() const {
  GainsEstimationOptions o;
  o.noise = noise;
  o.warmup_steps = warmup_steps;
  return o;
}

PredictionOptions RunConfig::prediction_options() const {
  PredictionOptions o;
  o.horizon = horizon;
  o.cadence = cadence;
  o.noise = noise;
  o.warmup_steps = warmup_steps;
  return o;
}

ParameterBounds RunConfig::bounds(const BuildingDescription& desc) const {
  ParameterBounds b = default_bounds(desc.zones.size());
  const auto names = parameter_names(desc);
  for (const auto& [name, range] : bound_overrides) {
    bool found = false;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) {
        b.lower[static_cast<Eigen::Index>(i)] = range.first;
        b.upper[static_cast<Eigen::Index>(i)] = range.second;
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::kConfig, "bounds given for unknown parameter '" + name + "'");
  }
  return b;
}

SynthesisOptions RunConfig::operation_synthesis(const BuildingDescription& desc) const {
  SynthesisOptions o;
  o.start = operation.start;
  o.days = 7 * operation.weeks;
  o.dt = dt;
  o.weather = operation.weather;
  o.controller = operation.controller;
  o.measurement_noise_sd = operation.measurement_noise_sd;
  o.process_noise_sd = operation.process_noise_sd;
  o.burn_in_days = operation.burn_in_days;
  o.seed = synthesis_seed;
  o.gains = operation.gains;
  const auto nz = static_cast<Eigen::Index>(desc.zones.size());
  o.gains.peak = Eigen::VectorXd::Constant(nz, operation.default_peak);
  o.gains.daily_sd = Eigen::VectorXd::Constant(nz, operation.default_daily_sd);
  auto fill = [&desc](const std::map<std::string, double>& values, Eigen::VectorXd& out, const char* what) {
    for (const auto& [zone, value] : values) {
      Eigen::Index z = -1;
      for (std::size_t i = 0; i < desc.zones.size(); ++i) {
        if (desc.zones[i].id == zone) z = static_cast<Eigen::Index>(i);
      }
      if (z < 0) throw Error(ErrorCode::kConfig, std::string("gains ") + what + " given for unknown zone '" + zone + "'");
      out[z] = value;
    }
  };
  fill(operation.zone_peak, o.gains.peak, "peak");
  fill(operation.zone_daily_sd, o.gains.daily_sd, "daily_sd");
  return o;
}

SynthesisOptions RunConfig::weekend_synthesis(int w) const {
  SynthesisOptions o;
  o.start = excitation.first_day + (7LL * w - excitation.lead_days) * 86400;
  o.days = excitation.lead_days + excitation.days;
  o.dt = dt;
  o.weather = operation.weather;
  o.gains.enabled = false;
  o.gains.peak.resize(0);
  o.measurement_noise_sd = excitation.measurement_noise_sd;
  o.seed = synthesis_seed + 1000 + static_cast<std::uint64_t>(w);
  return o;
}

ExcitationOptions RunConfig::weekend_excitation(int w) const {
  ExcitationOptions o;
  o.start = excitation.first_day + 7LL * w * 86400;
  o.dt = dt;
  o.start_hour = excitation.start_hour;
  o.block_hours = excitation.block_hours;
  return o;
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir,
                           const std::vector<std::pair<std::string, std::string>>& overrides,
                           std::string_view source_name) {
  std::string body(text);
  if (!overrides.empty()) {
    json root = json::parse(body, nullptr, false);
    if (root.is_discarded()) {
      JsonDocument probe{body, std::string(source_name)};  // throws with the line
    }
    apply_overrides(root, overrides);
    body = root.dump(2);
  }
  const JsonDocument doc{body, std::string(source_name)};
  doc.expect_schema(kRunSchema);
  const pointer root("");

  RunConfig c;
  c.source = std::filesystem::path(source_name);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(doc.root().dump())));
  c.hash = hex;

  const pointer paths("/paths");
  doc.object(paths);
  c.building = existing(doc, paths / "building", base_dir);
  if (doc.has(paths, "parameters")) c.parameters = existing(doc, paths / "parameters", base_dir);
  c.output_dir = resolve(base_dir, doc.string(paths / "output_dir"));
  if (doc.has(paths, "identification")) c.identification_data = existing_list(doc, paths / "identification", base_dir);
  if (doc.has(paths, "training")) c.training_data = existing_list(doc, paths / "training", base_dir);
  if (doc.has(paths, "validation")) c.validation_data = existing_list(doc, paths / "validation", base_dir);

  if (doc.has(root, "dt")) c.dt = doc.positive(pointer("/dt"));
  if (c.dt > 86400.0 || std::fmod(86400.0, c.dt) != 0.0) doc.fail(pointer("/dt"), "must divide one day");

  if (doc.has(root, "kalman")) {
    const pointer k("/kalman");
    doc.object(k);
    if (doc.has(k, "q_air")) c.noise.q_air = doc.positive(k / "q_air");
    if (doc.has(k, "q_wall")) c.noise.q_wall = doc.positive(k / "q_wall");
    if (doc.has(k, "r")) c.noise.r = doc.positive(k / "r");
    if (doc.has(k, "p0_air")) c.noise.p0_air = doc.positive(k / "p0_air");
    if (doc.has(k, "p0_wall")) c.noise.p0_wall = doc.positive(k / "p0_wall");
    if (doc.has(k, "warmup_steps")) c.warmup_steps = count(doc, k / "warmup_steps", 0);
  }

  if (doc.has(root, "optimizer")) {
    const pointer o("/optimizer");
    doc.object(o);
    if (doc.has(o, "method")) {
      const auto m = doc.string(o / "method");
      if (m == "levenberg-marquardt") {
        c.method = OptimizerMethod::kLevenbergMarquardt;
      } else if (m == "nelder-mead") {
        c.method = OptimizerMethod::kNelderMead;
      } else {
        doc.fail(o / "method", "expected 'levenberg-marquardt' or 'nelder-mead'");
      }
    }
    if (doc.has(o, "initial_guess")) c.initial_guess = existing(doc, o / "initial_guess", base_dir);
    if (doc.has(o, "bounds")) {
      for (const auto& [name, range] : doc.object(o / "bounds").items()) {
        const pointer at = o / "bounds" / name;
        if (!range.is_array() || range.size() != 2) doc.fail(at, "expected [lower, upper]");
        const double lo = doc.positive(at / 0);
        const double hi = doc.positive(at / 1);
        if (!(lo <= hi)) doc.fail(at, "lower bound exceeds upper bound");
        c.bound_overrides.push_back({name, {lo, hi}});
      }
    }
    if (doc.has(o, "max_iterations")) c.max_iterations = count(doc, o / "max_iterations", 1);
    if (doc.has(o, "starts")) c.starts = count(doc, o / "starts", 1);
    if (doc.has(o, "start_spread")) c.start_spread = doc.nonnegative(o / "start_spread");
  }

  if (doc.has(root, "seeds")) {
    const pointer s("/seeds");
    doc.object(s);
    if (doc.has(s, "excitation")) c.excitation_seed = seed(doc, s / "excitation");
    if (doc.has(s, "synthesis")) c.synthesis_seed = seed(doc, s / "synthesis");
    if (doc.has(s, "optimizer")) c.optimizer_seed = seed(doc, s / "optimizer");
  }

  if (doc.has(root, "excitation")) {
    const pointer e("/excitation");
    doc.object(e);
    c.excitation.first_day = timestamp(doc, e / "first_day");
    if (doc.has(e, "weekends")) c.excitation.weekends = count(doc, e / "weekends", 1);
    if (doc.has(e, "days")) c.excitation.days = count(doc, e / "days", 1);
    if (doc.has(e, "lead_days")) c.excitation.lead_days = count(doc, e / "lead_days", 0);
    if (doc.has(e, "start_hour")) c.excitation.start_hour = count(doc, e / "start_hour", 0);
    if (doc.has(e, "block_hours")) c.excitation.block_hours = count(doc, e / "block_hours", 1);
    if (doc.has(e, "measurement_noise_sd")) {
      c.excitation.measurement_noise_sd = doc.nonnegative(e / "measurement_noise_sd");
    }
  }

  if (doc.has(root, "operation")) {
    const pointer p("/operation");
    doc.object(p);
    OperationPlan& op = c.operation;
    op.start = timestamp(doc, p / "start");
    if (doc.has(p, "weeks")) op.weeks = count(doc, p / "weeks", 2);
    if (doc.has(p, "training_weeks")) op.training_weeks = count(doc, p / "training_weeks", 1);
    if (op.training_weeks >= op.weeks) doc.fail(p / "training_weeks", "must leave at least one validation week");
    if (doc.has(p, "burn_in_days")) op.burn_in_days = count(doc, p / "burn_in_days", 0);
    if (doc.has(p, "measurement_noise_sd")) op.measurement_noise_sd = doc.nonnegative(p / "measurement_noise_sd");
    if (doc.has(p, "process_noise_sd")) op.process_noise_sd = doc.nonnegative(p / "process_noise_sd");
    if (doc.has(p, "setpoint")) op.controller.setpoint = doc.number(p / "setpoint");
    if (doc.has(p, "gains")) {
      const pointer g = p / "gains";
      doc.object(g);
      if (doc.has(g, "enabled")) op.gains.enabled = doc.at(g / "enabled").get<bool>();
      if (doc.has(g, "peak")) per_zone(doc, g / "peak", op.default_peak, op.zone_peak);
      if (doc.has(g, "daily_sd")) per_zone(doc, g / "daily_sd", op.default_daily_sd, op.zone_daily_sd);
      if (doc.has(g, "weekend_factor")) op.gains.weekend_factor = doc.nonnegative(g / "weekend_factor");
      if (doc.has(g, "fluctuation_sd")) op.gains.fluctuation_sd = doc.nonnegative(g / "fluctuation_sd");
      if (doc.has(g, "fluctuation_ar")) op.gains.fluctuation_ar = doc.nonnegative(g / "fluctuation_ar");
      if (doc.has(g, "onset_hour")) op.gains.onset_hour = doc.nonnegative(g / "onset_hour");
      if (doc.has(g, "peak_hour")) op.gains.peak_hour = doc.positive(g / "peak_hour");
      if (!(op.gains.peak_hour > op.gains.onset_hour)) doc.fail(g / "peak_hour", "must be after onset_hour");
    }
    if (doc.has(p, "weather")) {
      const pointer w = p / "weather";
      doc.object(w);
      WeatherModel& wm = op.weather;
      if (doc.has(w, "ambient_mean")) wm.ambient_mean = doc.number(w / "ambient_mean");
      if (doc.has(w, "ambient_amplitude")) wm.ambient_amplitude = doc.nonnegative(w / "ambient_amplitude");
      if (doc.has(w, "ambient_noise_sd")) wm.ambient_noise_sd = doc.nonnegative(w / "ambient_noise_sd");
      if (doc.has(w, "supply_temperature")) wm.supply_temperature = doc.number(w / "supply_temperature");
      if (doc.has(w, "supply_noise_sd")) wm.supply_noise_sd = doc.nonnegative(w / "supply_noise_sd");
      if (doc.has(w, "peak_irradiance")) wm.peak_irradiance = doc.nonnegative(w / "peak_irradiance");
    }
  }

  if (doc.has(root, "prediction")) {
    const pointer p("/prediction");
    doc.object(p);
    if (doc.has(p, "horizon")) c.horizon = count(doc, p / "horizon", 1);
    if (doc.has(p, "cadence")) {
      const auto cad = doc.string(p / "cadence");
      if (cad == "anchored") {
        c.cadence = Cadence::kAnchored;
      } else if (cad == "sliding") {
        c.cadence = Cadence::kSliding;
      } else {
        doc.fail(p / "cadence", "expected 'anchored' or 'sliding'");
      }
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open run config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.parent_path(), overrides, path.string());
}

}  // namespace thermident
