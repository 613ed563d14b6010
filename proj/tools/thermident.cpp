// thermident: batch front end for the identification pipeline.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "thermident/building.hpp"
#include "thermident/csv.hpp"
#include "thermident/error.hpp"
#include "thermident/evaluation.hpp"
#include "thermident/excitation.hpp"
#include "thermident/identification.hpp"
#include "thermident/internal_gains.hpp"
#include "thermident/model_artifact.hpp"
#include "thermident/run_config.hpp"
#include "thermident/synthesis.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace thermident;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

void stamp_csv(const fs::path& path, const std::string& hash) {
  write_text(path, "# config_hash: " + hash + "\n" + read_text(path));
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Exclusive marker file in the output directory for the lifetime of a command.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) : path_(dir / ".thermident.lock") {
    fs::create_directories(dir);
    std::FILE* f = std::fopen(path_.string().c_str(), "wx");
    if (!f) {
      throw Error(ErrorCode::kIo, "output directory " + dir.string() + " is locked by another run (" +
                                      path_.string() + ")");
    }
    std::fclose(f);
  }
  ~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
};

struct CommonArgs {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
};

struct Context {
  RunConfig cfg;
  BuildingDescription desc;
  fs::path out;

  fs::path excitation_dir() const { return out / "excitation"; }
  fs::path data_dir() const { return out / "data"; }
  fs::path ident_dir() const { return out / "identification"; }
  fs::path ig_dir() const { return out / "ig"; }
  fs::path pred_dir() const { return out / "predictions"; }
  fs::path eval_dir() const { return out / "evaluation"; }

  Eigen::Index steps_per_week() const { return static_cast<Eigen::Index>(7 * 86400.0 / cfg.dt); }

  std::vector<fs::path> weekend_paths() const {
    if (!cfg.identification_data.empty()) return cfg.identification_data;
    std::vector<fs::path> out_paths;
    for (int w = 0; w < cfg.excitation.weekends; ++w) {
      out_paths.push_back(data_dir() / ("weekend_" + std::to_string(w) + ".csv"));
    }
    return out_paths;
  }
  std::vector<fs::path> training_paths() const {
    return cfg.training_data.empty() ? std::vector<fs::path>{data_dir() / "training.csv"} : cfg.training_data;
  }
  std::vector<fs::path> validation_paths() const {
    return cfg.validation_data.empty() ? std::vector<fs::path>{data_dir() / "validation.csv"} : cfg.validation_data;
  }

  ParameterVector truth() const {
    if (!cfg.parameters) throw Error(ErrorCode::kConfig, "paths.parameters is required for synthesis");
    return load_parameters(*cfg.parameters, desc);
  }

  // Identified parameters when present, else the configured ones.
  ParameterVector model_parameters() const {
    const fs::path identified = ident_dir() / "params.json";
    if (fs::exists(identified)) return load_parameters(identified, desc);
    if (cfg.parameters) {
      spdlog::warn("no identified parameters in {}; using {}", ident_dir().string(), cfg.parameters->string());
      return load_parameters(*cfg.parameters, desc);
    }
    throw Error(ErrorCode::kConfig, "no parameters: run 'identify' first or set paths.parameters");
  }

  DiscreteModel model() const { return discretize(build_model(desc, model_parameters()), cfg.dt); }

  std::vector<TimeSeriesDataset> load_all(const std::vector<fs::path>& paths) const {
    std::vector<TimeSeriesDataset> out_ds;
    for (const auto& p : paths) {
      if (!fs::exists(p)) throw Error(ErrorCode::kIo, "missing dataset " + p.string() + " (run 'synthesize' first?)");
      out_ds.push_back(load_dataset_csv(p));
    }
    return out_ds;
  }

  TimeSeriesDataset load_joined(const std::vector<fs::path>& paths) const {
    auto parts = load_all(paths);
    return parts.size() == 1 ? parts.front() : concatenate(parts);
  }

  json metadata() const {
    return {{"config_hash", cfg.hash},
            {"dt", cfg.dt},
            {"seeds",
             {{"excitation", cfg.excitation_seed}, {"synthesis", cfg.synthesis_seed}, {"optimizer", cfg.optimizer_seed}}}};
  }
};

std::vector<std::pair<std::string, std::string>> parse_sets(const std::vector<std::string>& sets) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::kConfig, "--set expects /pointer=value, got '" + s + "'");
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

Context make_context(const CommonArgs& args) {
  if (args.config.empty()) throw Error(ErrorCode::kConfig, "--config is required");
  Context ctx;
  ctx.cfg = load_run_config(args.config, parse_sets(args.sets));
  ctx.desc = load_building(ctx.cfg.building);
  ctx.out = args.out.empty() ? ctx.cfg.output_dir : fs::path(args.out);
  spdlog::info("config {} (hash {}), output {}", args.config, ctx.cfg.hash, ctx.out.string());
  return ctx;
}

void save_stamped_dataset(const fs::path& path, const TimeSeriesDataset& ds, const std::string& hash) {
  save_dataset_csv(path, ds);
  stamp_csv(path, hash);
  if (ds.true_x || ds.true_f_ig) stamp_csv(truth_path_for(path), hash);
}

// ---------------------------------------------------------------------------

struct BuildArgs {
  std::string building;
  std::string params;
  std::string output;
  double dt = 0.0;
};

int cmd_build(const CommonArgs& common, const BuildArgs& a) {
  std::optional<Context> ctx;
  if (!common.config.empty()) ctx = make_context(common);
  const fs::path building = !a.building.empty() ? fs::path(a.building) : ctx ? ctx->cfg.building : fs::path();
  if (building.empty()) throw Error(ErrorCode::kConfig, "build needs --building or --config");
  const BuildingDescription desc = load_building(building);

  fs::path params_path = a.params;
  if (params_path.empty() && ctx) {
    const fs::path identified = ctx->ident_dir() / "params.json";
    if (fs::exists(identified)) {
      params_path = identified;
    } else if (ctx->cfg.parameters) {
      params_path = *ctx->cfg.parameters;
    }
  }
  if (params_path.empty()) throw Error(ErrorCode::kConfig, "build needs --params or a config with parameters");
  const ParameterVector params = load_parameters(params_path, desc);

  const double dt = a.dt > 0.0 ? a.dt : ctx ? ctx->cfg.dt : kDefaultStep;
  const RCStateSpaceModel model = build_model(desc, params);
  const DiscreteModel dm = discretize(model, dt);
  ModelArtifact art = make_artifact(desc, model, dm);
  art.metadata["config_hash"] =
      ctx ? ctx->cfg.hash : hex64(fnv1a(read_text(building) + "\n" + read_text(params_path)));
  art.metadata["state_count"] = std::to_string(dm.state_count());

  fs::path output = a.output;
  if (output.empty()) output = (ctx ? ctx->out : fs::path(".")) / "model.json";
  std::optional<OutputLock> lock;
  if (output.has_parent_path()) lock.emplace(output.parent_path());
  save_artifact(output, art);
  spdlog::info("model with {} states written to {}", dm.state_count(), output.string());
  std::cout << output.string() << "\n";
  return 0;
}

int cmd_excite(const CommonArgs& common) {
  const Context ctx = make_context(common);
  OutputLock lock(ctx.out);
  for (int w = 0; w < ctx.cfg.excitation.weekends; ++w) {
    const auto schedule = generate_excitation(ctx.desc, ctx.cfg.excitation_seed + static_cast<std::uint64_t>(w),
                                              ctx.cfg.excitation.days, ctx.cfg.weekend_excitation(w));
    const fs::path path = ctx.excitation_dir() / ("schedule_" + std::to_string(w) + ".csv");
    save_schedule_csv(path, schedule);
    stamp_csv(path, ctx.cfg.hash);
    spdlog::info("excitation schedule {} ({} blocks) written to {}", w, schedule.blocks.size(), path.string());
  }
  return 0;
}

int cmd_synthesize(const CommonArgs& common) {
  const Context ctx = make_context(common);
  OutputLock lock(ctx.out);
  const ParameterVector truth = ctx.truth();

  for (int w = 0; w < ctx.cfg.excitation.weekends; ++w) {
    SynthesisOptions o = ctx.cfg.weekend_synthesis(w);
    const fs::path sched = ctx.excitation_dir() / ("schedule_" + std::to_string(w) + ".csv");
    if (fs::exists(sched)) {
      o.schedule = load_schedule_csv(sched);
    } else {
      o.schedule = generate_excitation(ctx.desc, ctx.cfg.excitation_seed + static_cast<std::uint64_t>(w),
                                       ctx.cfg.excitation.days, ctx.cfg.weekend_excitation(w));
    }
    const auto ds = synthesize_dataset(ctx.desc, truth, o);
    const fs::path path = ctx.data_dir() / ("weekend_" + std::to_string(w) + ".csv");
    save_stamped_dataset(path, ds, ctx.cfg.hash);
    spdlog::info("identification weekend {} ({} samples) written to {}", w, ds.size(), path.string());
  }

  const auto full = synthesize_dataset(ctx.desc, truth, ctx.cfg.operation_synthesis(ctx.desc));
  const Eigen::Index split = ctx.cfg.operation.training_weeks * ctx.steps_per_week();
  // Validation keeps the last warm-up window of the training period so the
  // first validation day can be predicted.
  const Eigen::Index lead = std::min<Eigen::Index>(ctx.cfg.warmup_steps + 1, split);
  save_stamped_dataset(ctx.data_dir() / "training.csv", full.slice(0, split), ctx.cfg.hash);
  save_stamped_dataset(ctx.data_dir() / "validation.csv", full.slice(split - lead, full.size()), ctx.cfg.hash);
  spdlog::info("regular operation: {} training and {} validation samples", split, full.size() - split);
  return 0;
}

int cmd_identify(const CommonArgs& common) {
  const Context ctx = make_context(common);
  OutputLock lock(ctx.out);
  const auto weekends = ctx.load_all(ctx.weekend_paths());
  const ParameterVector gamma0 =
      ctx.cfg.initial_guess ? load_parameters(*ctx.cfg.initial_guess, ctx.desc) : plausible_initial_guess(ctx.desc.zones.size());
  const ParameterBounds bounds = ctx.cfg.bounds(ctx.desc);
  const auto result = identify_parameters(ctx.desc, weekends, {}, gamma0, bounds, ctx.cfg.identification_options());
  spdlog::info("identification: objective {:.6g} after {} iterations ({})", result.objective, result.iterations,
               result.message);

  json params = json::parse(dump_parameters(result.params, ctx.desc));
  params["metadata"] = ctx.metadata();
  write_text(ctx.ident_dir() / "params.json", params.dump(2) + "\n");

  const auto names = parameter_names(ctx.desc);
  const auto units = parameter_units(ctx.desc);
  const Eigen::VectorXd g0 = gamma0.to_vector();
  json report;
  report["schema"] = "thermident-identification/1";
  report["parameters"] = json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    report["parameters"].push_back({{"name", names[i]},
                                    {"unit", units[i]},
                                    {"value", result.flat[k]},
                                    {"initial", g0[k]},
                                    {"lower", bounds.lower[k]},
                                    {"upper", bounds.upper[k]}});
  }
  report["objective"] = result.objective;
  json rms = json::object();
  for (std::size_t z = 0; z < ctx.desc.zones.size(); ++z) {
    rms[ctx.desc.zones[z].id] = result.training_rms[static_cast<Eigen::Index>(z)];
  }
  report["training_rms"] = rms;
  report["training_rms_mean"] = result.training_rms.mean();
  report["iterations"] = result.iterations;
  report["evaluations"] = result.evaluations;
  report["converged"] = result.converged;
  report["message"] = result.message;
  report["best_start"] = result.best_start;
  report["trace"] = json::array();
  for (const auto& it : result.trace) {
    report["trace"].push_back({{"iteration", it.iteration},
                               {"start", it.start},
                               {"objective", it.objective},
                               {"evaluations", it.evaluations},
                               {"parameters", std::vector<double>(it.parameters.data(),
                                                                  it.parameters.data() + it.parameters.size())}});
  }
  report["metadata"] = ctx.metadata();
  write_text(ctx.ident_dir() / "report.json", report.dump(2) + "\n");
  std::cout << "objective " << format_double(result.objective) << "\n";
  return 0;
}

int cmd_estimate_ig(const CommonArgs& common) {
  const Context ctx = make_context(common);
  OutputLock lock(ctx.out);
  const DiscreteModel dm = ctx.model();
  const auto training = ctx.load_all(ctx.training_paths());
  const InternalGainsProfile profile = estimate_fixed_ig(dm, training, ctx.cfg.gains_options());

  save_profile_csv(ctx.ig_dir() / "profile.csv", profile);
  stamp_csv(ctx.ig_dir() / "profile.csv", ctx.cfg.hash);
  save_weekly_estimates_csv(ctx.ig_dir() / "weekly.csv", profile);
  stamp_csv(ctx.ig_dir() / "weekly.csv", ctx.cfg.hash);

  // Temperature increase per step, C B_IG (c_IG + f), for mean and weeks.
  const Eigen::MatrixXd gain = dm.C * dm.B_ig;
  CsvTable t;
  t.comments.push_back("config_hash: " + ctx.cfg.hash);
  t.header = {"week", "slot"};
  for (const auto& z : profile.zone_ids) t.header.push_back(z);
  auto emit = [&](const std::string& week, const Eigen::MatrixXd& f) {
    for (Eigen::Index s = 0; s < f.cols(); ++s) {
      std::vector<std::string> row{week, std::to_string(s)};
      const Eigen::VectorXd temp = gain * (profile.c_ig + f.col(s));
      for (Eigen::Index z = 0; z < temp.size(); ++z) row.push_back(format_double(temp[z]));
      t.rows.push_back(std::move(row));
    }
  };
  emit("mean", profile.f);
  for (std::size_t w = 0; w < profile.weeks.size(); ++w) emit(std::to_string(w), profile.weeks[w]);
  write_csv(ctx.ig_dir() / "temperature_equivalent.csv", t);
  spdlog::info("internal gains profile from {} weeks written to {}", profile.weeks.size(), ctx.ig_dir().string());
  return 0;
}

int cmd_predict(const CommonArgs& common) {
  const Context ctx = make_context(common);
  OutputLock lock(ctx.out);
  const DiscreteModel dm = ctx.model();
  const fs::path profile_path = ctx.ig_dir() / "profile.csv";
  if (!fs::exists(profile_path)) throw Error(ErrorCode::kIo, "missing " + profile_path.string() + " (run 'estimate-ig' first?)");
  const InternalGainsProfile profile = load_profile_csv(profile_path);
  const TimeSeriesDataset validation = ctx.load_joined(ctx.validation_paths());

  PredictionOptions configured = ctx.cfg.prediction_options();
  PredictionOptions one_step = configured;
  one_step.horizon = 1;
  one_step.cadence = Cadence::kSliding;
  for (const auto& [suffix, opt] : {std::pair{std::string(), configured}, std::pair{std::string("_1step"), one_step}}) {
    const auto fixed = predict_fixed_ig(dm, profile, validation, opt);
    const auto online = predict_online_ig(dm, validation, opt);
    const fs::path fixed_path = ctx.pred_dir() / ("fixed" + suffix + ".csv");
    const fs::path online_path = ctx.pred_dir() / ("online" + suffix + ".csv");
    save_predictions_csv(fixed_path, fixed, validation);
    save_predictions_csv(online_path, online, validation);
    stamp_csv(fixed_path, ctx.cfg.hash);
    stamp_csv(online_path, ctx.cfg.hash);
    spdlog::info("{} starts, horizon {} written to {}", fixed.starts.size(), opt.horizon, ctx.pred_dir().string());
  }
  return 0;
}

std::string cadence_text(Cadence c) { return c == Cadence::kAnchored ? "anchored" : "sliding"; }

EvaluationReport evaluate_pair(const Context& ctx, const TimeSeriesDataset& validation, const std::string& suffix,
                               Cadence cadence) {
  const auto fixed = load_predictions_csv(ctx.pred_dir() / ("fixed" + suffix + ".csv"), validation);
  const auto online = load_predictions_csv(ctx.pred_dir() / ("online" + suffix + ".csv"), validation);
  auto report = compare_predictors(summarize("fixed", fixed, validation, cadence),
                                   summarize("online", online, validation, cadence), validation.zone_ids);
  report.metadata["config_hash"] = ctx.cfg.hash;
  report.metadata["seed_synthesis"] = std::to_string(ctx.cfg.synthesis_seed);
  report.metadata["seed_excitation"] = std::to_string(ctx.cfg.excitation_seed);
  report.metadata["seed_optimizer"] = std::to_string(ctx.cfg.optimizer_seed);
  report.metadata["starts"] = std::to_string(fixed.starts.size());
  return report;
}

int cmd_evaluate(const CommonArgs& common, const std::string& compare) {
  if (!compare.empty()) {
    EvaluationReport report = load_report(compare);
    report.metadata["source"] = fs::path(compare).filename().string();
    if (!common.config.empty()) {
      const Context ctx = make_context(common);
      OutputLock lock(ctx.out);
      report.metadata["config_hash"] = ctx.cfg.hash;
      write_text(ctx.eval_dir() / "compare.json", report_to_json(report));
    } else if (!common.out.empty()) {
      OutputLock lock(common.out);
      report.metadata["config_hash"] = hex64(fnv1a(read_text(compare)));
      write_text(fs::path(common.out) / "compare.json", report_to_json(report));
    }
    char line[160];
    std::snprintf(line, sizeof line, "mean RMS fixed %.4f online %.4f improvement %.2f%%\n", report.fixed.mean_rms,
                  report.online.mean_rms, 100.0 * report.mean_improvement);
    std::cout << line;
    return 0;
  }

  const Context ctx = make_context(common);
  OutputLock lock(ctx.out);
  const TimeSeriesDataset validation = ctx.load_joined(ctx.validation_paths());

  const auto report = evaluate_pair(ctx, validation, "", ctx.cfg.cadence);
  write_text(ctx.eval_dir() / "report.json", report_to_json(report));
  save_report_csvs(ctx.eval_dir(), report);
  for (const auto* name : {"zone_rms.csv", "horizon_curve.csv"}) {
    if (fs::exists(ctx.eval_dir() / name)) stamp_csv(ctx.eval_dir() / name, ctx.cfg.hash);
  }

  const auto step_report = evaluate_pair(ctx, validation, "_1step", Cadence::kSliding);
  write_text(ctx.eval_dir() / "report_1step.json", report_to_json(step_report));

  char line[200];
  std::snprintf(line, sizeof line, "%s h=%ld: fixed %.4f online %.4f (%.1f%%); 1-step: fixed %.4f online %.4f (%.1f%%)\n",
                cadence_text(ctx.cfg.cadence).c_str(), static_cast<long>(ctx.cfg.horizon), report.fixed.mean_rms,
                report.online.mean_rms, 100.0 * report.mean_improvement, step_report.fixed.mean_rms,
                step_report.online.mean_rms, 100.0 * step_report.mean_improvement);
  std::cout << line;
  return 0;
}

void report_error(std::string_view code, const std::string& message) {
  json err;
  err["error"] = {{"code", code}, {"message", message}};
  std::cerr << err.dump() << std::endl;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("thermident");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("THERMIDENT_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Building thermal model identification and internal-gains prediction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "thermident 0.1.0");
  app.footer("Log level: THERMIDENT_LOG_LEVEL=trace|debug|info|warn|error|off (default warn).");

  CommonArgs common;
  auto add_common = [&common](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("-c,--config", common.config, "Run configuration (thermident-run/1 JSON)");
    if (config_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--set", common.sets, "Config override as /json/pointer=value (repeatable)");
    sub->add_option("-o,--out", common.out, "Output directory (overrides paths.output_dir)");
  };

  BuildArgs build_args;
  auto* build = app.add_subcommand("build", "Validate a building description and write the model matrices");
  add_common(build, false);
  build->add_option("--building", build_args.building, "Building description JSON")->check(CLI::ExistingFile);
  build->add_option("--params", build_args.params, "Parameter JSON")->check(CLI::ExistingFile);
  build->add_option("--output", build_args.output, "Artifact path (default <out>/model.json)");
  build->add_option("--dt", build_args.dt, "Sampling period in seconds")->check(CLI::PositiveNumber);

  auto* excite = app.add_subcommand("excite", "Generate excitation airflow schedules");
  add_common(excite, true);
  auto* synth = app.add_subcommand("synthesize", "Simulate identification weekends and regular operation");
  add_common(synth, true);
  auto* identify = app.add_subcommand("identify", "Fit the model parameters to the identification weekends");
  add_common(identify, true);
  auto* estimate = app.add_subcommand("estimate-ig", "Estimate the weekly internal-gains profile");
  add_common(estimate, true);
  auto* predict = app.add_subcommand("predict", "Predict validation data with fixed and online gains");
  add_common(predict, true);
  std::string compare;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions and compare the two predictors");
  add_common(evaluate, false);
  evaluate->add_option("--compare", compare, "Recompute the comparison of an existing report file")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*build) return cmd_build(common, build_args);
    if (*excite) return cmd_excite(common);
    if (*synth) return cmd_synthesize(common);
    if (*identify) return cmd_identify(common);
    if (*estimate) return cmd_estimate_ig(common);
    if (*predict) return cmd_predict(common);
    if (*evaluate) {
      if (compare.empty() && common.config.empty()) throw Error(ErrorCode::kConfig, "evaluate needs --config or --compare");
      return cmd_evaluate(common, compare);
    }
  } catch (const Error& e) {
    report_error(to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("E_INTERNAL", e.what());
    return 1;
  }
  return 1;
}
