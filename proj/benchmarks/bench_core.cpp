#include <benchmark/benchmark.h>

#include "thermident/excitation.hpp"
#include "thermident/identification.hpp"
#include "thermident/internal_gains.hpp"
#include "thermident/run_config.hpp"

namespace thermident {
namespace {

struct Twin {
  RunConfig cfg = load_run_config(std::filesystem::path(THERMIDENT_DATA_DIR) / "twin" / "run.json");
  BuildingDescription desc = load_building(cfg.building);
  ParameterVector params = load_parameters(*cfg.parameters, desc);
  RCStateSpaceModel model = build_model(desc, params);
  DiscreteModel dm = discretize(model, cfg.dt);

  TimeSeriesDataset weekend(int w) const {
    SynthesisOptions o = cfg.weekend_synthesis(w);
    o.schedule = generate_excitation(desc, cfg.excitation_seed + static_cast<std::uint64_t>(w), cfg.excitation.days,
                                     cfg.weekend_excitation(w));
    return synthesize_dataset(desc, params, o);
  }
  TimeSeriesDataset week() const {
    SynthesisOptions o = cfg.operation_synthesis(desc);
    o.days = 7;
    return synthesize_dataset(desc, params, o);
  }
};

const Twin& twin() {
  static const Twin t;
  return t;
}

void BM_BuildModel(benchmark::State& state) {
  const auto& t = twin();
  for (auto _ : state) benchmark::DoNotOptimize(build_model(t.desc, t.params));
}
BENCHMARK(BM_BuildModel)->Unit(benchmark::kMicrosecond);

void BM_Discretize(benchmark::State& state) {
  const auto& t = twin();
  for (auto _ : state) benchmark::DoNotOptimize(discretize(t.model, t.cfg.dt));
}
BENCHMARK(BM_Discretize)->Unit(benchmark::kMicrosecond);

void BM_Step(benchmark::State& state) {
  const auto& t = twin();
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(t.dm.state_count(), 21.0);
  const Eigen::VectorXd u = t.dm.layout.box_max_flow;
  Disturbance v = Disturbance::Zero();
  v[kTa] = 5.0;
  v[kTs] = 14.0;
  const Eigen::VectorXd f = Eigen::VectorXd::Zero(t.dm.zone_count());
  for (auto _ : state) benchmark::DoNotOptimize(step(t.dm, x, u, v, f));
}
BENCHMARK(BM_Step);

void BM_KalmanWeek(benchmark::State& state) {
  const auto& t = twin();
  const auto ds = t.week();
  KalmanOptions o;
  o.noise = t.cfg.noise;
  for (auto _ : state) benchmark::DoNotOptimize(kalman_filter(t.dm, ds, o, *ds.true_f_ig));
}
BENCHMARK(BM_KalmanWeek)->Unit(benchmark::kMillisecond);

void BM_IdentificationObjective(benchmark::State& state) {
  const auto& t = twin();
  const std::vector<TimeSeriesDataset> data{t.weekend(0), t.weekend(1)};
  const auto o = t.cfg.identification_options();
  const Eigen::VectorXd flat = plausible_initial_guess(t.desc.zones.size()).to_vector();
  for (auto _ : state) benchmark::DoNotOptimize(identification_objective(t.desc, flat, data, o));
}
BENCHMARK(BM_IdentificationObjective)->Unit(benchmark::kMillisecond);

void BM_GainsSnapshot(benchmark::State& state) {
  const auto& t = twin();
  const GainsSolver solver(t.dm);
  const Eigen::VectorXd r = Eigen::VectorXd::Constant(t.dm.zone_count(), 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(r));
}
BENCHMARK(BM_GainsSnapshot);

}  // namespace
}  // namespace thermident

BENCHMARK_MAIN();
