// renal-aco: simulate, fit and validate the three-compartment renal model.
//
//   renal-aco simulate --out data/             -> data/measurements.csv
//   renal-aco fit      --data m.csv --seed 7   -> coefficients.csv, strips.csv, runs.json
//   renal-aco ensemble --data m.csv --runs 30  -> same files, one row per run
//   renal-aco validate                         -> per-check deviations, exit 1 on failure

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "renal/aco.hpp"
#include "renal/io.hpp"
#include "renal/synth.hpp"
#include "renal/validate.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> out;
  std::optional<std::string> data;
  std::optional<double> noise_scale;
  std::optional<double> simulation_v_b;
  std::optional<double> kidney_volume;
  std::optional<double> bladder_volume;
  std::optional<int> population;
  std::optional<int> new_states;
  std::optional<double> q;
  std::optional<double> xi;
  std::optional<int> max_iter;
  std::optional<double> conv_tol;
  std::optional<double> lower;
  std::optional<double> upper;
  std::optional<double> threshold;
  std::optional<double> v_b;
  std::optional<int> internal_steps;
  std::optional<std::uint64_t> init_seed;
  unsigned threads = 0;
  bool inject_sign_error = false;
  bool zero_tac = false;
  int samples = 100;
};

void add_common_options(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "base seed");
  app.add_option("--runs", o.runs, "number of ensemble runs");
  app.add_option("--seeds", o.seeds, "explicit per-run seeds");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--data", o.data, "measurement CSV");
  app.add_option("--threads", o.threads, "worker threads (0 = hardware concurrency)");

  app.add_option("--population", o.population, "ACO population size P (sets Q = P/2 + 1)");
  app.add_option("--new-states", o.new_states, "ACO new states per iteration Q");
  app.add_option("--q", o.q, "rank weight spread");
  app.add_option("--xi", o.xi, "kernel deviation scale");
  app.add_option("--max-iter", o.max_iter, "iteration cap");
  app.add_option("--conv-tol", o.conv_tol, "population diameter stopping tolerance");
  app.add_option("--lower", o.lower, "lower search bound for every coefficient");
  app.add_option("--upper", o.upper, "upper search bound for every coefficient");
  app.add_option("--threshold", o.threshold, "coefficients below this are reported as 0");
  app.add_option("--v-b", o.v_b, "blood fraction of the kidney ROI used when fitting");
  app.add_option("--internal-steps", o.internal_steps, "direct solver grid intervals");
  app.add_option("--init-seed", o.init_seed, "shared initial population seed");
}

renal::RunConfig build_config(renal::Mode mode, const Overrides& o) {
  renal::RunConfig c = o.config.empty() ? renal::RunConfig{} : renal::load_run_config(o.config);
  c.mode = mode;
  if (o.seed) c.seed = *o.seed;
  if (o.runs) c.runs = *o.runs;
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (o.out) c.out = *o.out;
  if (o.data) c.data = *o.data;
  if (o.noise_scale) c.noise_scale = *o.noise_scale;
  if (o.simulation_v_b) c.simulation_v_b = *o.simulation_v_b;
  if (o.kidney_volume) c.kidney_volume = *o.kidney_volume;
  if (o.bladder_volume) c.bladder_volume = *o.bladder_volume;

  renal::AcoConfig& a = c.aco;
  if (o.population) {
    a.population = *o.population;
    a.new_states = renal::AcoConfig::new_states_for(a.population);
  }
  if (o.new_states) a.new_states = *o.new_states;
  if (o.q) a.q = *o.q;
  if (o.xi) a.xi = *o.xi;
  if (o.max_iter) a.max_iter = *o.max_iter;
  if (o.conv_tol) a.conv_tol = *o.conv_tol;
  if (o.lower) a.lower = renal::State::Constant(*o.lower);
  if (o.upper) a.upper = renal::State::Constant(*o.upper);
  if (o.threshold) a.threshold = *o.threshold;
  if (o.v_b) a.v_b = *o.v_b;
  if (o.internal_steps) a.internal_steps = *o.internal_steps;
  if (o.init_seed) a.init_seed = *o.init_seed;
  c.validate();
  return c;
}

int cmd_simulate(const renal::RunConfig& c) {
  renal::SimulationOptions sim;
  sim.v_b = c.simulation_v_b;
  sim.internal_steps = c.aco.internal_steps;
  renal::MeasurementSet data =
      renal::simulate_measurements(c.truth, c.gamma, c.schedule, c.noise_scale, c.seed, sim);
  if (c.kidney_volume && c.bladder_volume) {
    data = renal::with_error_bars(data, *c.kidney_volume, *c.bladder_volume, c.count_scale);
  }
  std::filesystem::create_directories(c.out);
  const auto path = c.out / "measurements.csv";
  renal::save_measurements(data, path);
  std::cout << "wrote " << path.string() << " (" << data.size() << " frames)\n";
  return 0;
}

int cmd_fit(const renal::RunConfig& c, std::vector<std::uint64_t> seeds, unsigned threads) {
  const renal::MeasurementSet data = renal::load_measurements(c.data);
  const renal::EnsembleResult result = renal::ensemble(data, c.aco, seeds, threads);
  const renal::EmittedFiles files = renal::emit_results(result, data, c.out);

  std::cout << "coefficient     mean                    std\n";
  for (int i = 0; i < 6; ++i) {
    std::cout << renal::RateConstantsd::names[i] << "            "
              << renal::format_double(result.mean[i]) << "    "
              << renal::format_double(result.std[i]) << '\n';
  }
  std::cout << "wrote " << files.coefficients.string() << ", " << files.strips.string() << ", "
            << files.runs.string() << '\n';
  return 0;
}

int cmd_validate(const renal::RunConfig& c, const Overrides& o) {
  renal::ValidationOptions v;
  v.seed = c.seed;
  v.tac = c.gamma;
  v.samples_per_case = o.samples;
  v.zero_tac = o.zero_tac;
  v.inject_sign_error = o.inject_sign_error;
  const renal::ValidationReport report = renal::run_validation(v);
  renal::print_report(report, std::cout);
  return report.passed() ? 0 : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-compartment renal tracer kinetics: simulation, ACO fitting, validation"};
  app.require_subcommand(1);
  Overrides o;

  auto* simulate = app.add_subcommand("simulate", "write Poisson-noised synthetic measurements");
  auto* fit = app.add_subcommand("fit", "single ACO run on a measurement file");
  auto* ens = app.add_subcommand("ensemble", "independent ACO runs with summary statistics");
  auto* validate = app.add_subcommand("validate", "check the direct solvers against oracles");
  for (CLI::App* sub : {simulate, fit, ens, validate}) add_common_options(*sub, o);

  simulate->add_option("--noise-scale", o.noise_scale, "Poisson scale (0 = noiseless)");
  simulate->add_option("--sim-v-b", o.simulation_v_b, "blood fraction mixed into the kidney");
  simulate->add_option("--kidney-volume", o.kidney_volume, "kidney ROI volume for error bars");
  simulate->add_option("--bladder-volume", o.bladder_volume, "bladder ROI volume for error bars");
  validate->add_flag("--inject-sign-error", o.inject_sign_error, "negative control");
  validate->add_flag("--zero-tac", o.zero_tac, "use a zero blood curve");
  validate->add_option("--samples", o.samples, "random rate constants per case")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(build_config(renal::Mode::Simulate, o));
    if (validate->parsed()) {
      return cmd_validate(build_config(renal::Mode::Validate, o), o);
    }
    if (fit->parsed()) {
      const auto c = build_config(renal::Mode::Fit, o);
      return cmd_fit(c, {c.seeds.empty() ? c.seed : c.seeds.front()}, 1);
    }
    const auto c = build_config(renal::Mode::Ensemble, o);
    return cmd_fit(c, c.run_seeds(), o.threads);
  } catch (const renal::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
