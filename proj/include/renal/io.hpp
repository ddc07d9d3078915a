#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "renal/aco.hpp"
#include "renal/synth.hpp"

namespace renal {

/// Decimal text that parses back to the identical double (17 significant digits).
std::string format_double(double v);

/// CSV with header `t_min,blood,kidney,bladder[,kidney_err,bladder_err]`.
MeasurementSet parse_measurements(std::istream& in, const std::string& source = "<stream>");
MeasurementSet load_measurements(const std::filesystem::path& path);
void write_measurements(const MeasurementSet& data, std::ostream& out);
void save_measurements(const MeasurementSet& data, const std::filesystem::path& path);

nlohmann::json to_json(const FitResult& result);

struct EmittedFiles {
  std::filesystem::path coefficients;
  std::filesystem::path strips;
  std::filesystem::path runs;
};

/// Writes coefficients.csv, strips.csv and runs.json into `dir`.
///
/// runs.json:
///   { "coefficient_order": [...six names...],
///     "mean": [6], "std": [6],
///     "runs": [ { "seed", "coefficients": {name: value}, "cost",
///                 "iterations", "converged", "case" }, ... ] }
EmittedFiles emit_results(const EnsembleResult& result, const MeasurementSet& data,
                          const std::filesystem::path& dir);

enum class Mode { Simulate, Fit, Ensemble, Validate };

/// Everything a CLI invocation needs. Loaded from a JSON file, then
/// overridden by command-line flags.
struct RunConfig {
  Mode mode = Mode::Ensemble;
  AcoConfig aco;
  GammaVariateParams gamma;
  AcquisitionSchedule schedule = AcquisitionSchedule::standard();
  RateConstantsd truth{1.0, 0.02, 0.02, 0.08, 0.3, 0.3};
  double noise_scale = 1000.0;
  double simulation_v_b = 0.0;
  std::optional<double> kidney_volume;
  std::optional<double> bladder_volume;
  double count_scale = 1000.0;
  int runs = 30;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path data;
  std::filesystem::path out = ".";

  /// Explicit seeds, or seed, seed+1, ... when none were given.
  std::vector<std::uint64_t> run_seeds() const;
  void validate() const;
};

/// Applies the keys present in `j` on top of `config`.
void apply_json(RunConfig& config, const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace renal
