#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <span>

#include "renal/kinetics.hpp"

namespace renal {

/// A (t - t0)^alpha exp(-(t - t0) / beta) for t > t0, zero before.
struct GammaVariateParams {
  double amplitude = 10.0;  // kBq/mL per min^alpha
  double delay = 0.2;       // min
  double shape = 2.0;
  double scale = 1.5;       // min

  void validate() const;
};

double gamma_variate(const GammaVariateParams& p, double t);
SampledCurved gamma_variate_tac(const GammaVariateParams& p, const TimeGridd& grid);

/// Frame midpoint times in minutes.
class AcquisitionSchedule {
 public:
  explicit AcquisitionSchedule(Eigen::VectorXd times);

  /// Midpoints of back-to-back frames starting at t = 0.
  static AcquisitionSchedule from_durations(std::span<const double> durations);

  /// 10 x 0.5 min, 8 x 1 min, 9 x 4 min: 27 frames over 49 minutes.
  static AcquisitionSchedule standard();

  const Eigen::VectorXd& times() const { return times_; }
  Eigen::Index size() const { return times_.size(); }
  double back() const { return times_[times_.size() - 1]; }

  friend bool operator==(const AcquisitionSchedule& x, const AcquisitionSchedule& y) {
    return x.times_ == y.times_;
  }

 private:
  Eigen::VectorXd times_;
};

/// Per-frame ROI concentrations in kBq/mL.
struct MeasurementSet {
  AcquisitionSchedule schedule;
  Eigen::VectorXd blood;
  Eigen::VectorXd kidney;
  Eigen::VectorXd bladder;
  std::optional<Eigen::VectorXd> kidney_err;
  std::optional<Eigen::VectorXd> bladder_err;

  Eigen::Index size() const { return schedule.size(); }
  void validate() const;
};

bool operator==(const MeasurementSet& x, const MeasurementSet& y);

struct SimulationOptions {
  /// Blood fraction mixed into the kidney signal: (1 - v_b)(C_t + C_p) + v_b C_b.
  double v_b = 0.0;
  int internal_steps = 2000;
};

/// Poisson(scale * v) / scale per entry; scale == 0 passes values through.
Eigen::VectorXd apply_poisson_noise(const Eigen::VectorXd& values, double noise_scale,
                                    std::mt19937_64& rng);

/// Samples the blood curve at the frames, solves the direct problem on that
/// input and adds Poisson noise to the kidney and bladder observables only.
MeasurementSet simulate_measurements(const RateConstantsd& k, const GammaVariateParams& p,
                                     const AcquisitionSchedule& schedule, double noise_scale,
                                     std::uint64_t seed, const SimulationOptions& options = {});

/// Poisson standard deviation of an ROI activity, expressed back as a
/// concentration: sqrt(c V s) / (V s).
double error_bars(double concentration, double volume, double scale);

/// Fills kidney_err and bladder_err from the ROI volumes.
MeasurementSet with_error_bars(MeasurementSet data, double kidney_volume, double bladder_volume,
                               double scale);

}  // namespace renal
