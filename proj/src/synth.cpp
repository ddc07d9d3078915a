#include "renal/synth.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "renal/frame_model.hpp"

namespace renal {

void GammaVariateParams::validate() const {
  if (!std::isfinite(amplitude) || !std::isfinite(delay) || !std::isfinite(shape) ||
      !std::isfinite(scale)) {
    throw Error(Errc::NonFinite, "gamma variate parameters must be finite");
  }
  if (amplitude < 0 || delay < 0 || !(shape > 0) || !(scale > 0)) {
    throw Error(Errc::InvalidArgument,
                "gamma variate needs amplitude >= 0, delay >= 0, shape > 0, scale > 0");
  }
}

double gamma_variate(const GammaVariateParams& p, double t) {
  if (t <= p.delay) return 0.0;
  const double s = t - p.delay;
  return p.amplitude * std::pow(s, p.shape) * std::exp(-s / p.scale);
}

SampledCurved gamma_variate_tac(const GammaVariateParams& p, const TimeGridd& grid) {
  p.validate();
  Eigen::VectorXd v(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) v[i] = gamma_variate(p, grid[i]);
  return {grid, std::move(v)};
}

AcquisitionSchedule::AcquisitionSchedule(Eigen::VectorXd times) : times_(std::move(times)) {
  if (times_.size() < 1) throw Error(Errc::InvalidSchedule, "schedule is empty");
  for (Eigen::Index i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || !(times_[i] > 0)) {
      throw Error(Errc::InvalidSchedule, "frame times must be positive and finite");
    }
    if (i > 0 && !(times_[i] > times_[i - 1])) {
      throw Error(Errc::InvalidSchedule, "frame times must be strictly increasing");
    }
  }
}

AcquisitionSchedule AcquisitionSchedule::from_durations(std::span<const double> durations) {
  Eigen::VectorXd mid(static_cast<Eigen::Index>(durations.size()));
  double start = 0.0;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (!(durations[i] > 0)) throw Error(Errc::InvalidSchedule, "frame duration must be > 0");
    mid[static_cast<Eigen::Index>(i)] = start + durations[i] / 2;
    start += durations[i];
  }
  return AcquisitionSchedule(std::move(mid));
}

AcquisitionSchedule AcquisitionSchedule::standard() {
  std::vector<double> durations;
  durations.insert(durations.end(), 10, 0.5);
  durations.insert(durations.end(), 8, 1.0);
  durations.insert(durations.end(), 9, 4.0);
  return from_durations(durations);
}

void MeasurementSet::validate() const {
  const Eigen::Index n = schedule.size();
  auto check = [n](const Eigen::VectorXd& v, const char* name) {
    if (v.size() != n) {
      throw Error(Errc::LengthMismatch, std::string(name) + " length differs from schedule");
    }
    if (!v.allFinite()) throw Error(Errc::NonFinite, std::string(name) + " has non-finite values");
    if ((v.array() < 0).any()) throw Error(Errc::NegativeValue, std::string(name) + " is negative");
  };
  check(blood, "blood");
  check(kidney, "kidney");
  check(bladder, "bladder");
  if (kidney_err) check(*kidney_err, "kidney_err");
  if (bladder_err) check(*bladder_err, "bladder_err");
}

bool operator==(const MeasurementSet& x, const MeasurementSet& y) {
  return x.schedule == y.schedule && x.blood == y.blood && x.kidney == y.kidney &&
         x.bladder == y.bladder && x.kidney_err == y.kidney_err && x.bladder_err == y.bladder_err;
}

Eigen::VectorXd apply_poisson_noise(const Eigen::VectorXd& values, double noise_scale,
                                    std::mt19937_64& rng) {
  if (!(noise_scale >= 0)) throw Error(Errc::InvalidArgument, "noise_scale must be >= 0");
  if (noise_scale == 0) return values;
  Eigen::VectorXd out(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double mean = noise_scale * values[i];
    if (mean <= 0) {
      out[i] = 0.0;
      continue;
    }
    std::poisson_distribution<long long> counts(mean);
    out[i] = static_cast<double>(counts(rng)) / noise_scale;
  }
  return out;
}

MeasurementSet simulate_measurements(const RateConstantsd& k, const GammaVariateParams& p,
                                     const AcquisitionSchedule& schedule, double noise_scale,
                                     std::uint64_t seed, const SimulationOptions& options) {
  p.validate();
  if (!(options.v_b >= 0 && options.v_b < 1)) {
    throw Error(Errc::InvalidArgument, "blood fraction must lie in [0, 1)");
  }
  Eigen::VectorXd blood(schedule.size());
  for (Eigen::Index i = 0; i < schedule.size(); ++i) blood[i] = gamma_variate(p, schedule.times()[i]);

  const FrameModel model(schedule, blood, options.internal_steps);
  const FramePrediction clean = model.predict(k);
  const Eigen::VectorXd kidney = (1 - options.v_b) * clean.kidney() + options.v_b * blood;
  // Round-off can leave values a hair below zero.
  const Eigen::VectorXd bladder = clean.urine.cwiseMax(0.0);

  std::mt19937_64 rng(seed);
  MeasurementSet out{schedule, blood, apply_poisson_noise(kidney.cwiseMax(0.0), noise_scale, rng),
                     apply_poisson_noise(bladder, noise_scale, rng), std::nullopt, std::nullopt};
  return out;
}

double error_bars(double concentration, double volume, double scale) {
  if (!(concentration >= 0) || !(volume >= 0) || !(scale >= 0)) {
    throw Error(Errc::InvalidArgument, "error bar inputs must be >= 0");
  }
  const double counts_per_concentration = volume * scale;
  if (counts_per_concentration == 0) throw Error(Errc::ZeroVolume, "ROI volume is zero");
  return std::sqrt(concentration * counts_per_concentration) / counts_per_concentration;
}

MeasurementSet with_error_bars(MeasurementSet data, double kidney_volume, double bladder_volume,
                               double scale) {
  Eigen::VectorXd ke(data.size()), be(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    ke[i] = error_bars(data.kidney[i], kidney_volume, scale);
    be[i] = error_bars(data.bladder[i], bladder_volume, scale);
  }
  data.kidney_err = std::move(ke);
  data.bladder_err = std::move(be);
  return data;
}

}  // namespace renal
