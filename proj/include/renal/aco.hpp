#pragma once

// Continuous ant colony optimization over the six exchange coefficients.
//
// A population of P states is kept sorted by cost. Each iteration draws Q
// new states coordinate by coordinate from a rank-weighted mixture of
// Gaussians centred on the current states, then keeps the P cheapest of the
// P + Q.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "renal/frame_model.hpp"
#include "renal/kinetics.hpp"
#include "renal/synth.hpp"

namespace renal {

using State = Eigen::Matrix<double, 6, 1>;

struct AcoConfig {
  int population = 13;  // P
  int new_states = 7;   // Q
  double q = 0.015;     // rank weight spread
  double xi = 0.4;      // kernel deviation scale
  int max_iter = 2000;
  double conv_tol = 1e-4;  // population sup-norm diameter
  State lower = State::Zero();
  State upper = State::Ones();
  double threshold = 1e-3;
  double v_b = 0.0;
  int internal_steps = 2000;
  /// When set, every run starts from the population drawn with this seed.
  std::optional<std::uint64_t> init_seed;

  /// P given, Q = floor(P / 2) + 1.
  static int new_states_for(int population) { return population / 2 + 1; }

  void validate() const;
};

struct Candidate {
  State state;
  double cost;
};

/// Sorted by nondecreasing cost.
struct Population {
  std::vector<Candidate> members;

  Eigen::Index size() const { return static_cast<Eigen::Index>(members.size()); }
  const Candidate& best() const { return members.front(); }
};

using CostFunction = std::function<double(const State&)>;

Eigen::VectorXd blood_correction(const Eigen::VectorXd& kidney, const Eigen::VectorXd& blood,
                                 double v_b);

/// Sum of squared residuals of the kidney (blood-corrected) and bladder
/// curves over all frames. Built once per data set.
class DiscrepancyCost {
 public:
  DiscrepancyCost(const MeasurementSet& data, const AcoConfig& config);

  double operator()(const RateConstantsd& k) const;
  double operator()(const State& state) const { return (*this)(RateConstantsd(state)); }

  const FrameModel& model() const { return model_; }
  const Eigen::VectorXd& corrected_kidney() const { return kidney_; }

 private:
  FrameModel model_;
  Eigen::VectorXd kidney_;
  Eigen::VectorXd bladder_;
  double eps_;
};

double cost(const RateConstantsd& k, const MeasurementSet& data, const AcoConfig& config);

/// Log of the Gaussian N(1, qP) at ranks 1..P, unnormalized.
Eigen::VectorXd rank_log_weights(int population, double q);

/// Rank weights normalized to a selection distribution.
Eigen::VectorXd rank_weights(int population, double q);

/// s(l, j) = xi / (P - 1) * sum_p |u(p, j) - u(l, j)|, one row per state.
Eigen::MatrixXd kernel_deviations(const Population& pop, double xi);

/// Largest coordinate spread across the population.
double population_diameter(const Population& pop);

State apply_threshold(const State& state, double threshold);

Population init_population(const AcoConfig& config, const CostFunction& cost_fn,
                           std::uint64_t seed);

Population aco_iterate(const Population& pop, const AcoConfig& config,
                       const CostFunction& cost_fn, std::mt19937_64& rng);

struct FitResult {
  RateConstantsd best;
  double best_cost = 0;
  int iterations = 0;
  bool converged = false;
  CaseKind kind = CaseKind::Full;
  std::uint64_t seed = 0;
  /// Best population cost after initialization and after each iteration.
  std::vector<double> cost_history;
};

FitResult run_aco(const CostFunction& cost_fn, const AcoConfig& config, std::uint64_t seed);
FitResult run_aco(const MeasurementSet& data, const AcoConfig& config, std::uint64_t seed);

struct Strip {
  Eigen::VectorXd kidney;   // predicted ROI signal, blood fraction included
  Eigen::VectorXd bladder;
};

struct EnsembleResult {
  std::vector<FitResult> runs;
  State mean = State::Zero();
  State std = State::Zero();
  std::vector<Strip> strips;
};

/// One run per seed, executed concurrently. Statistics use the thresholded
/// coefficients; std is the sample standard deviation (0 for a single run).
EnsembleResult ensemble(const MeasurementSet& data, const AcoConfig& config,
                        const std::vector<std::uint64_t>& seeds, unsigned threads = 0);

}  // namespace renal
