#include "renal/aco.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <set>
#include <thread>

namespace renal {

void AcoConfig::validate() const {
  if (population < 2) throw Error(Errc::InvalidArgument, "population size P must be >= 2");
  if (new_states < 1) throw Error(Errc::InvalidArgument, "new state count Q must be >= 1");
  if (!(q > 0)) throw Error(Errc::InvalidArgument, "q must be > 0");
  if (!(xi > 0)) throw Error(Errc::InvalidArgument, "xi must be > 0");
  if (max_iter < 1) throw Error(Errc::InvalidArgument, "max_iter must be >= 1");
  if (!(conv_tol >= 0)) throw Error(Errc::InvalidArgument, "conv_tol must be >= 0");
  if (!lower.allFinite() || !upper.allFinite()) {
    throw Error(Errc::NonFinite, "search bounds must be finite");
  }
  if ((lower.array() < 0).any()) throw Error(Errc::InvalidArgument, "lower bounds must be >= 0");
  if ((upper.array() <= lower.array()).any()) {
    throw Error(Errc::InvalidArgument, "upper bounds must exceed lower bounds");
  }
  if (!(threshold >= 0)) throw Error(Errc::InvalidArgument, "threshold must be >= 0");
  if (!(v_b >= 0 && v_b < 1)) throw Error(Errc::InvalidArgument, "v_b must lie in [0, 1)");
  if (internal_steps < 1) throw Error(Errc::InvalidArgument, "internal_steps must be >= 1");
}

Eigen::VectorXd blood_correction(const Eigen::VectorXd& kidney, const Eigen::VectorXd& blood,
                                 double v_b) {
  if (kidney.size() != blood.size()) {
    throw Error(Errc::LengthMismatch, "kidney and blood series differ in length");
  }
  if (!(v_b >= 0 && v_b < 1)) throw Error(Errc::InvalidArgument, "v_b must lie in [0, 1)");
  return (kidney - v_b * blood) / (1 - v_b);
}

DiscrepancyCost::DiscrepancyCost(const MeasurementSet& data, const AcoConfig& config)
    : model_((data.validate(), data.schedule), data.blood, config.internal_steps),
      kidney_(blood_correction(data.kidney, data.blood, config.v_b)),
      bladder_(data.bladder),
      eps_(config.threshold) {}

double DiscrepancyCost::operator()(const RateConstantsd& k) const {
  const FramePrediction p = model_.predict(k, eps_);
  return (p.kidney() - kidney_).squaredNorm() + (p.urine - bladder_).squaredNorm();
}

double cost(const RateConstantsd& k, const MeasurementSet& data, const AcoConfig& config) {
  return DiscrepancyCost(data, config)(k);
}

Eigen::VectorXd rank_log_weights(int population, double q) {
  if (population < 1 || !(q > 0)) throw Error(Errc::InvalidArgument, "need P >= 1 and q > 0");
  const double sigma = q * population;
  const double log_norm = std::log(sigma * std::sqrt(2 * std::numbers::pi));
  Eigen::VectorXd out(population);
  for (int i = 0; i < population; ++i) {
    out[i] = -0.5 * (i / sigma) * (i / sigma) - log_norm;
  }
  return out;
}

Eigen::VectorXd rank_weights(int population, double q) {
  const Eigen::VectorXd logw = rank_log_weights(population, q);
  const Eigen::VectorXd w = (logw.array() - logw.maxCoeff()).exp().matrix();
  return w / w.sum();
}

Eigen::MatrixXd kernel_deviations(const Population& pop, double xi) {
  const Eigen::Index n = pop.size();
  if (n < 2) throw Error(Errc::InvalidArgument, "population needs at least two states");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, 6);
  for (Eigen::Index l = 0; l < n; ++l) {
    const State& centre = pop.members[static_cast<std::size_t>(l)].state;
    for (const Candidate& other : pop.members) s.row(l) += (other.state - centre).cwiseAbs().transpose();
  }
  return s * (xi / static_cast<double>(n - 1));
}

double population_diameter(const Population& pop) {
  if (pop.members.empty()) return 0.0;
  State lo = pop.members.front().state;
  State hi = lo;
  for (const Candidate& c : pop.members) {
    lo = lo.cwiseMin(c.state);
    hi = hi.cwiseMax(c.state);
  }
  return (hi - lo).maxCoeff();
}

State apply_threshold(const State& state, double threshold) {
  return (state.array() < threshold).select(State::Zero(), state);
}

namespace {

void sort_by_cost(std::vector<Candidate>& members) {
  std::stable_sort(members.begin(), members.end(),
                   [](const Candidate& x, const Candidate& y) { return x.cost < y.cost; });
}

std::mt19937_64 iteration_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    std::uint32_t{0xac0}};
  return std::mt19937_64(seq);
}

}  // namespace

Population init_population(const AcoConfig& config, const CostFunction& cost_fn,
                           std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Population pop;
  pop.members.reserve(static_cast<std::size_t>(config.population));
  for (int i = 0; i < config.population; ++i) {
    State s;
    for (int j = 0; j < 6; ++j) {
      s[j] = config.lower[j] + (config.upper[j] - config.lower[j]) * unit(rng);
    }
    pop.members.push_back({s, cost_fn(s)});
  }
  sort_by_cost(pop.members);
  return pop;
}

Population aco_iterate(const Population& pop, const AcoConfig& config,
                       const CostFunction& cost_fn, std::mt19937_64& rng) {
  const int p = static_cast<int>(pop.size());
  const Eigen::VectorXd w = rank_weights(p, config.q);
  const Eigen::MatrixXd s = kernel_deviations(pop, config.xi);
  std::discrete_distribution<int> pick(w.data(), w.data() + w.size());

  std::vector<Candidate> merged = pop.members;
  merged.reserve(static_cast<std::size_t>(p + config.new_states));
  for (int n = 0; n < config.new_states; ++n) {
    State x;
    for (int j = 0; j < 6; ++j) {
      const int l = pick(rng);
      const double mean = pop.members[static_cast<std::size_t>(l)].state[j];
      const double dev = s(l, j);
      double v = mean;
      if (dev > 0) v = std::normal_distribution<double>(mean, dev)(rng);
      x[j] = std::clamp(v, config.lower[j], config.upper[j]);
    }
    merged.push_back({x, cost_fn(x)});
  }
  sort_by_cost(merged);
  merged.resize(static_cast<std::size_t>(p));
  return Population{std::move(merged)};
}

FitResult run_aco(const CostFunction& cost_fn, const AcoConfig& config, std::uint64_t seed) {
  config.validate();
  FitResult out;
  out.seed = seed;

  Population pop = init_population(config, cost_fn, config.init_seed.value_or(seed));
  std::mt19937_64 rng = iteration_engine(seed);
  out.cost_history.push_back(pop.best().cost);

  for (int it = 1; it <= config.max_iter; ++it) {
    pop = aco_iterate(pop, config, cost_fn, rng);
    out.cost_history.push_back(pop.best().cost);
    out.iterations = it;
    if (population_diameter(pop) < config.conv_tol) {
      out.converged = true;
      break;
    }
  }

  const State best = apply_threshold(pop.best().state, config.threshold);
  out.best = RateConstantsd(best);
  out.best_cost = cost_fn(best);
  out.kind = classify(derive_matrix(out.best), config.threshold);
  return out;
}

FitResult run_aco(const MeasurementSet& data, const AcoConfig& config, std::uint64_t seed) {
  const DiscrepancyCost objective(data, config);
  return run_aco([&objective](const State& s) { return objective(s); }, config, seed);
}

EnsembleResult ensemble(const MeasurementSet& data, const AcoConfig& config,
                        const std::vector<std::uint64_t>& seeds, unsigned threads) {
  config.validate();
  if (seeds.empty()) throw Error(Errc::InvalidArgument, "ensemble needs at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw Error(Errc::InvalidArgument, "ensemble seeds must be distinct");
  }

  const DiscrepancyCost objective(data, config);
  const CostFunction cost_fn = [&objective](const State& s) { return objective(s); };

  EnsembleResult out;
  out.runs.resize(seeds.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(seeds.size()));

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  auto worker = [&](unsigned id) {
    try {
      for (std::size_t i = next++; i < seeds.size(); i = next++) {
        out.runs[i] = run_aco(cost_fn, config, seeds[i]);
      }
    } catch (...) {
      errors[id] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned id = 1; id < threads; ++id) pool.emplace_back(worker, id);
  worker(0);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const auto n = static_cast<double>(out.runs.size());
  for (const FitResult& r : out.runs) out.mean += r.best.vector();
  out.mean /= n;
  if (out.runs.size() > 1) {
    for (const FitResult& r : out.runs) {
      out.std += (r.best.vector() - out.mean).cwiseAbs2();
    }
    out.std = (out.std / (n - 1)).cwiseSqrt();
  }

  out.strips.reserve(out.runs.size());
  for (const FitResult& r : out.runs) {
    const FramePrediction p = objective.model().predict(r.best, config.threshold);
    out.strips.push_back({(1 - config.v_b) * p.kidney() + config.v_b * data.blood, p.urine});
  }
  return out;
}

}  // namespace renal
