#pragma once

// Oracle-equivalence and invariant checks for the direct solvers.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "renal/kinetics.hpp"
#include "renal/synth.hpp"

namespace renal {

struct CheckResult {
  std::string name;
  double max_deviation = 0;
  double tolerance = 0;
  bool passed = true;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool passed() const;
  const CheckResult& at(const std::string& name) const;
};

struct ValidationOptions {
  int samples_per_case = 100;
  int eigenvalue_draws = 10000;
  std::uint64_t seed = 1;
  int grid_steps = 2000;
  double end_time = 49.0;
  GammaVariateParams tac;
  /// Replace the reference input by C_b = 0.
  bool zero_tac = false;
  /// Negate the analytic pre-urine curve; a negative control.
  bool inject_sign_error = false;

  double oracle_tol = 1e-4;
  /// Mass-balance tolerance is this factor times the squared grid step.
  double mass_balance_factor = 10.0;
  double nonnegativity_tol = 1e-10;
  double quadrature_tol = 1e-3;
  double identity_tol = 1e-3;
};

/// Random rate constants with every coordinate in (1e-3, 2) and the
/// couplings absent from `kind` set to exactly 0.
RateConstantsd random_rate_constants(CaseKind kind, std::mt19937_64& rng);

/// max_t |x - y| / max_t |y|, or max_t |x - y| when y vanishes.
double relative_sup_deviation(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Checks, in order:
///   oracle_<case>  closed form vs ode_reference, relative sup-norm
///   mass_balance   central difference of C_t + C_p + C_u vs (k_tb + k_pb) C_b - k_bt C_t
///   nonnegativity  most negative concentration (absolute)
///   urine_integral C_u vs k_up * cumulative_integral(C_p)
///   identity       double convolution integral vs its closed form
///   eigenvalues    count of draws with complex or nonnegative eigenvalues
ValidationReport run_validation(const ValidationOptions& options = {});

void print_report(const ValidationReport& report, std::ostream& out);

}  // namespace renal
