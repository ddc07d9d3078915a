#include "renal/validate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace renal {
namespace {

constexpr std::array<CaseKind, 4> kCases = {CaseKind::Full, CaseKind::LowerTriangular,
                                            CaseKind::UpperTriangular, CaseKind::Diagonal};

ConcentrationSetd solve_case(CaseKind kind, const RateConstantsd& k, const SampledCurved& tac) {
  switch (kind) {
    case CaseKind::Full: return solve_full(k, tac);
    case CaseKind::LowerTriangular: return solve_lower(k, tac);
    case CaseKind::UpperTriangular: return solve_upper(k, tac);
    case CaseKind::Diagonal: return solve_diagonal(k, tac);
  }
  throw Error(Errc::InvalidArgument, "unknown case");
}

std::string case_label(CaseKind kind) {
  switch (kind) {
    case CaseKind::Full: return "full";
    case CaseKind::LowerTriangular: return "lower";
    case CaseKind::UpperTriangular: return "upper";
    case CaseKind::Diagonal: return "diagonal";
  }
  return "unknown";
}

CheckResult make_check(std::string name, double deviation, double tolerance) {
  return {std::move(name), deviation, tolerance, deviation <= tolerance};
}

struct Sample {
  RateConstantsd k;
  ConcentrationSetd analytic;
};

double mass_balance_deviation(const RateConstantsd& k, const SampledCurved& tac,
                              const ConcentrationSetd& c) {
  const auto& t = tac.grid().times();
  const Eigen::VectorXd total = c.tissue + c.preurine + c.urine;
  const Eigen::VectorXd rhs = (k.k_tb() + k.k_pb()) * tac.values() - k.k_bt() * c.tissue;
  double worst = 0;
  for (Eigen::Index i = 1; i + 1 < t.size(); ++i) {
    const double derivative = (total[i + 1] - total[i - 1]) / (t[i + 1] - t[i - 1]);
    worst = std::max(worst, std::abs(derivative - rhs[i]));
  }
  const double scale = rhs.cwiseAbs().maxCoeff();
  return scale > 0 ? worst / scale : worst;
}

SampledCurved random_curve(const TimeGridd& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GammaVariateParams p;
  p.amplitude = 1 + 20 * u(rng);
  p.delay = 2 * u(rng);
  p.shape = 1 + 3 * u(rng);
  p.scale = 0.5 + 4 * u(rng);
  const double offset = u(rng);
  const double freq = 0.1 + u(rng);
  Eigen::VectorXd v(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    v[i] = gamma_variate(p, grid[i]) + offset * std::sin(freq * grid[i]);
  }
  return {grid, std::move(v)};
}

}  // namespace

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult& ValidationReport::at(const std::string& name) const {
  for (const CheckResult& c : checks) {
    if (c.name == name) return c;
  }
  throw Error(Errc::InvalidArgument, "no check named " + name);
}

RateConstantsd random_rate_constants(CaseKind kind, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coord(1e-3, 2.0);
  Vector6<double> v;
  for (int i = 0; i < 6; ++i) {
    do v[i] = coord(rng);
    while (!(v[i] > 1e-3));
  }
  if (kind == CaseKind::LowerTriangular || kind == CaseKind::Diagonal) v[RateConstantsd::TP] = 0;
  if (kind == CaseKind::UpperTriangular || kind == CaseKind::Diagonal) v[RateConstantsd::PT] = 0;
  return RateConstantsd(v);
}

double relative_sup_deviation(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw Error(Errc::LengthMismatch, "curves differ in length");
  if (x.size() == 0) return 0;
  const double diff = (x - y).cwiseAbs().maxCoeff();
  const double scale = y.cwiseAbs().maxCoeff();
  return scale > 0 ? diff / scale : diff;
}

ValidationReport run_validation(const ValidationOptions& o) {
  if (o.samples_per_case < 1 || o.eigenvalue_draws < 0) {
    throw Error(Errc::InvalidArgument, "sample counts must be positive");
  }
  const TimeGridd grid = TimeGridd::uniform(o.end_time, o.grid_steps);
  const SampledCurved tac = o.zero_tac ? SampledCurved::zero(grid) : gamma_variate_tac(o.tac, grid);
  const double step = o.end_time / o.grid_steps;
  std::mt19937_64 rng(o.seed);

  ValidationReport report;
  std::vector<Sample> samples;
  for (CaseKind kind : kCases) {
    double worst = 0;
    for (int n = 0; n < o.samples_per_case; ++n) {
      RateConstantsd k = random_rate_constants(kind, rng);
      ConcentrationSetd analytic = [&] {
        for (;;) {
          try {
            return solve_case(kind, k, tac);
          } catch (const Error& e) {
            if (e.code() != Errc::DegenerateEigenvalues && e.code() != Errc::ZeroEigenvalue) throw;
            k = random_rate_constants(kind, rng);
          }
        }
      }();
      if (o.inject_sign_error) analytic.preurine = -analytic.preurine;
      const ConcentrationSetd oracle = ode_reference(k, tac);
      worst = std::max({worst, relative_sup_deviation(analytic.tissue, oracle.tissue),
                        relative_sup_deviation(analytic.preurine, oracle.preurine),
                        relative_sup_deviation(analytic.urine, oracle.urine)});
      samples.push_back({k, std::move(analytic)});
    }
    report.checks.push_back(make_check("oracle_" + case_label(kind), worst, o.oracle_tol));
  }

  double balance = 0;
  double negative = 0;
  double quadrature = 0;
  for (const Sample& s : samples) {
    const ConcentrationSetd& c = s.analytic;
    balance = std::max(balance, mass_balance_deviation(s.k, tac, c));
    const double lowest = std::min({c.tissue.minCoeff(), c.preurine.minCoeff(), c.urine.minCoeff()});
    negative = std::max(negative, -lowest);
    const Eigen::VectorXd integral = s.k.k_up() * cumulative_integral(c.c_p()).values();
    quadrature = std::max(quadrature, relative_sup_deviation(c.urine, integral));
  }
  report.checks.push_back(make_check("mass_balance", balance, o.mass_balance_factor * step * step));
  report.checks.push_back(make_check("nonnegativity", negative, o.nonnegativity_tol));
  report.checks.push_back(make_check("urine_integral", quadrature, o.quadrature_tol));

  std::uniform_real_distribution<double> rate(-2.0, -1e-2);
  double identity = 0;
  for (int n = 0; n < o.samples_per_case; ++n) {
    const double w = rate(rng);
    const SampledCurved c = o.zero_tac ? SampledCurved::zero(grid) : random_curve(grid, rng);
    const SampledCurved inner = exp_convolve(w, c);
    const Eigen::VectorXd lhs = cumulative_integral(inner).values();
    const Eigen::VectorXd rhs = (inner.values() - cumulative_integral(c).values()) / w;
    identity = std::max(identity, relative_sup_deviation(lhs, rhs));
  }
  report.checks.push_back(make_check("identity", identity, o.identity_tol));

  std::uniform_real_distribution<double> diag(1e-3, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int bad = 0;
  for (int n = 0; n < o.eigenvalue_draws; ++n) {
    KineticMatrixd m{};
    do {
      m.a = diag(rng);
      m.d = diag(rng);
      m.b = m.d * unit(rng);
      m.c = m.a * unit(rng);
    } while (!(m.a * m.d > m.b * m.c));
    const double disc = (m.a - m.d) * (m.a - m.d) + 4 * m.b * m.c;
    const EigenPaird eig = eigenvalues(m, CaseKind::Full);
    if (!(disc >= 0) || !(eig.lambda1 < 0) || !(eig.lambda2 < 0)) ++bad;
  }
  report.checks.push_back(make_check("eigenvalues", bad, 0));
  return report;
}

void print_report(const ValidationReport& report, std::ostream& out) {
  char line[128];
  for (const CheckResult& c : report.checks) {
    std::snprintf(line, sizeof line, "%-16s max_deviation=%-12.4e tolerance=%-10.3e %s\n",
                  c.name.c_str(), c.max_deviation, c.tolerance, c.passed ? "PASS" : "FAIL");
    out << line;
  }
  out << (report.passed() ? "all checks passed" : "validation FAILED") << '\n';
}

}  // namespace renal
