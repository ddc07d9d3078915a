#pragma once

// Three-compartment renal tracer model (tissue, pre-urine, bladder urine)
// driven by a blood input curve. The direct problem is solved in closed form
// as combinations of exponential convolutions of the input, with a
// Runge-Kutta integrator kept alongside as an independent reference.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "renal/error.hpp"

namespace renal {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;

/// Exchange coefficients k_ab (flux into compartment a from compartment b),
/// in 1/min. Stored in the column order k_bt, k_tp, k_pt, k_up, k_tb, k_pb.
template <typename Scalar>
class RateConstants {
 public:
  using Storage = Vector6<Scalar>;
  enum Index : int { BT = 0, TP, PT, UP, TB, PB };

  static constexpr std::array<const char*, 6> names = {"k_bt", "k_tp", "k_pt",
                                                       "k_up", "k_tb", "k_pb"};

  RateConstants() : values_(Storage::Zero()) {}

  explicit RateConstants(const Storage& values) : values_(values) { check(); }

  RateConstants(Scalar k_bt, Scalar k_tp, Scalar k_pt, Scalar k_up, Scalar k_tb, Scalar k_pb) {
    values_ << k_bt, k_tp, k_pt, k_up, k_tb, k_pb;
    check();
  }

  Scalar k_bt() const { return values_[BT]; }
  Scalar k_tp() const { return values_[TP]; }
  Scalar k_pt() const { return values_[PT]; }
  Scalar k_up() const { return values_[UP]; }
  Scalar k_tb() const { return values_[TB]; }
  Scalar k_pb() const { return values_[PB]; }

  Scalar operator[](int i) const { return values_[i]; }
  const Storage& vector() const { return values_; }

  friend bool operator==(const RateConstants& x, const RateConstants& y) {
    return x.values_ == y.values_;
  }

 private:
  void check() const {
    using std::isfinite;
    for (int i = 0; i < 6; ++i) {
      if (!isfinite(values_[i])) {
        throw Error(Errc::NonFinite, std::string(names[i]) + " is not finite");
      }
      if (values_[i] < Scalar(0)) {
        throw Error(Errc::InvalidArgument, std::string(names[i]) + " is negative");
      }
    }
  }

  Storage values_;
};

/// Reduced parameters of the 2x2 system matrix [-a b; c -d].
template <typename Scalar>
struct KineticMatrix {
  Scalar a{0}, b{0}, c{0}, d{0};

  Eigen::Matrix<Scalar, 2, 2> matrix() const {
    Eigen::Matrix<Scalar, 2, 2> m;
    m << -a, b, c, -d;
    return m;
  }
};

template <typename Scalar>
KineticMatrix<Scalar> derive_matrix(const RateConstants<Scalar>& k) {
  return {k.k_bt() + k.k_pt(), k.k_tp(), k.k_pt(), k.k_tp() + k.k_up()};
}

enum class CaseKind { Full, LowerTriangular, UpperTriangular, Diagonal };

inline const char* to_string(CaseKind kind) {
  switch (kind) {
    case CaseKind::Full: return "Full";
    case CaseKind::LowerTriangular: return "LowerTriangular";
    case CaseKind::UpperTriangular: return "UpperTriangular";
    case CaseKind::Diagonal: return "Diagonal";
  }
  return "Unknown";
}

/// Off-diagonal entries at or below `eps` count as structural zeros.
template <typename Scalar>
CaseKind classify(const KineticMatrix<Scalar>& m, Scalar eps) {
  const bool has_b = m.b > eps;
  const bool has_c = m.c > eps;
  if (has_b && has_c) return CaseKind::Full;
  if (has_c) return CaseKind::LowerTriangular;
  if (has_b) return CaseKind::UpperTriangular;
  return CaseKind::Diagonal;
}

template <typename Scalar>
struct EigenPair {
  Scalar lambda1{0};
  Scalar lambda2{0};
};

/// Eigenvalues of the system matrix. In the full case lambda1 is the larger
/// root; in the structured cases the pair is (-a, -d) in that order,
/// regardless of magnitude.
template <typename Scalar>
EigenPair<Scalar> eigenvalues(const KineticMatrix<Scalar>& m, CaseKind kind) {
  using std::isfinite;
  using std::sqrt;
  if (!isfinite(m.a) || !isfinite(m.b) || !isfinite(m.c) || !isfinite(m.d)) {
    throw Error(Errc::NonFinite, "kinetic matrix has non-finite entries");
  }
  if (kind != CaseKind::Full) return {-m.a, -m.d};

  // (a+d)^2 - 4(ad-bc) rewritten as (a-d)^2 + 4bc, which is >= 0 for b,c >= 0.
  const Scalar gap = m.a - m.d;
  const Scalar root = sqrt(gap * gap + Scalar(4) * m.b * m.c);
  const Scalar lambda2 = -(m.a + m.d + root) / Scalar(2);
  // Product of the roots avoids cancellation in the small root.
  const Scalar lambda1 = lambda2 != Scalar(0) ? (m.a * m.d - m.b * m.c) / lambda2
                                              : (-(m.a + m.d) + root) / Scalar(2);
  return {lambda1, lambda2};
}

template <typename Scalar>
EigenPair<Scalar> eigenvalues(const KineticMatrix<Scalar>& m) {
  const bool triangular = m.b == Scalar(0) || m.c == Scalar(0);
  return eigenvalues(m, triangular ? CaseKind::Diagonal : CaseKind::Full);
}

/// Strictly increasing sample times in minutes, starting at 0.
template <typename Scalar>
class TimeGrid {
 public:
  explicit TimeGrid(VectorX<Scalar> times) : times_(std::move(times)) {
    using std::isfinite;
    if (times_.size() < 2) throw Error(Errc::InvalidGrid, "need at least two time points");
    if (times_[0] != Scalar(0)) throw Error(Errc::InvalidGrid, "grid must start at t = 0");
    for (Eigen::Index i = 1; i < times_.size(); ++i) {
      if (!isfinite(times_[i])) throw Error(Errc::NonFinite, "grid time is not finite");
      if (!(times_[i] > times_[i - 1])) {
        throw Error(Errc::InvalidGrid, "grid times must be strictly increasing");
      }
    }
  }

  static TimeGrid uniform(Scalar end, Eigen::Index steps) {
    if (steps < 1 || !(end > Scalar(0))) {
      throw Error(Errc::InvalidGrid, "uniform grid needs end > 0 and steps >= 1");
    }
    return TimeGrid(VectorX<Scalar>::LinSpaced(steps + 1, Scalar(0), end));
  }

  const VectorX<Scalar>& times() const { return times_; }
  Eigen::Index size() const { return times_.size(); }
  Scalar operator[](Eigen::Index i) const { return times_[i]; }
  Scalar back() const { return times_[times_.size() - 1]; }

 private:
  VectorX<Scalar> times_;
};

template <typename Scalar>
class SampledCurve {
 public:
  SampledCurve(TimeGrid<Scalar> grid, VectorX<Scalar> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw Error(Errc::LengthMismatch, "curve values and grid differ in length");
    }
    if (!values_.allFinite()) throw Error(Errc::NonFinite, "curve has non-finite values");
  }

  static SampledCurve zero(const TimeGrid<Scalar>& grid) {
    return SampledCurve(grid, VectorX<Scalar>::Zero(grid.size()));
  }

  const TimeGrid<Scalar>& grid() const { return grid_; }
  const VectorX<Scalar>& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }

  /// Linear interpolation; held constant outside the grid.
  Scalar operator()(Scalar t) const {
    const auto& ts = grid_.times();
    const Eigen::Index n = ts.size();
    if (t <= ts[0]) return values_[0];
    if (t >= ts[n - 1]) return values_[n - 1];
    const Scalar* first = ts.data();
    const Eigen::Index hi = std::upper_bound(first, first + n, t) - first;
    const Eigen::Index lo = hi - 1;
    const Scalar w = (t - ts[lo]) / (ts[hi] - ts[lo]);
    return values_[lo] + w * (values_[hi] - values_[lo]);
  }

 private:
  TimeGrid<Scalar> grid_;
  VectorX<Scalar> values_;
};

/// Tissue, pre-urine and bladder-urine concentrations on a shared grid.
template <typename Scalar>
struct ConcentrationSet {
  TimeGrid<Scalar> grid;
  VectorX<Scalar> tissue;
  VectorX<Scalar> preurine;
  VectorX<Scalar> urine;

  SampledCurve<Scalar> c_t() const { return {grid, tissue}; }
  SampledCurve<Scalar> c_p() const { return {grid, preurine}; }
  SampledCurve<Scalar> c_u() const { return {grid, urine}; }
};

template <typename Scalar>
struct SolverTolerances {
  Scalar structural{1e-3};
  Scalar degenerate{1e-6};
  Scalar zero_eigenvalue{1e-9};
};

namespace detail {

// (e^z - 1) / z
template <typename Scalar>
Scalar phi1(Scalar z) {
  using std::abs;
  using std::expm1;
  if (abs(z) < Scalar(1e-5)) return Scalar(1) + z / Scalar(2) + z * z / Scalar(6);
  return expm1(z) / z;
}

// (e^z - 1 - z) / z^2
template <typename Scalar>
Scalar phi2(Scalar z) {
  using std::abs;
  using std::expm1;
  if (abs(z) < Scalar(1e-2)) {
    return Scalar(1) / Scalar(2) +
           z * (Scalar(1) / Scalar(6) +
                z * (Scalar(1) / Scalar(24) + z * (Scalar(1) / Scalar(120) + z / Scalar(720))));
  }
  return (expm1(z) - z) / (z * z);
}

}  // namespace detail

/// E(t_k) = int_0^{t_k} exp(lambda (t_k - tau)) C(tau) dtau, exact for the
/// piecewise-linear interpolant of the samples.
template <typename Scalar>
SampledCurve<Scalar> exp_convolve(Scalar lambda, const SampledCurve<Scalar>& tac) {
  using std::exp;
  using std::isfinite;
  if (!isfinite(lambda)) throw Error(Errc::NonFinite, "convolution rate is not finite");

  const auto& t = tac.grid().times();
  const auto& y = tac.values();
  const Eigen::Index n = t.size();
  VectorX<Scalar> out(n);
  out[0] = Scalar(0);

  Scalar h_prev(-1), decay(0), w_left(0), w_right(0);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const Scalar h = t[k + 1] - t[k];
    if (h != h_prev) {
      const Scalar z = lambda * h;
      const Scalar p2 = detail::phi2(z);
      decay = exp(z);
      w_left = h * (detail::phi1(z) - p2);
      w_right = h * p2;
      h_prev = h;
    }
    out[k + 1] = decay * out[k] + w_left * y[k] + w_right * y[k + 1];
  }
  if (!out.allFinite()) throw Error(Errc::NonFinite, "convolution overflowed");
  return {tac.grid(), std::move(out)};
}

/// Trapezoidal running integral, zero at t = 0.
template <typename Scalar>
SampledCurve<Scalar> cumulative_integral(const SampledCurve<Scalar>& curve) {
  const auto& t = curve.grid().times();
  const auto& y = curve.values();
  VectorX<Scalar> out(t.size());
  out[0] = Scalar(0);
  for (Eigen::Index k = 0; k + 1 < t.size(); ++k) {
    out[k + 1] = out[k] + (t[k + 1] - t[k]) * (y[k] + y[k + 1]) / Scalar(2);
  }
  return {curve.grid(), std::move(out)};
}

namespace detail {

// Every case reduces to
//   C_t = tissue1 E1 + tissue2 E2,  C_p = pre1 E1 + pre2 E2,
//   C_u = k_up sum_i pre_i (E_i - int C_b) / lambda_i.
template <typename Scalar>
struct ModalForm {
  EigenPair<Scalar> eig;
  Scalar tissue1{0}, tissue2{0};
  Scalar pre1{0}, pre2{0};
};

template <typename Scalar>
ConcentrationSet<Scalar> assemble(const ModalForm<Scalar>& form, Scalar k_up,
                                  const SampledCurve<Scalar>& tac,
                                  const SolverTolerances<Scalar>& tol) {
  using std::abs;
  const Eigen::Index n = tac.size();
  const bool need_urine = k_up != Scalar(0);
  const bool need1 = form.tissue1 != Scalar(0) || form.pre1 != Scalar(0);
  const bool need2 = form.tissue2 != Scalar(0) || form.pre2 != Scalar(0);

  if (need_urine) {
    if ((form.pre1 != Scalar(0) && abs(form.eig.lambda1) <= tol.zero_eigenvalue) ||
        (form.pre2 != Scalar(0) && abs(form.eig.lambda2) <= tol.zero_eigenvalue)) {
      throw Error(Errc::ZeroEigenvalue, "urine integral divides by a vanishing eigenvalue");
    }
  }

  const VectorX<Scalar> e1 =
      need1 ? exp_convolve(form.eig.lambda1, tac).values() : VectorX<Scalar>::Zero(n);
  const VectorX<Scalar> e2 =
      need2 ? exp_convolve(form.eig.lambda2, tac).values() : VectorX<Scalar>::Zero(n);

  ConcentrationSet<Scalar> out{tac.grid(), form.tissue1 * e1 + form.tissue2 * e2,
                               form.pre1 * e1 + form.pre2 * e2, VectorX<Scalar>::Zero(n)};

  if (need_urine && (form.pre1 != Scalar(0) || form.pre2 != Scalar(0))) {
    const VectorX<Scalar> area = cumulative_integral(tac).values();
    if (form.pre1 != Scalar(0)) {
      out.urine += (k_up * form.pre1 / form.eig.lambda1) * (e1 - area);
    }
    if (form.pre2 != Scalar(0)) {
      out.urine += (k_up * form.pre2 / form.eig.lambda2) * (e2 - area);
    }
  }
  if (!out.tissue.allFinite() || !out.preurine.allFinite() || !out.urine.allFinite()) {
    throw Error(Errc::NonFinite, "closed-form solution is not finite");
  }
  return out;
}

template <typename Scalar>
void require_distinct(const EigenPair<Scalar>& eig, const SolverTolerances<Scalar>& tol) {
  using std::abs;
  if (abs(eig.lambda1 - eig.lambda2) <= tol.degenerate) {
    throw Error(Errc::DegenerateEigenvalues, "eigenvalues coincide");
  }
}

}  // namespace detail

/// Closed form for b, c both nonzero.
template <typename Scalar>
ConcentrationSet<Scalar> solve_full(const RateConstants<Scalar>& k,
                                    const SampledCurve<Scalar>& tac,
                                    const SolverTolerances<Scalar>& tol = {}) {
  const auto m = derive_matrix(k);
  detail::ModalForm<Scalar> form;
  form.eig = eigenvalues(m, CaseKind::Full);
  detail::require_distinct(form.eig, tol);

  const Scalar a1 = m.a + form.eig.lambda1;
  const Scalar d2 = m.d + form.eig.lambda2;
  const Scalar den = a1 * d2 - m.b * m.c;
  if (den == Scalar(0)) throw Error(Errc::DegenerateEigenvalues, "singular modal basis");
  const Scalar c1 = (-m.c * k.k_tb() + d2 * k.k_pb()) / den;
  const Scalar c2 = (a1 * k.k_tb() - m.b * k.k_pb()) / den;

  form.tissue1 = c1 * m.b;
  form.tissue2 = c2 * d2;
  form.pre1 = c1 * a1;
  form.pre2 = c2 * m.c;
  return detail::assemble(form, k.k_up(), tac, tol);
}

/// Closed form for b = 0 (any k_tp is ignored); lambda = (-a, -d).
template <typename Scalar>
ConcentrationSet<Scalar> solve_lower(const RateConstants<Scalar>& k,
                                     const SampledCurve<Scalar>& tac,
                                     const SolverTolerances<Scalar>& tol = {}) {
  const auto m = derive_matrix(k);
  detail::ModalForm<Scalar> form;
  form.eig = eigenvalues(m, CaseKind::LowerTriangular);
  detail::require_distinct(form.eig, tol);

  const Scalar gap = form.eig.lambda1 - form.eig.lambda2;
  const Scalar chi1 = k.k_tb() / gap;
  const Scalar chi2 = k.k_pb() - m.c * k.k_tb() / gap;

  form.tissue1 = chi1 * gap;
  form.pre1 = m.c * chi1;
  form.pre2 = chi2;
  return detail::assemble(form, k.k_up(), tac, tol);
}

/// Closed form for c = 0 (any k_pt is ignored in the coupling); lambda = (-a, -d).
template <typename Scalar>
ConcentrationSet<Scalar> solve_upper(const RateConstants<Scalar>& k,
                                     const SampledCurve<Scalar>& tac,
                                     const SolverTolerances<Scalar>& tol = {}) {
  const auto m = derive_matrix(k);
  detail::ModalForm<Scalar> form;
  form.eig = eigenvalues(m, CaseKind::UpperTriangular);
  detail::require_distinct(form.eig, tol);

  const Scalar gap = form.eig.lambda2 - form.eig.lambda1;
  const Scalar sigma2 = k.k_pb() / gap;
  const Scalar sigma1 = k.k_tb() - m.b * k.k_pb() / gap;

  form.tissue1 = sigma1;
  form.tissue2 = m.b * sigma2;
  form.pre2 = gap * sigma2;
  return detail::assemble(form, k.k_up(), tac, tol);
}

template <typename Scalar>
ConcentrationSet<Scalar> solve_diagonal(const RateConstants<Scalar>& k,
                                        const SampledCurve<Scalar>& tac,
                                        const SolverTolerances<Scalar>& tol = {}) {
  const auto m = derive_matrix(k);
  detail::ModalForm<Scalar> form;
  form.eig = eigenvalues(m, CaseKind::Diagonal);
  form.tissue1 = k.k_tb();
  form.pre2 = k.k_pb();
  return detail::assemble(form, k.k_up(), tac, tol);
}

/// Classical RK4 on the full three-equation system with zero initial state.
/// Each input interval is split into `refinement` substeps and the input is
/// linearly interpolated inside it.
template <typename Scalar>
ConcentrationSet<Scalar> ode_reference(const RateConstants<Scalar>& k,
                                       const SampledCurve<Scalar>& tac, int refinement = 8) {
  using State = Eigen::Matrix<Scalar, 3, 1>;
  if (refinement < 1) throw Error(Errc::InvalidArgument, "refinement must be >= 1");

  Eigen::Matrix<Scalar, 3, 3> a;
  a << -(k.k_bt() + k.k_pt()), k.k_tp(), Scalar(0),
       k.k_pt(), -(k.k_tp() + k.k_up()), Scalar(0),
       Scalar(0), k.k_up(), Scalar(0);
  const State drive(k.k_tb(), k.k_pb(), Scalar(0));

  const auto& t = tac.grid().times();
  const auto& blood = tac.values();
  const Eigen::Index n = t.size();
  ConcentrationSet<Scalar> out{tac.grid(), VectorX<Scalar>::Zero(n), VectorX<Scalar>::Zero(n),
                               VectorX<Scalar>::Zero(n)};

  State y = State::Zero();
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const Scalar span = t[i + 1] - t[i];
    const Scalar h = span / Scalar(refinement);
    const Scalar slope = (blood[i + 1] - blood[i]) / span;
    auto input = [&](Scalar s) { return blood[i] + slope * s; };
    for (int sub = 0; sub < refinement; ++sub) {
      const Scalar s0 = h * Scalar(sub);
      const State k1 = a * y + drive * input(s0);
      const State k2 = a * (y + h / 2 * k1) + drive * input(s0 + h / 2);
      const State k3 = a * (y + h / 2 * k2) + drive * input(s0 + h / 2);
      const State k4 = a * (y + h * k3) + drive * input(s0 + h);
      y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    out.tissue[i + 1] = y[0];
    out.preurine[i + 1] = y[1];
    out.urine[i + 1] = y[2];
  }
  if (!y.allFinite()) throw Error(Errc::NonFinite, "reference integration diverged");
  return out;
}

/// Dispatches to the closed form matching the thresholded structure of the
/// system matrix; degenerate or zero eigenvalues fall back to ode_reference.
template <typename Scalar>
ConcentrationSet<Scalar> solve_direct(const RateConstants<Scalar>& k,
                                      const SampledCurve<Scalar>& tac, Scalar eps) {
  SolverTolerances<Scalar> tol;
  tol.structural = eps;
  try {
    switch (classify(derive_matrix(k), eps)) {
      case CaseKind::Full: return solve_full(k, tac, tol);
      case CaseKind::LowerTriangular: return solve_lower(k, tac, tol);
      case CaseKind::UpperTriangular: return solve_upper(k, tac, tol);
      case CaseKind::Diagonal: return solve_diagonal(k, tac, tol);
    }
  } catch (const Error& e) {
    if (e.code() != Errc::DegenerateEigenvalues && e.code() != Errc::ZeroEigenvalue) throw;
  }
  return ode_reference(k, tac);
}

template <typename Scalar>
ConcentrationSet<Scalar> solve_direct(const RateConstants<Scalar>& k,
                                      const SampledCurve<Scalar>& tac) {
  return solve_direct(k, tac, SolverTolerances<Scalar>{}.structural);
}

using RateConstantsd = RateConstants<double>;
using KineticMatrixd = KineticMatrix<double>;
using EigenPaird = EigenPair<double>;
using TimeGridd = TimeGrid<double>;
using SampledCurved = SampledCurve<double>;
using ConcentrationSetd = ConcentrationSet<double>;

}  // namespace renal
