#include "renal/frame_model.hpp"

#include <algorithm>
#include <cmath>

namespace renal {
namespace {

SampledCurved build_input(const AcquisitionSchedule& schedule, const Eigen::VectorXd& blood,
                          int internal_steps, std::vector<Eigen::Index>& frames) {
  if (blood.size() != schedule.size()) {
    throw Error(Errc::LengthMismatch, "blood samples do not match the schedule");
  }
  if (internal_steps < 1) throw Error(Errc::InvalidArgument, "internal_steps must be >= 1");

  const double end = schedule.back();
  const double merge = 1e-9 * end;
  const Eigen::VectorXd uniform = Eigen::VectorXd::LinSpaced(internal_steps + 1, 0.0, end);
  const Eigen::VectorXd& ft = schedule.times();

  std::vector<double> nodes;
  nodes.reserve(uniform.size() + ft.size());
  frames.clear();
  Eigen::Index f = 0;
  for (Eigen::Index i = 0; i < uniform.size(); ++i) {
    const double u = uniform[i];
    while (f < ft.size() && ft[f] < u - merge) {
      frames.push_back(static_cast<Eigen::Index>(nodes.size()));
      nodes.push_back(ft[f++]);
    }
    if (f < ft.size() && std::abs(ft[f] - u) <= merge) {
      frames.push_back(static_cast<Eigen::Index>(nodes.size()));
      nodes.push_back(ft[f++]);
      continue;
    }
    nodes.push_back(u);
  }

  // Piecewise-linear blood through (0, 0) and the frame samples.
  Eigen::VectorXd knot_t(ft.size() + 1), knot_v(ft.size() + 1);
  knot_t << 0.0, ft;
  knot_v << 0.0, blood;
  const SampledCurved knots(TimeGridd(knot_t), knot_v);

  Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(nodes.data(),
                                                        static_cast<Eigen::Index>(nodes.size()));
  Eigen::VectorXd v(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) v[i] = knots(t[i]);
  for (std::size_t j = 0; j < frames.size(); ++j) {
    v[frames[j]] = blood[static_cast<Eigen::Index>(j)];
  }
  return SampledCurved(TimeGridd(std::move(t)), std::move(v));
}

}  // namespace

FrameModel::FrameModel(const AcquisitionSchedule& schedule, const Eigen::VectorXd& blood,
                       int internal_steps)
    : input_(build_input(schedule, blood, internal_steps, frames_)) {}

FramePrediction FrameModel::predict(const RateConstantsd& k, double eps) const {
  const ConcentrationSetd full = solve_direct(k, input_, eps);
  const auto n = static_cast<Eigen::Index>(frames_.size());
  FramePrediction out{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index node = frames_[static_cast<std::size_t>(j)];
    out.tissue[j] = full.tissue[node];
    out.preurine[j] = full.preurine[node];
    out.urine[j] = full.urine[node];
  }
  return out;
}

}  // namespace renal
