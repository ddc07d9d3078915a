#pragma once

#include <Eigen/Dense>

#include <vector>

#include "renal/kinetics.hpp"
#include "renal/synth.hpp"

namespace renal {

struct FramePrediction {
  Eigen::VectorXd tissue;
  Eigen::VectorXd preurine;
  Eigen::VectorXd urine;

  Eigen::VectorXd kidney() const { return tissue + preurine; }
};

/// Direct problem driven by frame-sampled blood data.
///
/// The input function is the piecewise-linear interpolant through (0, 0) and
/// the blood samples. It is resolved on a uniform grid of `internal_steps`
/// intervals over [0, last frame], with the frame times inserted as extra
/// nodes so that read-off at the frames needs no interpolation.
class FrameModel {
 public:
  FrameModel(const AcquisitionSchedule& schedule, const Eigen::VectorXd& blood,
             int internal_steps = 2000);

  FramePrediction predict(const RateConstantsd& k,
                          double eps = SolverTolerances<double>{}.structural) const;

  const SampledCurved& input() const { return input_; }
  const std::vector<Eigen::Index>& frame_nodes() const { return frames_; }

 private:
  std::vector<Eigen::Index> frames_;  // filled while building input_
  SampledCurved input_;
};

}  // namespace renal
