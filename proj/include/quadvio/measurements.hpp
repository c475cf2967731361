#pragma once

#include <vector>

#include "quadvio/geometry.hpp"
#include "quadvio/types.hpp"

namespace quadvio {

/// One IMU reading: specific force and angular rate, biases and noise included.
struct ImuSample {
  double t = 0.0;
  Vec3 accel = Vec3::Zero();  // m/s^2
  Vec3 gyro = Vec3::Zero();   // rad/s
};

/// A tracked feature seen in one image.
struct FeaturePoint {
  int id = 0;
  double u = 0.0;
  double v = 0.0;
};

/// All features observed in one camera frame.
struct FeatureObservation {
  double t = 0.0;
  std::vector<FeaturePoint> points;
};

/// A feature matched between the key-frame image and the current image.
struct CorrespondencePair {
  int id = 0;
  PixelHomogeneous keyframe_px;  // location in the key-frame image
  PixelHomogeneous current_px;   // location in the current image
};

}  // namespace quadvio
