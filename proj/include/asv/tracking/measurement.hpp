#pragma once

#include <optional>

#include "asv/core/types.hpp"

namespace asv::tracking {

enum class MeasurementSource { kLidar, kAis };

// Planar position measurement with its covariance, fed to the filter bank.
struct Measurement {
  Vec2 z = Vec2::Zero();
  Mat2 R = Mat2::Identity();
  MeasurementSource source = MeasurementSource::kLidar;
  double t = 0.0;
  std::optional<int> source_id;  // AIS identity when known
};

}  // namespace asv::tracking
