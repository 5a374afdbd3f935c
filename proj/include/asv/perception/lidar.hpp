#pragma once

#include <optional>
#include <vector>

#include "asv/core/rng.hpp"
#include "asv/core/types.hpp"

namespace asv::perception {

// Obstacle boundary for ray casting: an ellipse or an axis-pair rectangle,
// both with a planar pose. Discs are ellipses with equal semi-axes.
struct PlacedShape {
  enum class Kind { kEllipse, kRect };
  Kind kind = Kind::kEllipse;
  Vec2 center = Vec2::Zero();
  double theta = 0.0;  // shape orientation [rad]
  double ax = 1.0;     // semi-axis x (ellipse) or half-width (rect)
  double ay = 1.0;     // semi-axis y (ellipse) or half-height (rect)

  static PlacedShape disc(const Vec2& c, double radius) {
    return {Kind::kEllipse, c, 0.0, radius, radius};
  }
};

struct LidarConfig {
  int beam_count = 120;
  double fov = 2.0 * M_PI;     // [rad], beams evenly spaced, angles increasing
  double max_range = 100.0;    // [m]
  double noise_sigma = 0.1;    // [m], additive Gaussian on hit ranges
};

// One revolution. ranges[i] is NaN on a miss; angles are sensor-relative.
struct LidarScan {
  double t = 0.0;
  Vec2 origin = Vec2::Zero();
  double heading = 0.0;
  std::vector<double> angles;  // strictly increasing
  std::vector<double> ranges;  // NaN = miss, otherwise in (0, max_range]

  bool is_hit(int i) const { return std::isfinite(ranges[i]); }
  // World-frame hit point of beam i (only valid for hits).
  Vec2 point(int i) const {
    const double a = heading + angles[i];
    return origin + ranges[i] * Vec2(std::cos(a), std::sin(a));
  }
};

struct PointCluster {
  std::vector<Vec2> points;    // world frame
  double source_scan_time = 0.0;
};

struct ClusterResult {
  std::vector<PointCluster> clusters;  // each has >= min_points
  int unfittable = 0;                  // clusters discarded for being too small
};

// Exact smallest positive ray parameter against one shape, or nothing.
// Exposed for tests; ray direction must be unit length.
std::optional<double> ray_hit(const Vec2& origin, const Vec2& dir,
                              const PlacedShape& shape);

// Casts every beam from the sensor pose, keeps the nearest boundary hit within
// max_range, then perturbs hit ranges with seeded Gaussian noise (clamped to
// (0.01, max_range]). Misses stay misses.
LidarScan simulate_scan(const Vec2& origin, double heading, double t,
                        const std::vector<PlacedShape>& shapes,
                        const LidarConfig& cfg, Rng& rng);

// Single-linkage Euclidean clustering of the scan's hit points with chaining
// threshold eps. Clusters smaller than min_points are dropped and counted.
// Surviving clusters are pairwise separated by more than eps.
ClusterResult cluster_points(const LidarScan& scan, double eps,
                             int min_points = 6);

}  // namespace asv::perception
