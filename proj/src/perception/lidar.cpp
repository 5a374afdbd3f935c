#include "asv/perception/lidar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace asv::perception {

namespace {

std::optional<double> ray_ellipse(const Vec2& o, const Vec2& d,
                                  const PlacedShape& s) {
  // Transform into the ellipse frame, scale to the unit circle, solve the
  // quadratic |o' + t d'|^2 = 1.
  const double c = std::cos(s.theta), sn = std::sin(s.theta);
  const Vec2 rel = o - s.center;
  const Vec2 ol(( c * rel.x() + sn * rel.y()) / s.ax,
                (-sn * rel.x() + c * rel.y()) / s.ay);
  const Vec2 dl(( c * d.x() + sn * d.y()) / s.ax,
                (-sn * d.x() + c * d.y()) / s.ay);
  const double A = dl.squaredNorm();
  const double B = 2.0 * ol.dot(dl);
  const double C = ol.squaredNorm() - 1.0;
  const double disc = B * B - 4.0 * A * C;
  if (disc < 0.0 || A <= 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double t1 = (-B - sq) / (2.0 * A);
  const double t2 = (-B + sq) / (2.0 * A);
  if (t1 > 1e-9) return t1;
  if (t2 > 1e-9) return t2;  // origin inside the ellipse
  return std::nullopt;
}

std::optional<double> ray_segment(const Vec2& o, const Vec2& d, const Vec2& a,
                                  const Vec2& b) {
  // Solve o + t d = a + s (b - a), t > 0, s in [0, 1].
  const Vec2 e = b - a;
  const double denom = d.x() * (-e.y()) - d.y() * (-e.x());
  if (std::abs(denom) < 1e-14) return std::nullopt;
  const Vec2 rhs = a - o;
  const double t = (rhs.x() * (-e.y()) - rhs.y() * (-e.x())) / denom;
  const double s = (d.x() * rhs.y() - d.y() * rhs.x()) / denom;
  if (t > 1e-9 && s >= 0.0 && s <= 1.0) return t;
  return std::nullopt;
}

std::optional<double> ray_rect(const Vec2& o, const Vec2& d,
                               const PlacedShape& s) {
  const double c = std::cos(s.theta), sn = std::sin(s.theta);
  const Mat2 R = (Mat2() << c, -sn, sn, c).finished();
  // Corners in world frame, counter-clockwise.
  const Vec2 corners[4] = {
      s.center + R * Vec2(s.ax, s.ay), s.center + R * Vec2(-s.ax, s.ay),
      s.center + R * Vec2(-s.ax, -s.ay), s.center + R * Vec2(s.ax, -s.ay)};
  std::optional<double> best;
  for (int i = 0; i < 4; ++i) {
    const auto t = ray_segment(o, d, corners[i], corners[(i + 1) % 4]);
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

}  // namespace

std::optional<double> ray_hit(const Vec2& origin, const Vec2& dir,
                              const PlacedShape& shape) {
  return shape.kind == PlacedShape::Kind::kEllipse ? ray_ellipse(origin, dir, shape)
                                                   : ray_rect(origin, dir, shape);
}

LidarScan simulate_scan(const Vec2& origin, double heading, double t,
                        const std::vector<PlacedShape>& shapes,
                        const LidarConfig& cfg, Rng& rng) {
  LidarScan scan;
  scan.t = t;
  scan.origin = origin;
  scan.heading = heading;
  scan.angles.resize(cfg.beam_count);
  scan.ranges.assign(cfg.beam_count, std::numeric_limits<double>::quiet_NaN());

  const double step = cfg.fov / cfg.beam_count;
  for (int i = 0; i < cfg.beam_count; ++i) {
    // Beam 0 at -fov/2; with a full 360 fov and an even beam count this puts
    // one beam exactly dead ahead.
    scan.angles[i] = -0.5 * cfg.fov + i * step;
    const double a = heading + scan.angles[i];
    const Vec2 dir(std::cos(a), std::sin(a));

    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& sh : shapes) {
      const auto hit = ray_hit(origin, dir, sh);
      if (hit && *hit < nearest) nearest = *hit;
    }
    if (nearest <= cfg.max_range) {
      double rng_range = nearest;
      if (cfg.noise_sigma > 0.0) rng_range += rng.normal(0.0, cfg.noise_sigma);
      scan.ranges[i] = std::clamp(rng_range, 0.01, cfg.max_range);
    }
  }
  return scan;
}

ClusterResult cluster_points(const LidarScan& scan, double eps,
                             int min_points) {
  // Gather hits, then union-find single linkage: two points within eps join.
  std::vector<Vec2> pts;
  pts.reserve(scan.ranges.size());
  for (int i = 0; i < static_cast<int>(scan.ranges.size()); ++i)
    if (scan.is_hit(i)) pts.push_back(scan.point(i));

  const int n = static_cast<int>(pts.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  const double eps2 = eps * eps;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((pts[i] - pts[j]).squaredNorm() <= eps2) {
        const int ri = find(i), rj = find(j);
        if (ri != rj) parent[rj] = ri;
      }

  // Bucket by root, preserving first-appearance order for determinism.
  std::vector<int> root_order;
  std::vector<std::vector<Vec2>> buckets;
  std::vector<int> slot_of(n, -1);
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (slot_of[r] < 0) {
      slot_of[r] = static_cast<int>(buckets.size());
      buckets.emplace_back();
      root_order.push_back(r);
    }
    buckets[slot_of[r]].push_back(pts[i]);
  }

  ClusterResult out;
  for (auto& b : buckets) {
    if (static_cast<int>(b.size()) < min_points) {
      ++out.unfittable;
      continue;
    }
    PointCluster c;
    c.points = std::move(b);
    c.source_scan_time = scan.t;
    out.clusters.push_back(std::move(c));
  }
  return out;
}

}  // namespace asv::perception
