#pragma once

#include <vector>

#include "asv/perception/ellipse_fit.hpp"
#include "asv/tracking/kalman.hpp"

namespace asv::tracking {

enum class TrackStatus { kTentative, kConfirmed, kCoasting };

struct TrackBelief {
  int id = 0;
  KinematicState state;
  TrackStatus status = TrackStatus::kTentative;
  int hits = 0;
  double last_update_t = 0.0;
  std::optional<int> ais_id;
  double extent = 1.0;  // last fitted semi-major axis [m], for forecasting
};

struct TrackManagerConfig {
  NoiseModel noise;
  double gate = 9.21;         // chi-square(2) at 99%
  int confirm_hits = 3;
  double coast_drop_s = 5.0;  // drop after this long without an update
  double init_vel_var = 4.0;  // [m^2/s^2]
};

// Gated nearest-neighbor multi-target tracker over LiDAR clusters and AIS.
// An AIS identity match overrides the gate; unassociated measurements spawn
// tentative tracks. Ids are never reused within a manager's lifetime.
class TrackManager {
 public:
  explicit TrackManager(const TrackManagerConfig& cfg = {}) : cfg_(cfg) {}

  // Advances all tracks to time t, associates, fuses (prior x lidar x ais as
  // one Gaussian product), spawns, confirms, and prunes.
  void step(const std::vector<perception::PointCluster>& clusters,
            const std::vector<Measurement>& ais, double t);

  const std::vector<TrackBelief>& tracks() const { return tracks_; }
  const TrackManagerConfig& config() const { return cfg_; }

  // Fit failures in the last step (degenerate clusters are skipped, not fatal).
  int last_fit_failures() const { return fit_failures_; }

 private:
  TrackBelief spawn(const Measurement& m, double t, double extent);

  TrackManagerConfig cfg_;
  std::vector<TrackBelief> tracks_;
  int next_id_ = 1;
  int fit_failures_ = 0;
};

}  // namespace asv::tracking
