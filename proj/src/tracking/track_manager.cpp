#include "asv/tracking/track_manager.hpp"

#include <algorithm>

namespace asv::tracking {

TrackBelief TrackManager::spawn(const Measurement& m, double t, double extent) {
  TrackBelief tb;
  tb.id = next_id_++;
  tb.state.x << m.z.x(), m.z.y(), 0.0, 0.0;
  tb.state.P.setZero();
  tb.state.P.block<2, 2>(0, 0) = m.R;
  tb.state.P(2, 2) = cfg_.init_vel_var;
  tb.state.P(3, 3) = cfg_.init_vel_var;
  tb.state.t = t;
  tb.status = TrackStatus::kTentative;
  tb.hits = 1;
  tb.last_update_t = t;
  tb.ais_id = m.source_id;
  tb.extent = extent;
  return tb;
}

void TrackManager::step(const std::vector<perception::PointCluster>& clusters,
                        const std::vector<Measurement>& ais, double t) {
  // Predict every track to the step time.
  for (auto& tr : tracks_) {
    const double dt = t - tr.state.t;
    if (dt > 0.0) tr.state = kf_predict(tr.state, dt, cfg_.noise.q);
  }

  // Turn clusters into measurements; degenerate fits are skipped.
  fit_failures_ = 0;
  struct LidarMeas {
    Measurement m;
    double extent;
  };
  std::vector<LidarMeas> lidar;
  lidar.reserve(clusters.size());
  for (const auto& c : clusters) {
    try {
      const auto e = perception::fit_ellipse_stable(c);
      lidar.push_back({perception::ellipse_to_measurement(
                           e, t, cfg_.noise.lidar_base_var,
                           cfg_.noise.lidar_rms_ref),
                       e.semi_major});
    } catch (const perception::FitError&) {
      ++fit_failures_;
    }
  }

  const int nt = static_cast<int>(tracks_.size());
  std::vector<std::optional<Measurement>> assoc_lidar(nt), assoc_ais(nt);
  std::vector<double> assoc_extent(nt, -1.0);

  // AIS identity matches first — they bypass the gate entirely.
  std::vector<bool> ais_used(ais.size(), false);
  for (std::size_t i = 0; i < ais.size(); ++i) {
    if (!ais[i].source_id) continue;
    for (int k = 0; k < nt; ++k) {
      if (tracks_[k].ais_id && *tracks_[k].ais_id == *ais[i].source_id &&
          !assoc_ais[k]) {
        assoc_ais[k] = ais[i];
        ais_used[i] = true;
        break;
      }
    }
  }

  // Greedy gated nearest-neighbor for everything else, best pairs first.
  struct Cand {
    double d2;
    int meas;
    int track;
    bool is_ais;
  };
  std::vector<Cand> cands;
  for (int k = 0; k < nt; ++k) {
    for (std::size_t i = 0; i < lidar.size(); ++i) {
      const double d2 = gate_distance2(tracks_[k].state, lidar[i].m);
      if (d2 < cfg_.gate) cands.push_back({d2, static_cast<int>(i), k, false});
    }
    for (std::size_t i = 0; i < ais.size(); ++i) {
      if (ais_used[i]) continue;
      const double d2 = gate_distance2(tracks_[k].state, ais[i]);
      if (d2 < cfg_.gate) cands.push_back({d2, static_cast<int>(i), k, true});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.d2 != b.d2) return a.d2 < b.d2;
    if (a.track != b.track) return a.track < b.track;
    if (a.meas != b.meas) return a.meas < b.meas;
    return a.is_ais < b.is_ais;
  });
  std::vector<bool> lidar_used(lidar.size(), false);
  for (const auto& c : cands) {
    if (c.is_ais) {
      if (ais_used[c.meas] || assoc_ais[c.track]) continue;
      assoc_ais[c.track] = ais[c.meas];
      ais_used[c.meas] = true;
      if (ais[c.meas].source_id) tracks_[c.track].ais_id = ais[c.meas].source_id;
    } else {
      if (lidar_used[c.meas] || assoc_lidar[c.track]) continue;
      assoc_lidar[c.track] = lidar[c.meas].m;
      assoc_extent[c.track] = lidar[c.meas].extent;
      lidar_used[c.meas] = true;
    }
  }

  // Fuse whatever arrived for each track.
  for (int k = 0; k < nt; ++k) {
    auto& tr = tracks_[k];
    if (!assoc_lidar[k] && !assoc_ais[k]) continue;
    tr.state = fuse_gaussian_product(tr.state, assoc_lidar[k], assoc_ais[k]);
    tr.hits += 1;
    tr.last_update_t = t;
    if (assoc_extent[k] > 0.0) tr.extent = assoc_extent[k];
    tr.status = tr.hits >= cfg_.confirm_hits ? TrackStatus::kConfirmed
                                             : TrackStatus::kTentative;
  }

  // Spawn from leftovers.
  for (std::size_t i = 0; i < lidar.size(); ++i)
    if (!lidar_used[i]) tracks_.push_back(spawn(lidar[i].m, t, lidar[i].extent));
  for (std::size_t i = 0; i < ais.size(); ++i)
    if (!ais_used[i]) tracks_.push_back(spawn(ais[i], t, 1.0));

  // Coast / prune.
  for (auto& tr : tracks_)
    if (tr.last_update_t < t) tr.status = TrackStatus::kCoasting;
  std::erase_if(tracks_, [&](const TrackBelief& tr) {
    return t - tr.last_update_t > cfg_.coast_drop_s;
  });
}

}  // namespace asv::tracking
