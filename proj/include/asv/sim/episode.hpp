#pragma once

#include <string>
#include <utility>
#include <vector>

#include "asv/sim/scenario.hpp"

namespace asv::sim {

// One line of the simplified AIS log: "stamp id x y speed course".
struct AisRecord {
  double t = 0.0;
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;   // [m/s]
  double course = 0.0;  // [rad]
};

std::vector<AisRecord> read_ais_log(const std::string& path);
void write_ais_log(const std::vector<AisRecord>& records,
                   const std::string& path);

// What the safety filter is told about obstacle motion: tracker beliefs,
// scripted ground truth, or nothing at all.
enum class InfoMode { kTracked, kGroundTruth, kNone };
InfoMode info_mode_from_string(const std::string& s);
const char* to_string(InfoMode m);

struct EpisodeOptions {
  guidance::PolicyKind policy = guidance::PolicyKind::kLosFollow;
  bool psf_enabled = true;
  InfoMode info_mode = InfoMode::kTracked;

  bool record_tube = true;  // per-scan open-loop track predictions
  int tube_steps = 30;
  double tube_dt = 1.0;

  // Optional prebuilt terminal set (skips the per-episode construction when
  // many episodes share vessel params). Not owned.
  const psf::TerminalSet* terminal = nullptr;
  // Optional AIS replay: when set, these records are delivered instead of
  // synthesizing AIS from the obstacle scripts. Not owned.
  const std::vector<AisRecord>* ais_replay = nullptr;
};

// Per-obstacle view at one tick: script truth plus the matched track belief.
struct ObstacleSnapshot {
  Vec2 true_pos = Vec2::Zero();
  bool tracked = false;
  Vec2 est_pos = Vec2::Zero();   // valid when tracked
  Mat2 est_cov = Mat2::Zero();   // position block, valid when tracked
};

struct TickRecord {
  int tick = 0;
  double t = 0.0;
  vessel::VesselState state;   // at the start of the tick
  Vec3 u_agent = Vec3::Zero();
  Vec3 u_applied = Vec3::Zero();
  double delta_u_inf = 0.0;

  bool psf_ran = false;        // false when the filter is disabled
  psf::OcpStatus psf_status = psf::OcpStatus::kSafePassthrough;
  int psf_iterations = 0;
  double psf_cost = 0.0;
  double psf_max_violation = 0.0;
  double solve_ms = 0.0;       // wall clock; never written to trace.csv

  double min_margin = 0.0;     // min over obstacles of separation - d_safe
  double cte = 0.0;
  double heading_err = 0.0;
  double r_path = 0.0;
  double r_colav = 0.0;
  double r_psf = 0.0;
  double r_total = 0.0;
  bool collision = false;

  std::vector<ObstacleSnapshot> obstacles;  // aligned with scenario order
};

struct TubeRow {
  double t = 0.0;   // scan time the prediction was made at
  int track_id = 0;
  int step = 0;     // 1-based prediction step
  double x = 0.0;
  double y = 0.0;
  double sigma = 0.0;  // sqrt of the largest position-covariance eigenvalue
};

struct EpisodeTrace {
  Scenario scenario;
  guidance::PolicyKind policy = guidance::PolicyKind::kLosFollow;
  bool psf_enabled = true;
  InfoMode info_mode = InfoMode::kTracked;

  std::vector<TickRecord> ticks;
  std::vector<TubeRow> tube;
  std::vector<AisRecord> ais_log;  // messages delivered during the run

  bool aborted = false;            // integration divergence
  std::string abort_reason;
};

struct EpisodeSummary {
  int collisions = 0;
  double min_distance = 0.0;  // closest hull-to-hull separation [m]
  double mean_abs_cte = 0.0;
  double cumulative_reward = 0.0;
  double intervention_rate = 0.0;  // fraction of ticks the filter changed u
  double mean_solve_ms = 0.0;
  double max_solve_ms = 0.0;
  int ticks = 0;
  int n_passthrough = 0;
  int n_modified = 0;
  int n_relaxed = 0;
  int n_infeasible = 0;
};

// Pure function of the trace; run_episode's summary is exactly this.
EpisodeSummary summarize(const EpisodeTrace& trace);

// Closed loop at the dynamics rate: sense -> track -> policy -> filter ->
// integrate, with rewards and margins logged every tick. Deterministic for a
// fixed (scenario, options) pair. The episode ends at the configured duration
// or at the first collision; integration divergence sets `aborted` and
// returns the partial trace instead of throwing.
std::pair<EpisodeTrace, EpisodeSummary> run_episode(const Scenario& scenario,
                                                    const EpisodeOptions& opt);

}  // namespace asv::sim
