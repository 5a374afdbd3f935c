#include "asv/sim/episode.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "asv/core/rng.hpp"
#include "asv/guidance/path.hpp"
#include "asv/tracking/kalman.hpp"
#include "asv/vessel/dynamics.hpp"

namespace asv::sim {

std::vector<AisRecord> read_ais_log(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ScenarioError(ScenarioError::Kind::kParse,
                        path + ": cannot open file");
  std::vector<AisRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    AisRecord r;
    if (!(ss >> r.t >> r.id >> r.x >> r.y >> r.speed >> r.course))
      throw ScenarioError(ScenarioError::Kind::kParse,
                          path + ":" + std::to_string(lineno) +
                              ": expected \"stamp id x y speed course\"");
    out.push_back(r);
  }
  return out;
}

void write_ais_log(const std::vector<AisRecord>& records,
                   const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ScenarioError(ScenarioError::Kind::kValidation,
                        path + ": cannot open for writing");
  out << "# stamp id x y speed course\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%.17g %d %.17g %.17g %.17g %.17g\n", r.t,
                  r.id, r.x, r.y, r.speed, r.course);
    out << buf;
  }
}

InfoMode info_mode_from_string(const std::string& s) {
  if (s == "tracked") return InfoMode::kTracked;
  if (s == "ground-truth" || s == "ground_truth") return InfoMode::kGroundTruth;
  if (s == "none") return InfoMode::kNone;
  throw ScenarioError(ScenarioError::Kind::kValidation,
                      "info-mode: expected tracked, ground-truth or none, "
                      "got \"" + s + "\"");
}

const char* to_string(InfoMode m) {
  switch (m) {
    case InfoMode::kTracked: return "tracked";
    case InfoMode::kGroundTruth: return "ground-truth";
    case InfoMode::kNone: return "none";
  }
  return "?";
}

EpisodeSummary summarize(const EpisodeTrace& trace) {
  EpisodeSummary s;
  s.ticks = static_cast<int>(trace.ticks.size());
  s.min_distance = std::numeric_limits<double>::infinity();
  double cte_sum = 0.0, solve_sum = 0.0;
  int solves = 0, interventions = 0;
  for (const auto& r : trace.ticks) {
    if (r.collision) ++s.collisions;
    s.min_distance =
        std::min(s.min_distance, r.min_margin + trace.scenario.psf.d_safe);
    cte_sum += std::abs(r.cte);
    s.cumulative_reward += r.r_total;
    if (r.psf_ran) {
      ++solves;
      solve_sum += r.solve_ms;
      s.max_solve_ms = std::max(s.max_solve_ms, r.solve_ms);
      switch (r.psf_status) {
        case psf::OcpStatus::kSafePassthrough: ++s.n_passthrough; break;
        case psf::OcpStatus::kModified: ++s.n_modified; break;
        case psf::OcpStatus::kRelaxed: ++s.n_relaxed; break;
        case psf::OcpStatus::kInfeasible: ++s.n_infeasible; break;
      }
      if (r.psf_status != psf::OcpStatus::kSafePassthrough) ++interventions;
    }
  }
  if (s.ticks > 0) {
    s.mean_abs_cte = cte_sum / s.ticks;
    s.intervention_rate = static_cast<double>(interventions) / s.ticks;
  }
  if (solves > 0) s.mean_solve_ms = solve_sum / solves;
  return s;
}

namespace {

// Tracks worth acting on: confirmed now, or coasting after confirmation.
bool established(const tracking::TrackBelief& tr, int confirm_hits) {
  return tr.hits >= confirm_hits;
}

}  // namespace

std::pair<EpisodeTrace, EpisodeSummary> run_episode(const Scenario& scenario,
                                                    const EpisodeOptions& opt) {
  scenario.validate();

  EpisodeTrace trace;
  trace.scenario = scenario;
  trace.policy = opt.policy;
  trace.psf_enabled = opt.psf_enabled;
  trace.info_mode = opt.info_mode;

  const double dt = scenario.params.dt;
  const int n_ticks =
      std::max(1, static_cast<int>(std::llround(scenario.duration_s / dt)));
  trace.ticks.reserve(n_ticks);

  const guidance::PathSpec path(scenario.waypoints);
  Rng lidar_rng(scenario.seed, "lidar");
  Rng ais_rng(scenario.seed, "ais");
  guidance::ScriptedPolicy policy(opt.policy, scenario.params, scenario.seed,
                                  scenario.los);
  tracking::TrackManager tracker(scenario.tracker);

  perception::LidarConfig lidar_cfg;
  lidar_cfg.beam_count = scenario.lidar.beams;
  lidar_cfg.max_range = scenario.lidar.max_range;
  lidar_cfg.noise_sigma = scenario.lidar.noise_sigma;

  std::optional<psf::TerminalSet> owned_terminal;
  std::optional<psf::SafetyFilter> filter;
  if (opt.psf_enabled) {
    const psf::TerminalSet* term = opt.terminal;
    if (!term) {
      owned_terminal =
          psf::build_terminal_set(scenario.params, scenario.params.dt);
      term = &*owned_terminal;
    }
    filter.emplace(scenario.params, scenario.psf, *term);
  }

  const int lidar_every = std::max(
      1, static_cast<int>(std::llround(1.0 / (scenario.lidar.rate_hz * dt))));
  const int ais_period_ticks =
      std::max(1, static_cast<int>(std::llround(scenario.ais.period_s / dt)));

  // Replay mode: deliver recorded messages at their nearest tick.
  std::vector<std::vector<AisRecord>> replay_at;
  if (opt.ais_replay) {
    replay_at.resize(n_ticks);
    for (const auto& r : *opt.ais_replay) {
      const long long k = std::llround(r.t / dt);
      if (k >= 0 && k < n_ticks) replay_at[static_cast<std::size_t>(k)].push_back(r);
    }
  }

  const int N = scenario.psf.horizon;
  vessel::VesselState state = scenario.initial;
  state.t = 0.0;
  std::vector<guidance::BeamSample> latest_beams;

  for (int k = 0; k < n_ticks; ++k) {
    const double t = state.t;
    const Vec2 pos(state.x, state.y);

    // ---- Sensors.
    std::vector<perception::PointCluster> clusters;
    std::vector<tracking::Measurement> ais_meas;
    if (k % lidar_every == 0) {
      std::vector<perception::PlacedShape> shapes;
      shapes.reserve(scenario.obstacles.size());
      for (const auto& o : scenario.obstacles) shapes.push_back(o.footprint_at(t));
      const auto scan = perception::simulate_scan(pos, state.psi, t, shapes,
                                                  lidar_cfg, lidar_rng);
      auto clustered = perception::cluster_points(scan, scenario.lidar.cluster_eps);
      clusters = std::move(clustered.clusters);
      latest_beams.clear();
      latest_beams.reserve(scan.angles.size());
      for (std::size_t i = 0; i < scan.angles.size(); ++i)
        latest_beams.push_back(
            {scan.is_hit(static_cast<int>(i)) ? scan.ranges[i]
                                              : lidar_cfg.max_range,
             scan.angles[i]});
    }
    if (opt.ais_replay) {
      for (const auto& r : replay_at[k]) {
        trace.ais_log.push_back(r);
        ais_meas.push_back({Vec2(r.x, r.y), scenario.tracker.noise.R_ais,
                            tracking::MeasurementSource::kAis, t, r.id});
      }
    } else {
      for (const auto& o : scenario.obstacles) {
        if (!o.ais_equipped) continue;
        int phase = static_cast<int>(
            std::llround(std::fmod(7.0 * o.id, scenario.ais.period_s) / dt));
        phase %= ais_period_ticks;
        if (k % ais_period_ticks != phase) continue;
        const Vec2 p = o.position_at(t);
        const Vec2 vel = o.velocity_at(t);
        AisRecord rec;
        rec.t = t;
        rec.id = o.id;
        rec.x = p.x() + ais_rng.normal(0.0, scenario.ais.pos_sigma);
        rec.y = p.y() + ais_rng.normal(0.0, scenario.ais.pos_sigma);
        rec.speed = vel.norm();
        rec.course = vel.norm() > 1e-12 ? std::atan2(vel.y(), vel.x()) : 0.0;
        trace.ais_log.push_back(rec);
        ais_meas.push_back({Vec2(rec.x, rec.y), scenario.tracker.noise.R_ais,
                            tracking::MeasurementSource::kAis, t, o.id});
      }
    }
    tracker.step(clusters, ais_meas, t);

    // ---- Obstacle motion info handed to the filter.
    std::vector<psf::ObstacleForecast> forecasts;
    if (opt.psf_enabled && opt.info_mode == InfoMode::kGroundTruth) {
      for (const auto& o : scenario.obstacles) {
        psf::ObstacleForecast f;
        f.positions.resize(N + 1);
        f.radius.assign(N + 1, o.radius + scenario.vessel_radius);
        for (int j = 0; j <= N; ++j)
          f.positions[j] = o.position_at(t + j * scenario.psf.dt);
        forecasts.push_back(std::move(f));
      }
    } else if (opt.psf_enabled && opt.info_mode == InfoMode::kTracked) {
      for (const auto& tr : tracker.tracks()) {
        if (!established(tr, scenario.tracker.confirm_hits)) continue;
        psf::ObstacleForecast f;
        f.source_track_id = tr.id;
        f.positions.resize(N + 1);
        f.radius.resize(N + 1);
        const auto preds = tracking::predict_horizon(tr.state, N,
                                                     scenario.psf.dt,
                                                     scenario.tracker.noise.q);
        auto inflate = [&](const Mat2& P) {
          // Largest eigenvalue of a symmetric 2x2, grown but capped so a
          // stale track cannot freeze the whole plane.
          const double tr2 = 0.5 * (P(0, 0) + P(1, 1));
          const double det = P(0, 0) * P(1, 1) - P(0, 1) * P(1, 0);
          const double disc = std::sqrt(std::max(0.0, tr2 * tr2 - det));
          return std::min(5.0, std::sqrt(std::max(0.0, tr2 + disc)));
        };
        f.positions[0] = tr.state.x.head<2>();
        f.radius[0] = tr.extent + scenario.vessel_radius +
                      inflate(tr.state.P.topLeftCorner<2, 2>());
        for (int j = 1; j <= N; ++j) {
          f.positions[j] = preds[j - 1].x.head<2>();
          f.radius[j] = tr.extent + scenario.vessel_radius +
                        inflate(preds[j - 1].P.topLeftCorner<2, 2>());
        }
        forecasts.push_back(std::move(f));
      }
    }

    // ---- Agent proposal.
    guidance::PolicyWorldView view;
    view.obstacle_centers.reserve(scenario.obstacles.size());
    for (const auto& o : scenario.obstacles)
      view.obstacle_centers.push_back(o.position_at(t));
    const Vec3 u_agent = policy.act(state, path, view).u.to_vector();

    // ---- Safety filter.
    TickRecord rec;
    rec.tick = k;
    rec.t = t;
    rec.state = state;
    rec.u_agent = u_agent;
    if (filter) {
      const auto sol = filter->filter_control(
          state, vessel::ControlInput::from_vector(u_agent), forecasts,
          scenario.tau_d);
      rec.u_applied = sol.u0.to_vector();
      rec.delta_u_inf = sol.delta_u.cwiseAbs().maxCoeff();
      rec.psf_ran = true;
      rec.psf_status = sol.status;
      rec.psf_iterations = sol.iterations;
      rec.psf_cost = sol.cost;
      rec.psf_max_violation = sol.max_violation;
      rec.solve_ms = sol.solve_time_ms;
    } else {
      rec.u_applied =
          u_agent.cwiseMax(scenario.params.tau_lb).cwiseMin(scenario.params.tau_ub);
      rec.delta_u_inf = 0.0;
    }

    // ---- Margins, collision, rewards.
    double min_sep = std::numeric_limits<double>::infinity();
    for (const auto& o : scenario.obstacles)
      min_sep = std::min(min_sep, (pos - o.position_at(t)).norm() - o.radius -
                                      scenario.vessel_radius);
    rec.min_margin = min_sep - scenario.psf.d_safe;
    rec.collision = min_sep < 0.0;

    rec.cte = guidance::cross_track_error(path, pos);
    rec.heading_err = guidance::heading_error(path, pos, state.psi);
    rec.r_path =
        guidance::reward_path(state.u, rec.heading_err, rec.cte, scenario.rewards);
    rec.r_colav = guidance::reward_colav(latest_beams, scenario.rewards);
    rec.r_psf = guidance::reward_psf(rec.u_agent, rec.u_applied,
                                     scenario.params.tau_ub, scenario.rewards);
    rec.r_total = guidance::reward_total(rec.r_path, rec.r_colav, rec.r_psf,
                                         rec.collision, scenario.rewards);

    // ---- Per-obstacle snapshots (truth + matched belief).
    rec.obstacles.resize(scenario.obstacles.size());
    for (std::size_t i = 0; i < scenario.obstacles.size(); ++i) {
      auto& snap = rec.obstacles[i];
      snap.true_pos = scenario.obstacles[i].position_at(t);
      const tracking::TrackBelief* match = nullptr;
      for (const auto& tr : tracker.tracks())
        if (tr.ais_id && *tr.ais_id == scenario.obstacles[i].id) {
          match = &tr;
          break;
        }
      if (!match) {
        double best = 25.0;  // don't report unrelated far-away tracks
        for (const auto& tr : tracker.tracks()) {
          if (!established(tr, scenario.tracker.confirm_hits)) continue;
          const double d = (tr.state.x.head<2>() - snap.true_pos).norm();
          if (d < best) {
            best = d;
            match = &tr;
          }
        }
      }
      if (match) {
        snap.tracked = true;
        snap.est_pos = match->state.x.head<2>();
        snap.est_cov = match->state.P.topLeftCorner<2, 2>();
      }
    }

    // ---- Tracker tube (open-loop predictions at scan ticks).
    if (opt.record_tube && k % lidar_every == 0) {
      for (const auto& tr : tracker.tracks()) {
        if (!established(tr, scenario.tracker.confirm_hits)) continue;
        const auto preds = tracking::predict_horizon(
            tr.state, opt.tube_steps, opt.tube_dt, scenario.tracker.noise.q);
        for (int j = 0; j < static_cast<int>(preds.size()); ++j) {
          const Mat2 P = preds[j].P.topLeftCorner<2, 2>();
          const double tr2 = 0.5 * (P(0, 0) + P(1, 1));
          const double det = P(0, 0) * P(1, 1) - P(0, 1) * P(1, 0);
          const double disc = std::sqrt(std::max(0.0, tr2 * tr2 - det));
          trace.tube.push_back({t, tr.id, j + 1, preds[j].x(0), preds[j].x(1),
                                std::sqrt(std::max(0.0, tr2 + disc))});
        }
      }
    }

    trace.ticks.push_back(std::move(rec));
    if (trace.ticks.back().collision) break;  // episode ends on first contact

    // ---- Integrate.
    try {
      const vessel::Disturbance d{scenario.tau_d(0), scenario.tau_d(1),
                                  scenario.tau_d(2)};
      state = vessel::step_rk4(
          scenario.params, state,
          vessel::ControlInput::from_vector(trace.ticks.back().u_applied), d,
          dt);
    } catch (const vessel::IntegrationError& e) {
      trace.aborted = true;
      trace.abort_reason =
          std::string(e.what()) + " at tick " + std::to_string(k);
      break;
    }
  }

  return {trace, summarize(trace)};
}

}  // namespace asv::sim
