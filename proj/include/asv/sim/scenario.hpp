#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "asv/guidance/policies.hpp"
#include "asv/guidance/rewards.hpp"
#include "asv/perception/lidar.hpp"
#include "asv/psf/ocp.hpp"
#include "asv/tracking/track_manager.hpp"
#include "asv/vessel/model.hpp"

namespace asv::sim {

// Raised for malformed files (kParse: wrong type / unknown key / bad JSON)
// and for well-formed files whose values break an invariant (kValidation).
// Messages carry the offending field path, e.g. "path.waypoints".
struct ScenarioError : std::runtime_error {
  enum class Kind { kParse, kValidation };
  Kind kind;
  ScenarioError(Kind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
};

// A scripted target: constant velocity, optionally with a constant turn rate
// (the model-mismatch mode — the tracker still assumes straight lines).
struct ObstacleScript {
  int id = 0;
  Vec2 position = Vec2::Zero();  // at t = 0
  Vec2 velocity = Vec2::Zero();
  double turn_rate = 0.0;        // [rad/s]
  double radius = 4.0;           // collision disc [m]
  perception::PlacedShape::Kind shape = perception::PlacedShape::Kind::kEllipse;
  Vec2 extent = Vec2::Zero();    // lidar footprint semi-sizes; 0 -> default
  double heading = 0.0;          // footprint orientation at t = 0
  bool ais_equipped = true;

  Vec2 position_at(double t) const;
  Vec2 velocity_at(double t) const;
  double heading_at(double t) const;
  perception::PlacedShape footprint_at(double t) const;
};

struct LidarSettings {
  int beams = 120;
  double max_range = 100.0;  // [m]
  double noise_sigma = 0.1;  // [m]
  double rate_hz = 1.0;
  double cluster_eps = 2.0;  // [m]
};

struct AisSettings {
  double period_s = 60.0;
  double pos_sigma = 5.0;  // [m] reported-position noise
};

struct Scenario {
  int schema_version = 1;
  std::string name;
  std::uint64_t seed = 0;
  double duration_s = 120.0;

  vessel::VesselParams params;
  vessel::VesselState initial;
  double vessel_radius = 3.0;  // collision disc around the hull [m]

  std::vector<Vec2> waypoints;  // the reference path; >= 2 points
  std::vector<ObstacleScript> obstacles;
  Vec3 tau_d = Vec3::Zero();  // constant environmental force, body frame

  LidarSettings lidar;
  AisSettings ais;
  tracking::TrackManagerConfig tracker;
  psf::PsfConfig psf;
  guidance::RewardConfig rewards;
  guidance::LosConfig los;

  // Throws ScenarioError{kValidation} naming the offending field.
  void validate() const;
};

enum class Difficulty { kStatic, kCrossing, kHeadOn, kMixed };
Difficulty difficulty_from_string(const std::string& s);
const char* to_string(Difficulty d);

// Parse + validate. load_scenario reads a file; the _text variant is the
// same parser on an in-memory document (origin only decorates messages).
Scenario load_scenario(const std::string& path);
Scenario scenario_from_json_text(const std::string& text,
                                 const std::string& origin = "<memory>");

// Canonical dump: every field explicit, fixed key order. Re-parsing the dump
// yields a Scenario that compares exactly equal (round-trip identity).
std::string dump_scenario(const Scenario& s);
void save_scenario(const Scenario& s, const std::string& path);

// Exact (bitwise on doubles) comparison, used by the round-trip checks.
bool scenario_equal(const Scenario& a, const Scenario& b);

// Seeded scenario synthesis. Paths are a few gentle legs from the origin;
// obstacle scripts depend on the difficulty (all stationary, crossing the
// path, meeting head-on, or a mix that also aims traffic at the start area
// and sprinkles turning targets). Initial clearances are guaranteed to be
// at least d_safe + d_f, so the filter always starts feasible.
Scenario generate_random_scenario(std::uint64_t seed, Difficulty difficulty);

}  // namespace asv::sim
