#pragma once

#include <string>

#include "asv/core/rng.hpp"
#include "asv/guidance/path.hpp"
#include "asv/vessel/model.hpp"

namespace asv::guidance {

enum class PolicyKind {
  kLosFollow,
  kConstantAhead,
  kRandom,
  kAdversarialTowardNearestObstacle,
};

PolicyKind policy_from_string(const std::string& s);  // throws PathError on unknown
std::string to_string(PolicyKind k);

struct PolicyAction {
  vessel::ControlInput u;
  PolicyKind source = PolicyKind::kConstantAhead;
};

struct LosConfig {
  double lookahead = 15.0;   // [m]
  double cruise_speed = 1.2; // [m/s]
  double k_heading = 2.0;    // yaw moment per rad of course error
  double k_yaw_damp = 1.5;   // yaw-rate damping
  double k_surge = 2.0;      // surge force per m/s of speed error
  // Held at cruise surge, yaw moments past ~0.39 settle into steady turns
  // whose sway exceeds the vessel's velocity box; capped so a held LOS
  // command always has an in-box steady state.
  double tau_r_cap = 0.25;
};

// What a policy is allowed to see of the world: obstacle centers only, used
// by the adversarial mode.
struct PolicyWorldView {
  std::vector<Vec2> obstacle_centers;
};

// Scripted low-level agents producing generalized forces, always clamped to
// the vessel's input box. The random policy draws from its own stream.
class ScriptedPolicy {
 public:
  ScriptedPolicy(PolicyKind kind, const vessel::VesselParams& params,
                 std::uint64_t seed, LosConfig los = {});

  PolicyAction act(const vessel::VesselState& s, const PathSpec& path,
                   const PolicyWorldView& world);

  PolicyKind kind() const { return kind_; }

 private:
  PolicyKind kind_;
  vessel::VesselParams params_;
  LosConfig los_;
  Rng rng_;
};

}  // namespace asv::guidance
