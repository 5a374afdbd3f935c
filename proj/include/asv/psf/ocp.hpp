#pragma once

#include <vector>

#include "asv/psf/terminal_set.hpp"
#include "asv/vessel/dynamics.hpp"

namespace asv::psf {

// Per-step obstacle prediction as a disc: center and effective radius
// (physical extent plus any uncertainty inflation) for k = 0..N.
struct ObstacleForecast {
  std::vector<Vec2> positions;
  std::vector<double> radius;
  int source_track_id = -1;  // -1 when built from ground truth
};

struct PsfConfig {
  int horizon = 50;       // N
  double dt = 0.5;        // [s]
  double d_safe = 20.0;   // [m] clearance to the disc boundary, every step
  double d_f = 10.0;      // [m] extra terminal clearance
  Vec3 gamma_u = Vec3::Ones();  // per-channel deviation weights
  double slack_rho = 1e4;       // l1 penalty when constraints must soften
  int max_iterations = 30;
  double tol_step = 1e-8;
  double tol_con = 1e-8;        // hard-constraint satisfaction at exit
  double tol_defect = 1e-9;     // shooting-gap tolerance at exit
  double passthrough_tol = 1e-6;       // ||delta_u||_inf for SAFE_PASSTHROUGH
  double activation_band = 5.0;        // [m] margin under which obstacle rows enter the QP
  bool use_terminal = true;
  enum class DistMode { kKnown, kZero };
  DistMode dist_mode = DistMode::kKnown;
};

enum class OcpStatus { kSafePassthrough, kModified, kRelaxed, kInfeasible };
const char* to_string(OcpStatus s);

struct OcpSolution {
  OcpStatus status = OcpStatus::kInfeasible;
  vessel::ControlInput u0;
  std::vector<vessel::ControlInput> u_seq;   // length N
  std::vector<Vec6> x_seq;                   // length N+1, psi wrapped
  Vec3 delta_u = Vec3::Zero();               // u_L - u0
  double cost = 0.0;                         // sum ||u_k - u_L||^2_W
  double slack_total = 0.0;                  // residual obstacle violation [m]
  double max_violation = 0.0;                // hard-constraint residual at exit
  int iterations = 0;
  double solve_time_ms = 0.0;
  std::vector<double> merit_history;         // non-increasing by construction
};

struct MarginReport {
  std::vector<double> margin;   // per step: min over obstacles of dist - d_safe
  int first_violation_k = -1;   // -1 when no step violates
  double min_margin = 0.0;
};

// Boundary distance minus effective radius at step k.
double distance_to_obstacle(const Vec2& p, const ObstacleForecast& obs, int k);

MarginReport safety_margin_report(const std::vector<Vec6>& x_seq,
                                  const std::vector<ObstacleForecast>& obstacles,
                                  double d_safe);

// Minimal-deviation predictive filter: finds the input sequence closest to
// the agent's proposal (weighted by the input-box-normalized metric) whose
// rollout keeps every step outside the obstacle discs by d_safe, respects the
// state/input boxes, and ends inside the terminal velocity set. Solved by SQP
// on a shooting transcription with an exact affine condensing of the defect
// dynamics; warm started from the previous call's shifted solution.
class SafetyFilter {
 public:
  SafetyFilter(const vessel::VesselParams& params, const PsfConfig& cfg,
               const TerminalSet& terminal);

  OcpSolution filter_control(const vessel::VesselState& state,
                             const vessel::ControlInput& u_agent,
                             const std::vector<ObstacleForecast>& obstacles,
                             const Vec3& tau_d = Vec3::Zero());

  void reset_warm_start() { warm_valid_ = false; }

  const PsfConfig& config() const { return cfg_; }
  const TerminalSet& terminal() const { return terminal_; }

 private:
  Vec3 clamp_input(const Vec3& u) const;
  void rollout(const Vec6& x0, const MatX& U, const Vec3& tau_d, MatX& X) const;

  vessel::VesselParams params_;
  PsfConfig cfg_;
  TerminalSet terminal_;
  Mat3 W_ = Mat3::Identity();  // deviation metric

  bool warm_valid_ = false;
  bool warm_relaxed_ = false;  // previous solve needed the soft constraints
  MatX warm_U_;  // 3 x N
  MatX warm_X_;  // 6 x (N+1)
};

}  // namespace asv::psf
