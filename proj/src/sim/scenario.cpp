#include "asv/sim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "asv/core/angles.hpp"
#include "asv/core/rng.hpp"
#include "asv/guidance/path.hpp"

namespace asv::sim {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Obstacle kinematics

Vec2 ObstacleScript::position_at(double t) const {
  if (std::abs(turn_rate) < 1e-12) return position + t * velocity;
  const double speed = velocity.norm();
  if (speed < 1e-12) return position;
  const double th0 = std::atan2(velocity.y(), velocity.x());
  const double th = th0 + turn_rate * t;
  return position + (speed / turn_rate) *
                        Vec2(std::sin(th) - std::sin(th0),
                             -(std::cos(th) - std::cos(th0)));
}

Vec2 ObstacleScript::velocity_at(double t) const {
  if (std::abs(turn_rate) < 1e-12) return velocity;
  const double c = std::cos(turn_rate * t), s = std::sin(turn_rate * t);
  return Vec2(c * velocity.x() - s * velocity.y(),
              s * velocity.x() + c * velocity.y());
}

double ObstacleScript::heading_at(double t) const {
  return wrap_angle(heading + turn_rate * t);
}

perception::PlacedShape ObstacleScript::footprint_at(double t) const {
  perception::PlacedShape ps;
  ps.kind = shape;
  ps.center = position_at(t);
  ps.theta = heading_at(t);
  ps.ax = extent.x();
  ps.ay = extent.y();
  return ps;
}

// ---------------------------------------------------------------------------
// Parsing helpers: every accessor knows its field path so errors read like
// "obstacles[2].radius: expected a number".

namespace {

[[noreturn]] void fail_parse(const std::string& path, const std::string& what) {
  throw ScenarioError(ScenarioError::Kind::kParse, path + ": " + what);
}

[[noreturn]] void fail_valid(const std::string& path, const std::string& what) {
  throw ScenarioError(ScenarioError::Kind::kValidation, path + ": " + what);
}

std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

void check_keys(const ordered_json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail_parse(join(path, it.key()), "unknown key");
  }
}

const ordered_json* find(const ordered_json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const ordered_json& section(const ordered_json& obj, const std::string& path,
                            const char* key, const ordered_json& fallback) {
  const ordered_json* p = find(obj, key);
  if (!p) return fallback;
  if (!p->is_object()) fail_parse(join(path, key), "expected an object");
  return *p;
}

double num_or(const ordered_json& obj, const std::string& path,
              const char* key, double dflt) {
  const ordered_json* p = find(obj, key);
  if (!p) return dflt;
  if (!p->is_number()) fail_parse(join(path, key), "expected a number");
  return p->get<double>();
}

int int_or(const ordered_json& obj, const std::string& path, const char* key,
           int dflt) {
  const ordered_json* p = find(obj, key);
  if (!p) return dflt;
  if (!p->is_number_integer()) fail_parse(join(path, key), "expected an integer");
  return p->get<int>();
}

bool bool_or(const ordered_json& obj, const std::string& path, const char* key,
             bool dflt) {
  const ordered_json* p = find(obj, key);
  if (!p) return dflt;
  if (!p->is_boolean()) fail_parse(join(path, key), "expected a boolean");
  return p->get<bool>();
}

std::string str_or(const ordered_json& obj, const std::string& path,
                   const char* key, const std::string& dflt) {
  const ordered_json* p = find(obj, key);
  if (!p) return dflt;
  if (!p->is_string()) fail_parse(join(path, key), "expected a string");
  return p->get<std::string>();
}

Vec3 vec3_or(const ordered_json& obj, const std::string& path, const char* key,
             const Vec3& dflt) {
  const ordered_json* p = find(obj, key);
  if (!p) return dflt;
  if (!p->is_array() || p->size() != 3)
    fail_parse(join(path, key), "expected an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!(*p)[i].is_number())
      fail_parse(join(path, key), "expected an array of 3 numbers");
    v(i) = (*p)[i].get<double>();
  }
  return v;
}

Vec2 vec2_at(const ordered_json& arr, const std::string& path) {
  if (!arr.is_array() || arr.size() != 2 || !arr[0].is_number() ||
      !arr[1].is_number())
    fail_parse(path, "expected [x, y]");
  return Vec2(arr[0].get<double>(), arr[1].get<double>());
}

Mat3 mat3_or(const ordered_json& obj, const std::string& path, const char* key,
             const Mat3& dflt) {
  const ordered_json* p = find(obj, key);
  if (!p) return dflt;
  if (!p->is_array() || p->size() != 3)
    fail_parse(join(path, key), "expected a 3x3 array");
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    const auto& row = (*p)[i];
    if (!row.is_array() || row.size() != 3)
      fail_parse(join(path, key), "expected a 3x3 array");
    for (int j = 0; j < 3; ++j) {
      if (!row[j].is_number()) fail_parse(join(path, key), "expected a 3x3 array");
      m(i, j) = row[j].get<double>();
    }
  }
  return m;
}

ordered_json vec3_json(const Vec3& v) {
  return ordered_json::array({v(0), v(1), v(2)});
}

ordered_json vec2_json(const Vec2& v) {
  return ordered_json::array({v(0), v(1)});
}

const char* shape_name(perception::PlacedShape::Kind k) {
  return k == perception::PlacedShape::Kind::kRect ? "rect" : "ellipse";
}

const char* dist_mode_name(psf::PsfConfig::DistMode m) {
  return m == psf::PsfConfig::DistMode::kZero ? "zero" : "known";
}

}  // namespace

// ---------------------------------------------------------------------------

static Scenario scenario_from_json(const ordered_json& root) {
  if (!root.is_object())
    fail_parse("", "top level must be a JSON object");
  check_keys(root, "",
             {"schema_version", "name", "seed", "duration_s", "vessel", "path",
              "obstacles", "disturbance", "lidar", "ais", "tracker", "psf",
              "rewards", "guidance"});

  Scenario s;
  s.schema_version = int_or(root, "", "schema_version", 1);
  s.name = str_or(root, "", "name", "");
  {
    const ordered_json* p = find(root, "seed");
    if (p) {
      if (!p->is_number_integer() ||
          (p->is_number_integer() && !p->is_number_unsigned() &&
           p->get<std::int64_t>() < 0))
        fail_parse("seed", "expected a non-negative integer");
      s.seed = p->get<std::uint64_t>();
    }
  }
  s.duration_s = num_or(root, "", "duration_s", 120.0);

  static const ordered_json kEmpty = ordered_json::object();

  {
    const auto& v = section(root, "", "vessel", kEmpty);
    check_keys(v, "vessel", {"initial", "radius", "params"});
    s.vessel_radius = num_or(v, "vessel", "radius", 3.0);
    const auto& init = section(v, "vessel", "initial", kEmpty);
    check_keys(init, "vessel.initial", {"x", "y", "psi", "u", "v", "r"});
    s.initial.x = num_or(init, "vessel.initial", "x", 0.0);
    s.initial.y = num_or(init, "vessel.initial", "y", 0.0);
    s.initial.psi = num_or(init, "vessel.initial", "psi", 0.0);
    s.initial.u = num_or(init, "vessel.initial", "u", 0.0);
    s.initial.v = num_or(init, "vessel.initial", "v", 0.0);
    s.initial.r = num_or(init, "vessel.initial", "r", 0.0);
    s.initial.t = 0.0;

    const auto& pp = section(v, "vessel", "params", kEmpty);
    check_keys(pp, "vessel.params",
               {"M", "d_lin", "d_quad", "tau_lb", "tau_ub", "nu_lb", "nu_ub",
                "dt"});
    vessel::VesselParams dflt;
    s.params.M = mat3_or(pp, "vessel.params", "M", dflt.M);
    s.params.d_lin = vec3_or(pp, "vessel.params", "d_lin", dflt.d_lin);
    s.params.d_quad = vec3_or(pp, "vessel.params", "d_quad", dflt.d_quad);
    s.params.tau_lb = vec3_or(pp, "vessel.params", "tau_lb", dflt.tau_lb);
    s.params.tau_ub = vec3_or(pp, "vessel.params", "tau_ub", dflt.tau_ub);
    const Vec3 nu_lb = vec3_or(pp, "vessel.params", "nu_lb", dflt.x_lb.tail<3>());
    const Vec3 nu_ub = vec3_or(pp, "vessel.params", "nu_ub", dflt.x_ub.tail<3>());
    s.params.x_lb.tail<3>() = nu_lb;
    s.params.x_ub.tail<3>() = nu_ub;
    s.params.dt = num_or(pp, "vessel.params", "dt", dflt.dt);
  }

  {
    const ordered_json* p = find(root, "path");
    if (!p || !p->is_object() || !find(*p, "waypoints"))
      fail_valid("path.waypoints", "required (at least two [x, y] points)");
    check_keys(*p, "path", {"waypoints"});
    const auto& wp = *find(*p, "waypoints");
    if (!wp.is_array())
      fail_parse("path.waypoints", "expected an array of [x, y]");
    for (std::size_t i = 0; i < wp.size(); ++i)
      s.waypoints.push_back(
          vec2_at(wp[i], "path.waypoints[" + std::to_string(i) + "]"));
  }

  {
    const ordered_json* arr = find(root, "obstacles");
    if (arr) {
      if (!arr->is_array()) fail_parse("obstacles", "expected an array");
      for (std::size_t i = 0; i < arr->size(); ++i) {
        const std::string op = "obstacles[" + std::to_string(i) + "]";
        const auto& o = (*arr)[i];
        if (!o.is_object()) fail_parse(op, "expected an object");
        check_keys(o, op,
                   {"id", "x", "y", "vx", "vy", "turn_rate", "radius", "shape",
                    "extent", "heading", "ais_equipped"});
        ObstacleScript ob;
        ob.id = int_or(o, op, "id", static_cast<int>(i) + 1);
        ob.position =
            Vec2(num_or(o, op, "x", 0.0), num_or(o, op, "y", 0.0));
        ob.velocity =
            Vec2(num_or(o, op, "vx", 0.0), num_or(o, op, "vy", 0.0));
        ob.turn_rate = num_or(o, op, "turn_rate", 0.0);
        ob.radius = num_or(o, op, "radius", 4.0);
        const std::string shape = str_or(o, op, "shape", "ellipse");
        if (shape == "ellipse")
          ob.shape = perception::PlacedShape::Kind::kEllipse;
        else if (shape == "rect")
          ob.shape = perception::PlacedShape::Kind::kRect;
        else
          fail_parse(op + ".shape", "expected \"ellipse\" or \"rect\"");
        if (const ordered_json* e = find(o, "extent"))
          ob.extent = vec2_at(*e, op + ".extent");
        else
          ob.extent = Vec2(ob.radius, 0.6 * ob.radius);
        if (find(o, "heading"))
          ob.heading = num_or(o, op, "heading", 0.0);
        else
          ob.heading = ob.velocity.norm() > 1e-12
                           ? std::atan2(ob.velocity.y(), ob.velocity.x())
                           : 0.0;
        ob.ais_equipped = bool_or(o, op, "ais_equipped", true);
        s.obstacles.push_back(ob);
      }
    }
  }

  {
    const auto& d = section(root, "", "disturbance", kEmpty);
    check_keys(d, "disturbance", {"tau_d"});
    s.tau_d = vec3_or(d, "disturbance", "tau_d", Vec3::Zero());
  }

  {
    const auto& l = section(root, "", "lidar", kEmpty);
    check_keys(l, "lidar",
               {"beams", "max_range", "noise_sigma", "rate_hz", "cluster_eps"});
    LidarSettings dflt;
    s.lidar.beams = int_or(l, "lidar", "beams", dflt.beams);
    s.lidar.max_range = num_or(l, "lidar", "max_range", dflt.max_range);
    s.lidar.noise_sigma = num_or(l, "lidar", "noise_sigma", dflt.noise_sigma);
    s.lidar.rate_hz = num_or(l, "lidar", "rate_hz", dflt.rate_hz);
    s.lidar.cluster_eps = num_or(l, "lidar", "cluster_eps", dflt.cluster_eps);
  }

  {
    const auto& a = section(root, "", "ais", kEmpty);
    check_keys(a, "ais", {"period_s", "pos_sigma"});
    AisSettings dflt;
    s.ais.period_s = num_or(a, "ais", "period_s", dflt.period_s);
    s.ais.pos_sigma = num_or(a, "ais", "pos_sigma", dflt.pos_sigma);
  }

  {
    const auto& t = section(root, "", "tracker", kEmpty);
    check_keys(t, "tracker",
               {"q", "r_ais_var", "lidar_base_var", "lidar_rms_ref", "gate",
                "confirm_hits", "coast_drop_s", "init_vel_var"});
    tracking::TrackManagerConfig dflt;
    s.tracker.noise.q = num_or(t, "tracker", "q", dflt.noise.q);
    s.tracker.noise.R_ais =
        num_or(t, "tracker", "r_ais_var", dflt.noise.R_ais(0, 0)) *
        Mat2::Identity();
    s.tracker.noise.lidar_base_var =
        num_or(t, "tracker", "lidar_base_var", dflt.noise.lidar_base_var);
    s.tracker.noise.lidar_rms_ref =
        num_or(t, "tracker", "lidar_rms_ref", dflt.noise.lidar_rms_ref);
    s.tracker.gate = num_or(t, "tracker", "gate", dflt.gate);
    s.tracker.confirm_hits =
        int_or(t, "tracker", "confirm_hits", dflt.confirm_hits);
    s.tracker.coast_drop_s =
        num_or(t, "tracker", "coast_drop_s", dflt.coast_drop_s);
    s.tracker.init_vel_var =
        num_or(t, "tracker", "init_vel_var", dflt.init_vel_var);
  }

  {
    const auto& p = section(root, "", "psf", kEmpty);
    check_keys(p, "psf",
               {"horizon", "dt", "d_safe", "d_f", "gamma_u", "slack_rho",
                "max_iterations", "passthrough_tol", "activation_band",
                "use_terminal", "dist_mode"});
    psf::PsfConfig dflt;
    s.psf.horizon = int_or(p, "psf", "horizon", dflt.horizon);
    s.psf.dt = num_or(p, "psf", "dt", dflt.dt);
    s.psf.d_safe = num_or(p, "psf", "d_safe", dflt.d_safe);
    s.psf.d_f = num_or(p, "psf", "d_f", dflt.d_f);
    s.psf.gamma_u = vec3_or(p, "psf", "gamma_u", dflt.gamma_u);
    s.psf.slack_rho = num_or(p, "psf", "slack_rho", dflt.slack_rho);
    s.psf.max_iterations =
        int_or(p, "psf", "max_iterations", dflt.max_iterations);
    s.psf.passthrough_tol =
        num_or(p, "psf", "passthrough_tol", dflt.passthrough_tol);
    s.psf.activation_band =
        num_or(p, "psf", "activation_band", dflt.activation_band);
    s.psf.use_terminal = bool_or(p, "psf", "use_terminal", dflt.use_terminal);
    const std::string dm = str_or(p, "psf", "dist_mode", "known");
    if (dm == "known")
      s.psf.dist_mode = psf::PsfConfig::DistMode::kKnown;
    else if (dm == "zero")
      s.psf.dist_mode = psf::PsfConfig::DistMode::kZero;
    else
      fail_parse("psf.dist_mode", "expected \"known\" or \"zero\"");
  }

  {
    const auto& r = section(root, "", "rewards", kEmpty);
    check_keys(r, "rewards",
               {"u_max", "gamma_r", "gamma_eps", "gamma_theta", "gamma_d",
                "gamma_psf", "lambda", "r_collision", "r_exists"});
    guidance::RewardConfig dflt;
    s.rewards.u_max = num_or(r, "rewards", "u_max", dflt.u_max);
    s.rewards.gamma_r = num_or(r, "rewards", "gamma_r", dflt.gamma_r);
    s.rewards.gamma_eps = num_or(r, "rewards", "gamma_eps", dflt.gamma_eps);
    s.rewards.gamma_theta =
        num_or(r, "rewards", "gamma_theta", dflt.gamma_theta);
    s.rewards.gamma_d = num_or(r, "rewards", "gamma_d", dflt.gamma_d);
    s.rewards.gamma_psf = num_or(r, "rewards", "gamma_psf", dflt.gamma_psf);
    s.rewards.lambda = num_or(r, "rewards", "lambda", dflt.lambda);
    s.rewards.r_collision =
        num_or(r, "rewards", "r_collision", dflt.r_collision);
    s.rewards.r_exists = num_or(r, "rewards", "r_exists", dflt.r_exists);
  }

  {
    const auto& g = section(root, "", "guidance", kEmpty);
    check_keys(g, "guidance",
               {"lookahead", "cruise_speed", "k_heading", "k_yaw_damp",
                "k_surge", "tau_r_cap"});
    guidance::LosConfig dflt;
    s.los.lookahead = num_or(g, "guidance", "lookahead", dflt.lookahead);
    s.los.cruise_speed =
        num_or(g, "guidance", "cruise_speed", dflt.cruise_speed);
    s.los.k_heading = num_or(g, "guidance", "k_heading", dflt.k_heading);
    s.los.k_yaw_damp = num_or(g, "guidance", "k_yaw_damp", dflt.k_yaw_damp);
    s.los.k_surge = num_or(g, "guidance", "k_surge", dflt.k_surge);
    s.los.tau_r_cap = num_or(g, "guidance", "tau_r_cap", dflt.tau_r_cap);
  }

  s.validate();
  return s;
}

Scenario scenario_from_json_text(const std::string& text,
                                 const std::string& origin) {
  ordered_json root;
  try {
    root = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(ScenarioError::Kind::kParse,
                        origin + ": " + e.what());
  }
  return scenario_from_json(root);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ScenarioError(ScenarioError::Kind::kParse,
                        path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json_text(buf.str(), path);
}

// ---------------------------------------------------------------------------

void Scenario::validate() const {
  if (schema_version != 1)
    fail_valid("schema_version", "unsupported (this build reads version 1)");
  if (!(duration_s > 0.0) || !std::isfinite(duration_s))
    fail_valid("duration_s", "must be a positive number");
  if (!(vessel_radius >= 0.0) || !std::isfinite(vessel_radius))
    fail_valid("vessel.radius", "must be non-negative");
  try {
    params.validate();
  } catch (const vessel::ModelError& e) {
    fail_valid("vessel.params", e.what());
  }
  const Vec6 init = initial.to_vector();
  if (!init.allFinite()) fail_valid("vessel.initial", "must be finite");

  if (waypoints.size() < 2)
    fail_valid("path.waypoints", "need at least two points");
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    if (!waypoints[i].allFinite())
      fail_valid("path.waypoints[" + std::to_string(i) + "]",
                 "must be finite");
    if (i > 0 && (waypoints[i] - waypoints[i - 1]).norm() < 1e-9)
      fail_valid("path.waypoints[" + std::to_string(i) + "]",
                 "duplicates the previous waypoint");
  }

  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const std::string op = "obstacles[" + std::to_string(i) + "]";
    const auto& o = obstacles[i];
    if (o.id < 0) fail_valid(op + ".id", "must be non-negative");
    for (std::size_t j = 0; j < i; ++j)
      if (obstacles[j].id == o.id) fail_valid(op + ".id", "duplicate id");
    if (!(o.radius > 0.0) || !std::isfinite(o.radius))
      fail_valid(op + ".radius", "must be positive");
    if (!(o.extent.x() > 0.0) || !(o.extent.y() > 0.0))
      fail_valid(op + ".extent", "must be positive");
    if (!o.position.allFinite() || !o.velocity.allFinite() ||
        !std::isfinite(o.turn_rate) || !std::isfinite(o.heading))
      fail_valid(op, "kinematics must be finite");
  }

  if (!tau_d.allFinite()) fail_valid("disturbance.tau_d", "must be finite");
  if (lidar.beams < 1) fail_valid("lidar.beams", "must be >= 1");
  if (!(lidar.max_range > 0.0)) fail_valid("lidar.max_range", "must be positive");
  if (!(lidar.noise_sigma >= 0.0))
    fail_valid("lidar.noise_sigma", "must be non-negative");
  if (!(lidar.rate_hz > 0.0)) fail_valid("lidar.rate_hz", "must be positive");
  if (!(lidar.cluster_eps > 0.0))
    fail_valid("lidar.cluster_eps", "must be positive");
  if (!(ais.period_s > 0.0)) fail_valid("ais.period_s", "must be positive");
  if (!(ais.pos_sigma >= 0.0))
    fail_valid("ais.pos_sigma", "must be non-negative");

  if (!(tracker.noise.q >= 0.0)) fail_valid("tracker.q", "must be non-negative");
  if (!(tracker.gate > 0.0)) fail_valid("tracker.gate", "must be positive");
  if (tracker.confirm_hits < 1)
    fail_valid("tracker.confirm_hits", "must be >= 1");
  if (!(tracker.coast_drop_s > 0.0))
    fail_valid("tracker.coast_drop_s", "must be positive");
  if (!(tracker.init_vel_var > 0.0))
    fail_valid("tracker.init_vel_var", "must be positive");

  if (psf.horizon < 2) fail_valid("psf.horizon", "must be >= 2");
  if (!(psf.dt > 0.0)) fail_valid("psf.dt", "must be positive");
  if (!(psf.d_safe >= 0.0)) fail_valid("psf.d_safe", "must be non-negative");
  if (!(psf.d_f >= 0.0)) fail_valid("psf.d_f", "must be non-negative");
  if (!(psf.gamma_u.minCoeff() > 0.0))
    fail_valid("psf.gamma_u", "must be positive");
  if (!(psf.slack_rho > 0.0)) fail_valid("psf.slack_rho", "must be positive");
  if (psf.max_iterations < 1)
    fail_valid("psf.max_iterations", "must be >= 1");

  if (!(rewards.u_max > 0.0)) fail_valid("rewards.u_max", "must be positive");
  if (!(rewards.lambda >= 0.0 && rewards.lambda <= 1.0))
    fail_valid("rewards.lambda", "must be in [0, 1]");

  if (!(los.lookahead > 0.0))
    fail_valid("guidance.lookahead", "must be positive");
  if (!(los.cruise_speed > 0.0))
    fail_valid("guidance.cruise_speed", "must be positive");
}

// ---------------------------------------------------------------------------

std::string dump_scenario(const Scenario& s) {
  ordered_json j;
  j["schema_version"] = s.schema_version;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["duration_s"] = s.duration_s;

  ordered_json v;
  ordered_json init;
  init["x"] = s.initial.x;
  init["y"] = s.initial.y;
  init["psi"] = s.initial.psi;
  init["u"] = s.initial.u;
  init["v"] = s.initial.v;
  init["r"] = s.initial.r;
  v["initial"] = init;
  v["radius"] = s.vessel_radius;
  ordered_json pp;
  pp["M"] = ordered_json::array();
  for (int i = 0; i < 3; ++i)
    pp["M"].push_back(
        ordered_json::array({s.params.M(i, 0), s.params.M(i, 1), s.params.M(i, 2)}));
  pp["d_lin"] = vec3_json(s.params.d_lin);
  pp["d_quad"] = vec3_json(s.params.d_quad);
  pp["tau_lb"] = vec3_json(s.params.tau_lb);
  pp["tau_ub"] = vec3_json(s.params.tau_ub);
  pp["nu_lb"] = vec3_json(s.params.x_lb.tail<3>());
  pp["nu_ub"] = vec3_json(s.params.x_ub.tail<3>());
  pp["dt"] = s.params.dt;
  v["params"] = pp;
  j["vessel"] = v;

  ordered_json path;
  path["waypoints"] = ordered_json::array();
  for (const auto& w : s.waypoints) path["waypoints"].push_back(vec2_json(w));
  j["path"] = path;

  j["obstacles"] = ordered_json::array();
  for (const auto& o : s.obstacles) {
    ordered_json ob;
    ob["id"] = o.id;
    ob["x"] = o.position.x();
    ob["y"] = o.position.y();
    ob["vx"] = o.velocity.x();
    ob["vy"] = o.velocity.y();
    ob["turn_rate"] = o.turn_rate;
    ob["radius"] = o.radius;
    ob["shape"] = shape_name(o.shape);
    ob["extent"] = vec2_json(o.extent);
    ob["heading"] = o.heading;
    ob["ais_equipped"] = o.ais_equipped;
    j["obstacles"].push_back(ob);
  }

  j["disturbance"]["tau_d"] = vec3_json(s.tau_d);

  ordered_json l;
  l["beams"] = s.lidar.beams;
  l["max_range"] = s.lidar.max_range;
  l["noise_sigma"] = s.lidar.noise_sigma;
  l["rate_hz"] = s.lidar.rate_hz;
  l["cluster_eps"] = s.lidar.cluster_eps;
  j["lidar"] = l;

  ordered_json a;
  a["period_s"] = s.ais.period_s;
  a["pos_sigma"] = s.ais.pos_sigma;
  j["ais"] = a;

  ordered_json t;
  t["q"] = s.tracker.noise.q;
  t["r_ais_var"] = s.tracker.noise.R_ais(0, 0);
  t["lidar_base_var"] = s.tracker.noise.lidar_base_var;
  t["lidar_rms_ref"] = s.tracker.noise.lidar_rms_ref;
  t["gate"] = s.tracker.gate;
  t["confirm_hits"] = s.tracker.confirm_hits;
  t["coast_drop_s"] = s.tracker.coast_drop_s;
  t["init_vel_var"] = s.tracker.init_vel_var;
  j["tracker"] = t;

  ordered_json p;
  p["horizon"] = s.psf.horizon;
  p["dt"] = s.psf.dt;
  p["d_safe"] = s.psf.d_safe;
  p["d_f"] = s.psf.d_f;
  p["gamma_u"] = vec3_json(s.psf.gamma_u);
  p["slack_rho"] = s.psf.slack_rho;
  p["max_iterations"] = s.psf.max_iterations;
  p["passthrough_tol"] = s.psf.passthrough_tol;
  p["activation_band"] = s.psf.activation_band;
  p["use_terminal"] = s.psf.use_terminal;
  p["dist_mode"] = dist_mode_name(s.psf.dist_mode);
  j["psf"] = p;

  ordered_json r;
  r["u_max"] = s.rewards.u_max;
  r["gamma_r"] = s.rewards.gamma_r;
  r["gamma_eps"] = s.rewards.gamma_eps;
  r["gamma_theta"] = s.rewards.gamma_theta;
  r["gamma_d"] = s.rewards.gamma_d;
  r["gamma_psf"] = s.rewards.gamma_psf;
  r["lambda"] = s.rewards.lambda;
  r["r_collision"] = s.rewards.r_collision;
  r["r_exists"] = s.rewards.r_exists;
  j["rewards"] = r;

  ordered_json g;
  g["lookahead"] = s.los.lookahead;
  g["cruise_speed"] = s.los.cruise_speed;
  g["k_heading"] = s.los.k_heading;
  g["k_yaw_damp"] = s.los.k_yaw_damp;
  g["k_surge"] = s.los.k_surge;
  g["tau_r_cap"] = s.los.tau_r_cap;
  j["guidance"] = g;

  return j.dump(2) + "\n";
}

void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ScenarioError(ScenarioError::Kind::kValidation,
                        path + ": cannot open for writing");
  out << dump_scenario(s);
}

// ---------------------------------------------------------------------------

bool scenario_equal(const Scenario& a, const Scenario& b) {
  auto eq2 = [](const Vec2& x, const Vec2& y) {
    return (x.array() == y.array()).all();
  };
  auto eq3 = [](const Vec3& x, const Vec3& y) {
    return (x.array() == y.array()).all();
  };
  if (a.schema_version != b.schema_version || a.name != b.name ||
      a.seed != b.seed || a.duration_s != b.duration_s)
    return false;
  if (!(a.params.M.array() == b.params.M.array()).all() ||
      !eq3(a.params.d_lin, b.params.d_lin) ||
      !eq3(a.params.d_quad, b.params.d_quad) ||
      !eq3(a.params.tau_lb, b.params.tau_lb) ||
      !eq3(a.params.tau_ub, b.params.tau_ub) ||
      !eq3(a.params.x_lb.tail<3>(), b.params.x_lb.tail<3>()) ||
      !eq3(a.params.x_ub.tail<3>(), b.params.x_ub.tail<3>()) ||
      a.params.dt != b.params.dt)
    return false;
  if (a.initial.x != b.initial.x || a.initial.y != b.initial.y ||
      a.initial.psi != b.initial.psi || a.initial.u != b.initial.u ||
      a.initial.v != b.initial.v || a.initial.r != b.initial.r ||
      a.vessel_radius != b.vessel_radius)
    return false;
  if (a.waypoints.size() != b.waypoints.size()) return false;
  for (std::size_t i = 0; i < a.waypoints.size(); ++i)
    if (!eq2(a.waypoints[i], b.waypoints[i])) return false;
  if (a.obstacles.size() != b.obstacles.size()) return false;
  for (std::size_t i = 0; i < a.obstacles.size(); ++i) {
    const auto& x = a.obstacles[i];
    const auto& y = b.obstacles[i];
    if (x.id != y.id || !eq2(x.position, y.position) ||
        !eq2(x.velocity, y.velocity) || x.turn_rate != y.turn_rate ||
        x.radius != y.radius || x.shape != y.shape ||
        !eq2(x.extent, y.extent) || x.heading != y.heading ||
        x.ais_equipped != y.ais_equipped)
      return false;
  }
  if (!eq3(a.tau_d, b.tau_d)) return false;
  if (a.lidar.beams != b.lidar.beams || a.lidar.max_range != b.lidar.max_range ||
      a.lidar.noise_sigma != b.lidar.noise_sigma ||
      a.lidar.rate_hz != b.lidar.rate_hz ||
      a.lidar.cluster_eps != b.lidar.cluster_eps)
    return false;
  if (a.ais.period_s != b.ais.period_s || a.ais.pos_sigma != b.ais.pos_sigma)
    return false;
  if (a.tracker.noise.q != b.tracker.noise.q ||
      a.tracker.noise.R_ais(0, 0) != b.tracker.noise.R_ais(0, 0) ||
      a.tracker.noise.lidar_base_var != b.tracker.noise.lidar_base_var ||
      a.tracker.noise.lidar_rms_ref != b.tracker.noise.lidar_rms_ref ||
      a.tracker.gate != b.tracker.gate ||
      a.tracker.confirm_hits != b.tracker.confirm_hits ||
      a.tracker.coast_drop_s != b.tracker.coast_drop_s ||
      a.tracker.init_vel_var != b.tracker.init_vel_var)
    return false;
  if (a.psf.horizon != b.psf.horizon || a.psf.dt != b.psf.dt ||
      a.psf.d_safe != b.psf.d_safe || a.psf.d_f != b.psf.d_f ||
      !eq3(a.psf.gamma_u, b.psf.gamma_u) ||
      a.psf.slack_rho != b.psf.slack_rho ||
      a.psf.max_iterations != b.psf.max_iterations ||
      a.psf.passthrough_tol != b.psf.passthrough_tol ||
      a.psf.activation_band != b.psf.activation_band ||
      a.psf.use_terminal != b.psf.use_terminal ||
      a.psf.dist_mode != b.psf.dist_mode)
    return false;
  if (a.rewards.u_max != b.rewards.u_max ||
      a.rewards.gamma_r != b.rewards.gamma_r ||
      a.rewards.gamma_eps != b.rewards.gamma_eps ||
      a.rewards.gamma_theta != b.rewards.gamma_theta ||
      a.rewards.gamma_d != b.rewards.gamma_d ||
      a.rewards.gamma_psf != b.rewards.gamma_psf ||
      a.rewards.lambda != b.rewards.lambda ||
      a.rewards.r_collision != b.rewards.r_collision ||
      a.rewards.r_exists != b.rewards.r_exists)
    return false;
  if (a.los.lookahead != b.los.lookahead ||
      a.los.cruise_speed != b.los.cruise_speed ||
      a.los.k_heading != b.los.k_heading ||
      a.los.k_yaw_damp != b.los.k_yaw_damp ||
      a.los.k_surge != b.los.k_surge || a.los.tau_r_cap != b.los.tau_r_cap)
    return false;
  return true;
}

// ---------------------------------------------------------------------------

Difficulty difficulty_from_string(const std::string& s) {
  if (s == "static") return Difficulty::kStatic;
  if (s == "crossing") return Difficulty::kCrossing;
  if (s == "head-on" || s == "head_on") return Difficulty::kHeadOn;
  if (s == "mixed") return Difficulty::kMixed;
  throw ScenarioError(ScenarioError::Kind::kValidation,
                      "difficulty: expected static, crossing, head-on or "
                      "mixed, got \"" + s + "\"");
}

const char* to_string(Difficulty d) {
  switch (d) {
    case Difficulty::kStatic: return "static";
    case Difficulty::kCrossing: return "crossing";
    case Difficulty::kHeadOn: return "head-on";
    case Difficulty::kMixed: return "mixed";
  }
  return "?";
}

namespace {

Vec2 unit(double angle) { return Vec2(std::cos(angle), std::sin(angle)); }

enum class ThreatKind { kParked, kCrossing, kHeadOn, kAimedAtStart };

ObstacleScript draw_obstacle(Rng& rng, ThreatKind kind,
                             const guidance::PathSpec& path, const Vec2& start,
                             double cruise, double speed_cap) {
  ObstacleScript o;
  o.radius = rng.uniform(3.0, 7.0);
  switch (kind) {
    case ThreatKind::kParked: {
      const double t_c = rng.uniform(45.0, 95.0);
      const Vec2 q = path.point_at(std::min(cruise * t_c, path.length()));
      const Vec2 tan = path.tangent_at(std::min(cruise * t_c, path.length()));
      const Vec2 nrm(-tan.y(), tan.x());
      o.position = q + rng.uniform(-8.0, 8.0) * nrm;
      o.velocity = Vec2::Zero();
      o.heading = rng.uniform(-M_PI, M_PI);
      break;
    }
    case ThreatKind::kCrossing: {
      const double t_c = rng.uniform(40.0, 90.0);
      const double s_arc = std::min(cruise * t_c, path.length());
      const Vec2 q = path.point_at(s_arc);
      const Vec2 tan = path.tangent_at(s_arc);
      const double side = rng.uniform(0.0, 1.0) < 0.5 ? 1.0 : -1.0;
      const double course = std::atan2(tan.y(), tan.x()) +
                            side * (M_PI / 2.0 + rng.uniform(-0.3, 0.3));
      const double speed = rng.uniform(0.4, std::max(0.5, speed_cap));
      o.velocity = -speed * unit(course);  // moves toward q from the side
      o.position = q - o.velocity * t_c;
      o.heading = std::atan2(o.velocity.y(), o.velocity.x());
      break;
    }
    case ThreatKind::kHeadOn: {
      const double t_m = rng.uniform(40.0, 85.0);
      const double s_arc = std::min(cruise * t_m, path.length());
      const Vec2 q = path.point_at(s_arc);
      const Vec2 tan = path.tangent_at(s_arc);
      const double speed = rng.uniform(0.3, std::max(0.4, speed_cap));
      o.velocity = -speed * tan;
      o.position = q + speed * t_m * tan;
      o.heading = std::atan2(o.velocity.y(), o.velocity.x());
      break;
    }
    case ThreatKind::kAimedAtStart: {
      // Passes through the start neighborhood at t_a: pressure on policies
      // that loiter instead of making way.
      const double t_a = rng.uniform(45.0, 90.0);
      const double speed = rng.uniform(1.0, std::max(1.1, speed_cap));
      const double bearing = rng.uniform(-M_PI, M_PI);
      const Vec2 target =
          start + Vec2(rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0));
      o.velocity = speed * unit(bearing);
      o.position = target - o.velocity * t_a;
      o.heading = bearing;
      break;
    }
  }
  o.shape = rng.uniform(0.0, 1.0) < 0.7
                ? perception::PlacedShape::Kind::kEllipse
                : perception::PlacedShape::Kind::kRect;
  o.extent = Vec2(o.radius, o.radius * rng.uniform(0.5, 0.8));
  return o;
}

}  // namespace

Scenario generate_random_scenario(std::uint64_t seed, Difficulty difficulty) {
  Rng rng(seed, "scenario");
  Scenario s;
  s.seed = seed;
  s.name = std::string("random-") + to_string(difficulty) + "-" +
           std::to_string(seed);
  // The threat choreography below aims at the first minute of the run;
  // trailing cruise adds nothing but wall time in large batches.
  s.duration_s = 90.0;

  // Reference path: a few gentle legs starting at the origin.
  const int n_legs = rng.uniform_int(2, 4);
  double course = rng.uniform(-M_PI, M_PI);
  const double course0 = course;
  Vec2 p = Vec2::Zero();
  s.waypoints.push_back(p);
  for (int i = 0; i < n_legs; ++i) {
    p += rng.uniform(60.0, 120.0) * unit(course);
    s.waypoints.push_back(p);
    course += rng.uniform(-0.7, 0.7);
  }
  const guidance::PathSpec path(s.waypoints);

  s.initial.x = s.waypoints[0].x();
  s.initial.y = s.waypoints[0].y();
  s.initial.psi = wrap_angle(course0);
  s.initial.u = s.los.cruise_speed;
  const Vec2 start(s.initial.x, s.initial.y);

  int count = 0;
  double cap = 0.0;
  switch (difficulty) {
    case Difficulty::kStatic:
      count = rng.uniform_int(2, 6);
      cap = 0.0;
      break;
    case Difficulty::kCrossing:
      count = rng.uniform_int(1, 4);
      cap = 1.2;
      break;
    case Difficulty::kHeadOn:
      count = rng.uniform_int(1, 3);
      cap = 1.0;
      break;
    case Difficulty::kMixed:
      count = rng.uniform_int(3, 8);
      cap = 1.5;
      break;
  }

  const double clearance_needed =
      s.psf.d_safe + s.psf.d_f + s.vessel_radius + 2.0;

  for (int i = 0; i < count; ++i) {
    ThreatKind kind;
    switch (difficulty) {
      case Difficulty::kStatic: kind = ThreatKind::kParked; break;
      case Difficulty::kCrossing: kind = ThreatKind::kCrossing; break;
      case Difficulty::kHeadOn: kind = ThreatKind::kHeadOn; break;
      case Difficulty::kMixed: {
        if (i < 2) {
          kind = ThreatKind::kAimedAtStart;
        } else {
          const double pick = rng.uniform(0.0, 1.0);
          kind = pick < 0.35   ? ThreatKind::kParked
                 : pick < 0.65 ? ThreatKind::kCrossing
                 : pick < 0.85 ? ThreatKind::kHeadOn
                               : ThreatKind::kAimedAtStart;
        }
        break;
      }
      default: kind = ThreatKind::kParked; break;
    }

    ObstacleScript o;
    bool placed = false;
    for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
      o = draw_obstacle(rng, kind, path, start, s.los.cruise_speed, cap);
      placed = (o.position - start).norm() - o.radius >= clearance_needed;
      for (const auto& other : s.obstacles)
        if ((o.position - other.position).norm() <
            o.radius + other.radius + 6.0)
          placed = false;
    }
    if (!placed) {
      // Push the last draw radially until it clears the start region.
      Vec2 dir = o.position - start;
      if (dir.norm() < 1e-9) dir = unit(rng.uniform(-M_PI, M_PI));
      dir.normalize();
      o.position = start + dir * (clearance_needed + o.radius + 1.0);
    }

    o.id = i + 1;
    if (difficulty == Difficulty::kMixed && o.velocity.norm() > 1e-9 &&
        rng.uniform(0.0, 1.0) < 0.25) {
      const double mag = rng.uniform(0.005, 0.03);
      o.turn_rate = rng.uniform(0.0, 1.0) < 0.5 ? mag : -mag;
    }
    o.ais_equipped =
        rng.uniform(0.0, 1.0) < (difficulty == Difficulty::kStatic ? 0.5 : 0.7);
    s.obstacles.push_back(o);
  }

  s.validate();
  return s;
}

}  // namespace asv::sim
