#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "asv/core/rng.hpp"
#include "asv/perception/ellipse_fit.hpp"
#include "asv/psf/terminal_set.hpp"
#include "asv/sim/emit.hpp"
#include "asv/sim/episode.hpp"
#include "asv/sim/scenario.hpp"

namespace {

using namespace asv;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void print_summary(const sim::EpisodeSummary& s) {
  std::cout << "ticks:              " << s.ticks << "\n"
            << "collisions:         " << s.collisions << "\n"
            << "min distance:       " << fmt(s.min_distance) << " m\n"
            << "mean |cte|:         " << fmt(s.mean_abs_cte) << " m\n"
            << "cumulative reward:  " << fmt(s.cumulative_reward) << "\n"
            << "intervention rate:  " << fmt(s.intervention_rate) << "\n"
            << "mean solve time:    " << fmt(s.mean_solve_ms) << " ms\n"
            << "filter outcomes:    " << s.n_passthrough << " passthrough, "
            << s.n_modified << " modified, " << s.n_relaxed << " relaxed, "
            << s.n_infeasible << " infeasible\n";
}

struct SeedRange {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;  // inclusive
};

SeedRange parse_seed_range(const std::string& text) {
  SeedRange r;
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      r.lo = r.hi = std::stoull(text);
    } else {
      r.lo = std::stoull(text.substr(0, dots));
      r.hi = std::stoull(text.substr(dots + 2));
    }
  } catch (const std::exception&) {
    throw CLI::ValidationError("--seeds", "expected N or A..B");
  }
  if (r.hi < r.lo) throw CLI::ValidationError("--seeds", "range is empty");
  return r;
}

int cmd_run(const std::string& scenario_file, bool use_random,
            std::uint64_t random_seed, const std::string& difficulty,
            bool psf_enabled, const std::string& policy_name,
            const std::string& info_mode_name, const std::string& out_dir,
            const std::string& ais_replay_file) {
  sim::Scenario sc = use_random
                         ? sim::generate_random_scenario(
                               random_seed,
                               sim::difficulty_from_string(difficulty))
                         : sim::load_scenario(scenario_file);

  sim::EpisodeOptions opt;
  opt.policy = guidance::policy_from_string(policy_name);
  opt.psf_enabled = psf_enabled;
  opt.info_mode = sim::info_mode_from_string(info_mode_name);

  std::vector<sim::AisRecord> replay;
  if (!ais_replay_file.empty()) {
    replay = sim::read_ais_log(ais_replay_file);
    opt.ais_replay = &replay;
  }

  const auto [trace, summary] = sim::run_episode(sc, opt);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw std::runtime_error(out_dir + ": cannot create directory (" +
                             ec.message() + ")");
  sim::save_scenario(sc, out_dir + "/scenario.json");
  sim::write_trace_csv(trace, out_dir + "/trace.csv");
  sim::write_ais_log(trace.ais_log, out_dir + "/ais.log");
  sim::emit_plots(trace, out_dir);

  print_summary(summary);
  std::cout << "outputs written to " << out_dir << "\n";
  if (trace.aborted) {
    std::cerr << "error: runtime: episode aborted: " << trace.abort_reason
              << "\n";
    return 4;
  }
  return 0;
}

int cmd_batch(const std::string& seeds_text, const std::string& difficulty,
              bool psf_enabled, const std::string& policy_name,
              const std::string& info_mode_name, const std::string& out_dir,
              int jobs) {
  const SeedRange range = parse_seed_range(seeds_text);
  const auto kind = sim::difficulty_from_string(difficulty);
  sim::EpisodeOptions opt;
  opt.policy = guidance::policy_from_string(policy_name);
  opt.psf_enabled = psf_enabled;
  opt.info_mode = sim::info_mode_from_string(info_mode_name);
  opt.record_tube = false;  // keep batch memory flat

  // All random scenarios share the default hull, so one terminal set serves
  // every episode (it is read-only during solves).
  psf::TerminalSet terminal;
  if (psf_enabled) {
    terminal = psf::build_terminal_set(vessel::VesselParams{},
                                       vessel::VesselParams{}.dt);
    opt.terminal = &terminal;
  }

  const std::size_t n = static_cast<std::size_t>(range.hi - range.lo) + 1;
  std::vector<sim::EpisodeSummary> results(n);
  jobs = std::max(1, jobs);

  auto worker = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < n; i += step) {
      const auto sc = sim::generate_random_scenario(range.lo + i, kind);
      results[i] = sim::run_episode(sc, opt).second;
    }
  };
  if (jobs == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j)
      pool.emplace_back(worker, static_cast<std::size_t>(j),
                        static_cast<std::size_t>(jobs));
    for (auto& th : pool) th.join();
  }

  int episodes_with_collision = 0, total_collisions = 0;
  double reward = 0.0, cte = 0.0, min_dist =
      std::numeric_limits<double>::infinity();
  double solve = 0.0;
  std::string table =
      "seed,collisions,min_distance,mean_abs_cte,cumulative_reward,"
      "intervention_rate,mean_solve_ms,ticks\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = results[i];
    episodes_with_collision += s.collisions > 0 ? 1 : 0;
    total_collisions += s.collisions;
    reward += s.cumulative_reward;
    cte += s.mean_abs_cte;
    min_dist = std::min(min_dist, s.min_distance);
    solve += s.mean_solve_ms;
    table += std::to_string(range.lo + i) + "," + std::to_string(s.collisions) +
             "," + fmt(s.min_distance) + "," + fmt(s.mean_abs_cte) + "," +
             fmt(s.cumulative_reward) + "," + fmt(s.intervention_rate) + "," +
             fmt(s.mean_solve_ms) + "," + std::to_string(s.ticks) + "\n";
  }

  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
      throw std::runtime_error(out_dir + ": cannot create directory (" +
                               ec.message() + ")");
    std::ofstream out(out_dir + "/batch.csv", std::ios::binary);
    if (!out) throw std::runtime_error(out_dir + "/batch.csv: cannot write");
    out << table;
  }

  std::cout << "episodes:                 " << n << "\n"
            << "episodes with collision:  " << episodes_with_collision << "\n"
            << "total collisions:         " << total_collisions << "\n"
            << "closest approach:         " << fmt(min_dist) << " m\n"
            << "mean episode reward:      " << fmt(reward / double(n)) << "\n"
            << "mean |cte|:               " << fmt(cte / double(n)) << " m\n"
            << "mean solve time:          " << fmt(solve / double(n))
            << " ms\n";
  return 0;
}

int cmd_fit_demo(const std::string& points_file, bool synthetic,
                 std::uint64_t seed, const std::string& out_dir) {
  perception::PointCluster cluster;
  if (synthetic) {
    Rng rng(seed, "fitdemo");
    const Vec2 c(rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0));
    const double a = rng.uniform(2.0, 8.0);
    const double b = rng.uniform(1.0, a);
    const double phi = rng.uniform(-M_PI / 2, M_PI / 2);
    std::cout << "synthetic ellipse: center (" << fmt(c.x()) << ", "
              << fmt(c.y()) << "), axes " << fmt(a) << " x " << fmt(b)
              << ", angle " << fmt(phi) << "\n";
    for (int i = 0; i < 100; ++i) {
      const double th = rng.uniform(0.0, 2.0 * M_PI);
      Vec2 p(a * std::cos(th), b * std::sin(th));
      const Vec2 q(std::cos(phi) * p.x() - std::sin(phi) * p.y(),
                   std::sin(phi) * p.x() + std::cos(phi) * p.y());
      cluster.points.push_back(c + q +
                               Vec2(rng.normal(0.0, 0.1), rng.normal(0.0, 0.1)));
    }
  } else {
    std::ifstream in(points_file);
    if (!in)
      throw sim::ScenarioError(sim::ScenarioError::Kind::kParse,
                               points_file + ": cannot open file");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      double x, y;
      if (!(ss >> x >> y))
        throw sim::ScenarioError(sim::ScenarioError::Kind::kParse,
                                 points_file + ":" + std::to_string(lineno) +
                                     ": expected \"x y\"");
      cluster.points.emplace_back(x, y);
    }
  }

  const auto report = [](const char* name, const perception::EllipseParams& e) {
    std::cout << name << ": center (" << fmt(e.center.x()) << ", "
              << fmt(e.center.y()) << "), axes " << fmt(e.semi_major) << " x "
              << fmt(e.semi_minor) << ", angle " << fmt(e.phi) << ", rms "
              << fmt(e.fit_rms) << " m (" << e.n_points << " points)\n";
  };

  const auto stable = perception::fit_ellipse_stable(cluster);
  report("stable fit  ", stable);
  try {
    const auto mlr = perception::fit_ellipse_mlr(cluster);
    report("baseline fit", mlr);
  } catch (const perception::FitError& e) {
    std::cout << "baseline fit: failed (" << e.what() << ")\n";
  }

  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
      throw std::runtime_error(out_dir + ": cannot create directory (" +
                               ec.message() + ")");
    std::ofstream out(out_dir + "/fit_points.csv", std::ios::binary);
    if (!out) throw std::runtime_error(out_dir + ": cannot write");
    out << "x,y,conic_residual\n";
    char buf[120];
    for (const auto& p : cluster.points) {
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", p.x(), p.y(),
                    stable.eval_conic(p));
      out << buf;
    }
  }
  return 0;
}

int cmd_validate(const std::string& file, bool dump) {
  const auto sc = sim::load_scenario(file);
  if (dump)
    std::cout << sim::dump_scenario(sc);
  else
    std::cout << file << ": OK (" << sc.obstacles.size() << " obstacles, "
              << fmt(sc.duration_s) << " s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Deterministic planar vessel navigation sandbox: lidar target tracking "
      "with AIS fusion and a predictive safety filter over a 3-DOF hull "
      "model."};
  app.require_subcommand(1);

  // run ----------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Run one episode and write its trace");
  std::string scenario_file, difficulty = "mixed", policy = "los";
  std::string info_mode = "tracked", out_dir = "out", ais_replay;
  std::uint64_t random_seed = 0;
  bool psf_on = true;
  run->add_option("scenario", scenario_file, "Scenario file (JSON)");
  auto* rnd = run->add_option("--random", random_seed,
                              "Generate the scenario from this seed instead");
  run->add_option("--difficulty", difficulty,
                  "static | crossing | head-on | mixed (with --random)");
  run->add_flag("--psf,!--no-psf", psf_on, "Enable the safety filter");
  run->add_option("--policy", policy, "los | constant | random | adversarial");
  run->add_option("--info-mode", info_mode, "tracked | ground-truth | none");
  run->add_option("--out", out_dir, "Output directory")
      ->envname("ASVNAV_OUT_DIR");
  run->add_option("--ais-replay", ais_replay,
                  "Feed AIS from this log instead of synthesizing it");

  // batch --------------------------------------------------------------
  auto* batch = app.add_subcommand("batch", "Run a seed range, aggregate");
  std::string seeds = "1..50", b_difficulty = "mixed", b_policy = "random";
  std::string b_info = "ground-truth", b_out;
  bool b_psf = true;
  int jobs = 1;
  batch->add_option("--seeds", seeds, "Seed N or range A..B (inclusive)");
  batch->add_option("--difficulty", b_difficulty,
                    "static | crossing | head-on | mixed");
  batch->add_flag("--psf,!--no-psf", b_psf, "Enable the safety filter");
  batch->add_option("--policy", b_policy,
                    "los | constant | random | adversarial");
  batch->add_option("--info-mode", b_info, "tracked | ground-truth | none");
  batch->add_option("--out", b_out, "Directory for the per-seed table")
      ->envname("ASVNAV_OUT_DIR");
  batch->add_option("--jobs", jobs, "Worker threads (episodes are independent)");

  // fit-demo -----------------------------------------------------------
  auto* fit = app.add_subcommand("fit-demo",
                                 "Fit ellipses to a point cloud (or synthetic)");
  std::string points_file, f_out;
  std::uint64_t f_seed = 7;
  bool synthetic = false;
  fit->add_option("points", points_file, "Point file, one \"x y\" per line");
  fit->add_flag("--synthetic", synthetic, "Generate a noisy test ellipse");
  fit->add_option("--seed", f_seed, "Seed for --synthetic");
  fit->add_option("--out", f_out, "Directory for fit_points.csv")
      ->envname("ASVNAV_OUT_DIR");

  // validate -----------------------------------------------------------
  auto* val = app.add_subcommand("validate", "Check a scenario file");
  std::string val_file;
  bool val_dump = false;
  val->add_option("scenario", val_file, "Scenario file (JSON)")->required();
  val->add_flag("--dump", val_dump, "Print the canonicalized scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) {
      const bool use_random = rnd->count() > 0;
      if (use_random == !scenario_file.empty()) {
        std::cerr << "error: usage: give a scenario file or --random <seed>, "
                     "not both\n";
        return 2;
      }
      return cmd_run(scenario_file, use_random, random_seed, difficulty,
                     psf_on, policy, info_mode, out_dir, ais_replay);
    }
    if (batch->parsed())
      return cmd_batch(seeds, b_difficulty, b_psf, b_policy, b_info, b_out,
                       jobs);
    if (fit->parsed()) {
      if (synthetic == !points_file.empty()) {
        std::cerr << "error: usage: give a points file or --synthetic, "
                     "not both\n";
        return 2;
      }
      return cmd_fit_demo(points_file, synthetic, f_seed, f_out);
    }
    if (val->parsed()) return cmd_validate(val_file, val_dump);
  } catch (const sim::ScenarioError& e) {
    std::cerr << "error: "
              << (e.kind == sim::ScenarioError::Kind::kParse ? "parse"
                                                             : "validation")
              << ": " << e.what() << "\n";
    return 3;
  } catch (const perception::FitError& e) {
    std::cerr << "error: fit: " << e.what() << "\n";
    return 3;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
