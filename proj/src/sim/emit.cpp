#include "asv/sim/emit.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "asv/guidance/path.hpp"

namespace asv::sim {

namespace {

void put(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "nan";
    return;
  }
  if (std::isinf(v)) {
    out += v > 0 ? "inf" : "-inf";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  out += buf;
}

void put(std::string& out, int v) {
  out += std::to_string(v);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << content;
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace

std::string trace_csv(const EpisodeTrace& trace) {
  std::string out;
  out.reserve(256 + trace.ticks.size() * 360);
  out +=
      "tick,t,x,y,psi,u,v,r,tau_u_agent,tau_v_agent,tau_r_agent,"
      "tau_u,tau_v,tau_r,delta_u_inf,psf_status,psf_iterations,psf_cost,"
      "psf_max_violation,min_margin,cte,heading_err,r_path,r_colav,r_psf,"
      "r_total,collision";
  for (const auto& o : trace.scenario.obstacles) {
    const std::string tag = "obs" + std::to_string(o.id);
    for (const char* col : {"_true_x", "_true_y", "_est_x", "_est_y", "_p00",
                            "_p01", "_p11"})
      out += "," + tag + col;
  }
  out += "\n";

  for (const auto& r : trace.ticks) {
    put(out, r.tick);
    out += ",";
    put(out, r.t);
    for (double v : {r.state.x, r.state.y, r.state.psi, r.state.u, r.state.v,
                     r.state.r, r.u_agent(0), r.u_agent(1), r.u_agent(2),
                     r.u_applied(0), r.u_applied(1), r.u_applied(2),
                     r.delta_u_inf}) {
      out += ",";
      put(out, v);
    }
    out += ",";
    out += r.psf_ran ? psf::to_string(r.psf_status) : "OFF";
    out += ",";
    put(out, r.psf_iterations);
    for (double v : {r.psf_cost, r.psf_max_violation, r.min_margin, r.cte,
                     r.heading_err, r.r_path, r.r_colav, r.r_psf, r.r_total}) {
      out += ",";
      put(out, v);
    }
    out += r.collision ? ",1" : ",0";
    for (const auto& snap : r.obstacles) {
      out += ",";
      put(out, snap.true_pos.x());
      out += ",";
      put(out, snap.true_pos.y());
      if (snap.tracked) {
        for (double v : {snap.est_pos.x(), snap.est_pos.y(), snap.est_cov(0, 0),
                         snap.est_cov(0, 1), snap.est_cov(1, 1)}) {
          out += ",";
          put(out, v);
        }
      } else {
        out += ",nan,nan,nan,nan,nan";
      }
    }
    out += "\n";
  }
  return out;
}

void write_trace_csv(const EpisodeTrace& trace, const std::string& path) {
  write_file(path, trace_csv(trace));
}

std::string summary_csv(const EpisodeSummary& s) {
  std::string out =
      "collisions,min_distance,mean_abs_cte,cumulative_reward,"
      "intervention_rate,mean_solve_ms,max_solve_ms,ticks,n_passthrough,"
      "n_modified,n_relaxed,n_infeasible\n";
  put(out, s.collisions);
  for (double v : {s.min_distance, s.mean_abs_cte, s.cumulative_reward,
                   s.intervention_rate, s.mean_solve_ms, s.max_solve_ms}) {
    out += ",";
    put(out, v);
  }
  for (int v : {s.ticks, s.n_passthrough, s.n_modified, s.n_relaxed,
                s.n_infeasible}) {
    out += ",";
    put(out, v);
  }
  out += "\n";
  return out;
}

void emit_plots(const EpisodeTrace& trace, const std::string& out_dir) {
  if (trace.ticks.empty())
    throw std::runtime_error("emit_plots: empty trace");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw std::runtime_error(out_dir + ": cannot create directory (" +
                             ec.message() + ")");
  const std::string base = out_dir + "/";

  {
    const guidance::PathSpec path(trace.scenario.waypoints);
    std::string out = "t,x,y,psi,u,v,r,ref_x,ref_y,cte\n";
    for (const auto& r : trace.ticks) {
      const Vec2 ref = path.point_at(path.project(Vec2(r.state.x, r.state.y)));
      put(out, r.t);
      for (double v : {r.state.x, r.state.y, r.state.psi, r.state.u, r.state.v,
                       r.state.r, ref.x(), ref.y(), r.cte}) {
        out += ",";
        put(out, v);
      }
      out += "\n";
    }
    write_file(base + "trajectory.csv", out);
  }

  {
    std::string out = "t,track_id,step,pred_x,pred_y,sigma\n";
    for (const auto& row : trace.tube) {
      put(out, row.t);
      out += ",";
      put(out, row.track_id);
      out += ",";
      put(out, row.step);
      for (double v : {row.x, row.y, row.sigma}) {
        out += ",";
        put(out, v);
      }
      out += "\n";
    }
    write_file(base + "tube.csv", out);
  }

  {
    std::string out = "t,margin,violation\n";
    for (const auto& r : trace.ticks) {
      put(out, r.t);
      out += ",";
      put(out, r.min_margin);
      out += r.min_margin < 0.0 ? ",1\n" : ",0\n";
    }
    write_file(base + "margins.csv", out);
  }

  {
    std::string out = "t,r_path,r_colav,r_psf,r_total,collision\n";
    for (const auto& r : trace.ticks) {
      put(out, r.t);
      for (double v : {r.r_path, r.r_colav, r.r_psf, r.r_total}) {
        out += ",";
        put(out, v);
      }
      out += r.collision ? ",1\n" : ",0\n";
    }
    write_file(base + "rewards.csv", out);
  }

  {
    std::string out = "tick,t,status,iterations,cost,max_violation,solve_ms\n";
    for (const auto& r : trace.ticks) {
      if (!r.psf_ran) continue;
      put(out, r.tick);
      out += ",";
      put(out, r.t);
      out += ",";
      out += psf::to_string(r.psf_status);
      out += ",";
      put(out, r.psf_iterations);
      for (double v : {r.psf_cost, r.psf_max_violation, r.solve_ms}) {
        out += ",";
        put(out, v);
      }
      out += "\n";
    }
    write_file(base + "solver.csv", out);
  }

  write_file(base + "summary.csv", summary_csv(summarize(trace)));
}

}  // namespace asv::sim
