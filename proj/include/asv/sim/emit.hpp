#pragma once

#include <string>

#include "asv/sim/episode.hpp"

namespace asv::sim {

// The episode trace as CSV with a fixed column order: vessel state, agent and
// applied inputs, filter diagnostics, margins, rewards, and one column group
// per scripted obstacle (truth + matched estimate + position covariance).
// Deliberately excludes wall-clock solve time so that identical runs produce
// byte-identical files; timing lives in solver.csv (see emit_plots).
std::string trace_csv(const EpisodeTrace& trace);
void write_trace_csv(const EpisodeTrace& trace, const std::string& path);

std::string summary_csv(const EpisodeSummary& summary);

// Plot-ready tables derived from one trace, written into out_dir (created if
// missing): trajectory.csv, tube.csv, margins.csv, rewards.csv, solver.csv,
// summary.csv. Re-emitting the same trace is byte-identical.
void emit_plots(const EpisodeTrace& trace, const std::string& out_dir);

}  // namespace asv::sim
