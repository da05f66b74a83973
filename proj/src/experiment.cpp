/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "topoman/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

namespace topoman {

std::optional<SelectionChoice> selection_from_string(const std::string& text) {
  if (text == "edge")
    return SelectionChoice{SelectionMode::EdgeHeuristic,
                           EdgeHeuristicKind::InterfaceBased, "edge"};
  if (text == "policy")
    return SelectionChoice{SelectionMode::EdgeHeuristic,
                           EdgeHeuristicKind::PolicyBased, "policy"};
  if (text == "random")
    return SelectionChoice{SelectionMode::RandomSelect,
                           EdgeHeuristicKind::InterfaceBased, "random"};
  return std::nullopt;
}

SingleRun run_single(const NetworkInstance& net, const RunMode& mode,
                     std::uint64_t seed, std::ostream* transcript) {
  Simulation sim(net, mode, seed, transcript);
  SingleRun out;
  RunResult run = sim.run_discovery();
  out.metrics = run.metrics;
  out.discovery_report = run.report;
  sim.inject_all_residual_traffic();
  out.final_diff = diff_graphs(sim.manager().discovered(), sim.ground_truth());
  out.clean = out.discovery_report.clean && out.final_diff.empty();
  return out;
}

namespace {
std::string format_mean(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}
}  // namespace

SuiteResult run_suite(const ExperimentSpec& spec) {
  if (spec.seeds.empty()) throw BadValueError("suite needs at least one seed");
  if (spec.families.empty()) throw BadValueError("suite needs a family");
  if (spec.selections.empty() || spec.append_modes.empty())
    throw BadValueError("suite needs a selection and an append mode");

  const auto start = std::chrono::steady_clock::now();
  SuiteResult out;
  GeneratorOptions gopts;
  gopts.tree_fanout = spec.tree_fanout;

  for (TopologyFamily family : spec.families) {
    const NetworkInstance net =
        generate_topology(family, spec.nodes, /*seed=*/1, gopts);
    for (const auto& selection : spec.selections) {
      for (bool append : spec.append_modes) {
        RunMode mode;
        mode.selection = selection.mode;
        mode.heuristic = selection.heuristic;
        mode.payload_append = append;
        mode.header_sec = spec.header_sec;
        mode.payload_sec = spec.payload_sec;
        mode.ttl_max = spec.ttl_max;

        double sum_triggers = 0, sum_up = 0, sum_ticks = 0;
        bool group_clean = true;
        for (std::uint64_t seed : spec.seeds) {
          SingleRun run = run_single(net, mode, seed);
          group_clean = group_clean && run.clean;
          out.all_clean = out.all_clean && run.clean;
          sum_triggers += static_cast<double>(run.metrics.probe_triggers);
          sum_up += static_cast<double>(run.metrics.up_calls);
          sum_ticks += static_cast<double>(run.metrics.sim_ticks);
          SuiteRow row;
          row.kind = "run";
          row.family = to_string(family);
          row.nodes = spec.nodes;
          row.selection = selection.label;
          row.append = append;
          row.header_sec = spec.header_sec;
          row.payload_sec = spec.payload_sec;
          row.seed = std::to_string(seed);
          row.probe_triggers = static_cast<double>(run.metrics.probe_triggers);
          row.up_calls = static_cast<double>(run.metrics.up_calls);
          row.sim_ticks = static_cast<double>(run.metrics.sim_ticks);
          row.clean = run.clean;
          out.rows.push_back(row);
        }
        const double n = static_cast<double>(spec.seeds.size());
        SuiteRow mean;
        mean.kind = "mean";
        mean.family = to_string(family);
        mean.nodes = spec.nodes;
        mean.selection = selection.label;
        mean.append = append;
        mean.header_sec = spec.header_sec;
        mean.payload_sec = spec.payload_sec;
        mean.seed = "-";
        mean.probe_triggers = sum_triggers / n;
        mean.up_calls = sum_up / n;
        mean.sim_ticks = sum_ticks / n;
        mean.clean = group_clean;
        out.rows.push_back(mean);
      }
    }
  }
  const auto end = std::chrono::steady_clock::now();
  out.wall_clock_seconds = std::chrono::duration<double>(end - start).count();
  return out;
}

std::string suite_csv(const SuiteResult& result) {
  std::ostringstream out;
  out << "kind,family,nodes,selection,append,header_sec,payload_sec,seed,"
         "probe_triggers,up_calls,sim_ticks,clean\n";
  for (const auto& row : result.rows) {
    out << row.kind << ',' << row.family << ',' << row.nodes << ','
        << row.selection << ',' << (row.append ? 1 : 0) << ','
        << (row.header_sec ? 1 : 0) << ',' << (row.payload_sec ? 1 : 0) << ','
        << row.seed << ',';
    if (row.kind == "run") {
      out << static_cast<long long>(row.probe_triggers) << ','
          << static_cast<long long>(row.up_calls) << ','
          << static_cast<long long>(row.sim_ticks);
    } else {
      out << format_mean(row.probe_triggers) << ',' << format_mean(row.up_calls)
          << ',' << format_mean(row.sim_ticks);
    }
    out << ',' << (row.clean ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace topoman
