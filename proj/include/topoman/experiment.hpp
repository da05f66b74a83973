/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#ifndef TOPOMAN_EXPERIMENT_HPP
#define TOPOMAN_EXPERIMENT_HPP

#include <optional>
#include <string>
#include <vector>

#include "topoman/sim_harness.hpp"

namespace topoman {

/// A probe-pair selection policy as exposed on the command line:
/// edge (interface heuristic), policy (policy heuristic), or random.
struct SelectionChoice {
  SelectionMode mode = SelectionMode::EdgeHeuristic;
  EdgeHeuristicKind heuristic = EdgeHeuristicKind::InterfaceBased;
  std::string label = "edge";
};

std::optional<SelectionChoice> selection_from_string(const std::string& text);

struct ExperimentSpec {
  std::vector<TopologyFamily> families;
  int nodes = 20;
  std::vector<std::uint64_t> seeds;
  std::vector<SelectionChoice> selections;
  std::vector<bool> append_modes;
  bool header_sec = false;
  bool payload_sec = false;
  std::uint32_t ttl_max = kDefaultTtlMax;
  int tree_fanout = 3;
};

/// One discovery run end to end: discovery, offline verification, exhaustive
/// late-discovery injection, final diff.
struct SingleRun {
  Metrics metrics;
  VerificationReport discovery_report;  // before traffic injection
  GraphDiff final_diff;                 // after traffic injection
  bool clean = false;                   // no extras, final diff empty
};

SingleRun run_single(const NetworkInstance& net, const RunMode& mode,
                     std::uint64_t seed, std::ostream* transcript = nullptr);

struct SuiteRow {
  std::string kind;  // "run" or "mean"
  std::string family;
  int nodes = 0;
  std::string selection;
  bool append = false;
  bool header_sec = false;
  bool payload_sec = false;
  std::string seed;  // number, or "-" for aggregate rows
  double probe_triggers = 0;
  double up_calls = 0;
  double sim_ticks = 0;
  bool clean = false;
};

struct SuiteResult {
  std::vector<SuiteRow> rows;
  bool all_clean = true;
  double wall_clock_seconds = 0;
};

/// Sweep (family x selection x append x seed); emits per-run rows plus one
/// aggregate row per mode. Deterministic: re-running a spec reproduces the
/// CSV byte for byte. Wall clock is reported out of band, not in the CSV.
SuiteResult run_suite(const ExperimentSpec& spec);

std::string suite_csv(const SuiteResult& result);

}  // namespace topoman

#endif
