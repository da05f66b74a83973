/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#ifndef TOPOMAN_SIM_HARNESS_HPP
#define TOPOMAN_SIM_HARNESS_HPP

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "topoman/mb_agent.hpp"
#include "topoman/topogen.hpp"
#include "topoman/topology_manager.hpp"

namespace topoman {

class NotEdgeAttachedError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Metrics {
  std::uint64_t probe_triggers = 0;
  std::uint64_t up_calls = 0;
  std::uint64_t sim_ticks = 0;
  double wall_clock_seconds = 0.0;
  std::uint64_t corrections = 0;
  std::uint64_t resolves = 0;
  std::uint64_t drops = 0;
  std::uint64_t alerts = 0;
};

struct RunMode {
  SelectionMode selection = SelectionMode::EdgeHeuristic;
  EdgeHeuristicKind heuristic = EdgeHeuristicKind::InterfaceBased;
  bool payload_append = false;
  bool header_sec = false;
  bool payload_sec = false;
  std::uint32_t ttl_max = kDefaultTtlMax;
};

struct RunResult {
  Metrics metrics;
  VerificationReport report;
};

struct PathSpec {
  std::uint32_t path_id = 0;
  std::vector<std::string> nodes;
};

struct PathSetup {
  std::map<std::string, std::string> rules;  // device -> out iface or LOCAL
  PairAddrs pair;
};

/// Derive the per-device port-routing rules for a configured path; consecutive
/// nodes must be joined by a direct middlebox link. Throws BadValueError for
/// path-id 0 (reserved for discovery) or non-adjacent nodes.
PathSetup derive_path_rules(const NetworkInstance& net, const PathSpec& spec);

struct PathResult {
  bool ok = false;
  std::vector<std::string> trace;  // device sequence from the terminal up-call
  std::string failed_at;
  std::optional<std::string> last_good;
};

/// Deterministic discrete-event simulator: delivers probes hop by hop over
/// ground-truth links, models SDN-island packet-in/out, and drives the
/// controller. One tick per hop; identical seeds give identical transcripts.
class Simulation {
 public:
  Simulation(const NetworkInstance& net, const RunMode& mode,
             std::uint64_t seed, std::ostream* transcript = nullptr);

  /// Full discovery: select pair, PROBE-INIT, simulate the traversal, process
  /// up-calls, until termination; then offline verification.
  RunResult run_discovery();

  /// Late discovery: inject data traffic on an edge-facing interface.
  TrafficObservation inject_data_traffic(const std::string& mb,
                                         const std::string& iface);
  /// Inject on every residual edge-facing interface (sorted order).
  void inject_all_residual_traffic();

  VerificationReport verify() const;

  /// Pre-configure every device on the path with its port-routing rule.
  PathSetup install_path(const PathSpec& spec);
  /// Trigger the source and follow the probe using the rules as installed.
  PathResult check_path(const PathSpec& spec);
  /// End-to-end path-connectivity verification: install, then check.
  PathResult run_path_verification(const PathSpec& spec);

  /// Drive heartbeats for `rounds` intervals, suppressing the given device
  /// after `fail_after` rounds; used to exercise the failure detector.
  void run_heartbeat_rounds(std::uint64_t rounds, const std::string& fail_device,
                            std::uint64_t fail_after);

  TopologyManager& manager() { return manager_; }
  const TopologyGraph& ground_truth() const { return truth_; }
  MbAgent& agent(const std::string& id) { return agents_.at(id); }
  std::uint64_t now() const { return now_; }

 private:
  struct DeliverProbe {
    std::string wire;
    Endpoint at;
    Ipv4 ip_dst;  // the IP-layer destination, used by island forwarding
  };
  struct DeliverApi {
    std::string wire;
  };
  struct DeliverIslandObs {
    IslandObservation obs;
  };
  struct HeartbeatTick {
    std::string device;
  };
  using EventPayload =
      std::variant<DeliverProbe, DeliverApi, DeliverIslandObs, HeartbeatTick>;
  struct Event {
    std::uint64_t time;
    std::uint64_t seq;
    EventPayload payload;
    bool operator<(const Event& other) const {
      return time != other.time ? time < other.time : seq < other.seq;
    }
  };

  void schedule(std::uint64_t at, EventPayload payload);
  void drain();
  void process(const Event& ev);
  void emit_probe(const LaunchedProbe& probe, const std::string& from_device);
  void deliver_at_middlebox(const DeliverProbe& ev);
  void deliver_at_switch(const DeliverProbe& ev);
  void handle_path_probe(const ProbeMessage& msg, const Endpoint& at);
  void log(const std::string& line);

  NetworkInstance net_;
  RunMode mode_;
  TopologyGraph truth_;
  std::map<std::string, MbAgent> agents_;
  std::map<std::string, Rng> agent_crypto_;
  TopologyManager manager_;
  Rng sel_rng_, lb_rng_;

  std::map<Endpoint, Endpoint> peer_;  // both directions of every link
  std::set<Event> queue_;
  std::uint64_t now_ = 0;
  std::uint64_t seq_ = 0;
  std::int64_t inflight_ = 0;
  Metrics metrics_;
  std::ostream* transcript_;

  // Path verification bookkeeping.
  std::optional<PathResult> path_result_;
  std::vector<std::string> path_nodes_;
  std::string last_forwarder_;
};

}  // namespace topoman

#endif
