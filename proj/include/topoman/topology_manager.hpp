/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#ifndef TOPOMAN_TOPOLOGY_MANAGER_HPP
#define TOPOMAN_TOPOLOGY_MANAGER_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "topoman/api_messages.hpp"
#include "topoman/payload_security.hpp"
#include "topoman/topogen.hpp"
#include "topoman/topology_model.hpp"

namespace topoman {

class DuplicateDeviceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class UnknownDeviceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class CorruptReportError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SelectionMode { EdgeHeuristic, RandomSelect };
enum class EdgeHeuristicKind { InterfaceBased, PolicyBased };

/// Edge-device detection. InterfaceBased: a device is edge when none of its
/// interface subnets equals a subnet of any interface on any other middlebox.
/// PolicyBased: a device is edge when an endpoint-only policy network (one
/// that never appears as both source and destination across the rule set)
/// contains one of its interface subnets.
std::set<std::string> compute_edge_set(const std::vector<Middlebox>& devices,
                                       const std::vector<PolicyRule>* policies,
                                       EdgeHeuristicKind heuristic);

struct SelectedPair {
  std::string src_device, src_iface;
  Ipv4 src_ip;
  std::string dst_device, dst_iface;
  Ipv4 dst_ip;
};

struct TerminationResult {
  bool done = false;
  std::vector<std::pair<std::string, std::string>> residual;
};

/// Data-traffic packet-in at an edge switch, as reported by the SDN
/// controller model: the attached middlebox interface becomes discoverable.
struct TrafficObservation {
  std::string sw;
  std::string port;
  std::string mb;
  std::string iface;
};

/// Packet-in/packet-out record for one probe transiting one island.
struct IslandObservation {
  std::string island;
  PortRef in_port;
  PortRef out_port;
  std::string pair_key;  // pair_id_to_string of the probe's pair id
  std::uint32_t ttl;     // probe TTL while inside the island
};

struct VerificationReport {
  GraphDiff diff;
  std::vector<std::pair<std::string, std::string>> residual;
  std::vector<Link> late_discovery_pending;  // missing links awaiting traffic
  bool clean = false;
};

struct ProbeFlags {
  bool payload_append = false;
  bool header_sec = false;
  bool payload_sec = false;
};

/// Controller state machine: registers capabilities, picks probe pairs,
/// infers links from reports, terminates discovery, and verifies the result.
class TopologyManager {
 public:
  TopologyManager(ControllerKeyPair keys, Rng token_rng,
                  std::uint64_t token_window = 1u << 30,
                  std::uint64_t heartbeat_interval = 1);

  const PublicKey& public_key() const { return keys_.public_key; }

  // --- registration -------------------------------------------------------
  void register_capabilities(const DeviceCapabilities& caps);
  void register_island(const SdnIsland& island);
  void set_edge_facing(std::set<std::pair<std::string, std::string>> ifaces);
  void set_probe_flags(const ProbeFlags& flags) { flags_ = flags; }
  void set_ttl_max(std::uint32_t ttl_max) { ttl_max_ = ttl_max; }

  void compute_edges(EdgeHeuristicKind heuristic,
                     const std::vector<PolicyRule>* policies);
  const std::set<std::string>& edge_set() const { return edge_set_; }

  // --- probe-pair selection ------------------------------------------------
  /// Picks and commits the next pair (attempt counters move); nullopt means
  /// exhausted.
  std::optional<SelectedPair> select_probe_pair(SelectionMode mode, Rng& rng);

  ProbeInit build_probe_init(const SelectedPair& pair, std::uint64_t now);

  /// Forget any partial trace for this probe identity; a re-attempt of the
  /// same pair must not stitch against stale hops.
  void begin_probe(const ProbePairId& id);

  // --- report intake ---------------------------------------------------------
  std::vector<Link> process_probe_update(const ProbeUpdate& report);
  std::vector<Link> process_out_interface_update(const UpdateOutInterface& msg);
  std::vector<Link> process_island_observation(const IslandObservation& obs);
  std::optional<Link> handle_late_discovery(const TrafficObservation& obs);

  // --- termination & verification ---------------------------------------------
  TerminationResult check_termination(SelectionMode mode);
  VerificationReport verify_offline(const TopologyGraph& reference) const;

  // --- token service ------------------------------------------------------------
  ResolveProbeIdResponse resolve(const ResolveProbeIdRequest& req,
                                 std::uint64_t now) const;

  // --- heartbeats -----------------------------------------------------------------
  void record_heartbeat(const Heartbeat& hb);
  bool device_up(const std::string& id, std::uint64_t now) const;

  // --- inspection -----------------------------------------------------------------
  const TopologyGraph& discovered() const { return discovered_; }
  std::size_t undiscovered_count() const { return undiscovered_.size(); }
  std::size_t selection_count() const { return selections_; }
  int max_attempt_count() const;
  std::size_t up_call_count() const { return up_calls_; }

 private:
  struct IfaceRef {
    std::string device;
    std::string iface;
    Ipv4 ip;
  };
  struct ProbeTrace {
    std::map<std::uint32_t, PayloadEntry> entries;        // by observed TTL
    std::map<std::uint32_t, std::string> corrections;     // TTL -> actual out
    std::map<std::uint32_t, IslandObservation> island_obs;  // by downstream TTL
  };

  bool is_undiscovered(const std::string& dev, const std::string& iface) const;
  void mark_discovered(const std::string& dev, const std::string& iface);
  void compute_reachability();
  bool selectable(const std::string& dev, const IfaceRef& iface) const;
  /// Candidate interface pair for a device pair, with its priority tier:
  /// 0 = both interfaces undiscovered, 1 = one side undiscovered (completion
  /// tier: probing toward or from a discovered vantage to reach stragglers).
  struct Candidate {
    std::string src_iface;
    std::string dst_iface;
    int tier;
  };
  std::optional<Candidate> eligible_iface_pair(const std::string& src_dev,
                                               const std::string& dst_dev) const;
  std::optional<SelectedPair> pick_preferred(bool edge_only);
  std::optional<SelectedPair> pick_random(Rng& rng);
  SelectedPair commit(const std::string& sd, const std::string& si,
                      const std::string& dd, const std::string& di);
  std::vector<Link> stitch(const std::string& pair_key);
  PayloadEntry open_entry(const SealedPayload& seg, const ProbePairId& pair) const;
  bool insert_discovered_link(const Link& link, std::vector<Link>& out);

  ControllerKeyPair keys_;
  Rng token_rng_;
  TokenAuthority tokens_;
  std::uint64_t heartbeat_interval_;
  std::uint32_t ttl_max_ = kDefaultTtlMax;
  ProbeFlags flags_;

  TopologyGraph discovered_;
  std::vector<std::string> device_order_;               // registration order
  std::map<std::string, std::size_t> device_index_;
  std::map<std::string, std::vector<IfaceRef>> undiscovered_by_dev_;
  std::set<std::pair<std::string, std::string>> undiscovered_;
  std::set<std::pair<std::string, std::string>> edge_facing_;
  std::set<std::string> edge_set_;

  // Interfaces no other device can route a probe to (access stubs); they
  // can only surface through late discovery and are skipped by selection.
  std::set<std::pair<std::string, std::string>> unreachable_;
  bool reachability_ready_ = false;

  std::map<std::pair<std::string, std::string>, int> attempts_;  // iface pairs
  std::map<std::pair<std::string, std::string>, int> device_pair_sel_;
  std::map<std::string, int> device_sel_;
  std::size_t selections_ = 0;
  std::size_t up_calls_ = 0;

  std::map<std::string, ProbeTrace> traces_;
  std::map<std::string, std::uint64_t> last_heartbeat_;
};

}  // namespace topoman

#endif
