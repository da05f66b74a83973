/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#ifndef TOPOMAN_MB_AGENT_HPP
#define TOPOMAN_MB_AGENT_HPP

#include <functional>
#include <map>
#include <optional>
#include <unordered_map>
#include <variant>
#include <vector>

#include "topoman/api_messages.hpp"
#include "topoman/payload_security.hpp"
#include "topoman/probe_protocol.hpp"
#include "topoman/rng.hpp"
#include "topoman/topology_model.hpp"

namespace topoman {

class NoRouteToDestination : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Port-routing rule value for the terminal node of a configured path:
/// deliver up instead of forwarding.
inline constexpr const char* kLocalDeliver = "LOCAL";

enum class EgressMode { RoutePredict, StaticSteer };

/// Outcome of the egress computation for one probe at one device.
/// payload_out is what the hop writes into the probe payload: the concrete
/// interface when the prediction is trustworthy, PENDING when the device
/// picks dynamically and a correction will follow.
struct EgressDecision {
  std::string payload_out;
  std::string actual_out;
  Ipv4 next_hop;
  bool correction_needed = false;
};

/// A probe leaving a device, plus the controller messages the hop produced.
struct LaunchedProbe {
  ProbeMessage msg;
  std::string out_iface;
  Ipv4 next_hop;       // L2 target: peer interface or island gateway
  Ipv4 route_target;   // IP-layer destination the hop routed toward
  std::optional<ProbeUpdate> source_report;  // non-append source up-call
  std::optional<UpdateOutInterface> correction;
};

struct UpCallAndForward {
  ProbeUpdate report;
  LaunchedProbe forward;
};
struct AppendAndForward {
  LaunchedProbe forward;
};
struct TerminalUpCall {
  ProbeUpdate report;
};
struct DropProbe {
  std::string reason;
  bool alert = false;  // set for unresolvable tokens (possible spoofing)
};
using ProbeAction =
    std::variant<UpCallAndForward, AppendAndForward, TerminalUpCall, DropProbe>;

struct ForwardPath {
  LaunchedProbe forward;
};
struct PathTerminal {
  ProbeUpdate report;  // terminal up-call carrying the hop trace
};
struct PathBroken {
  std::string device;  // no rule installed here for the probe's path-id
};
using PathAction = std::variant<ForwardPath, PathTerminal, PathBroken, DropProbe>;

/// Per-middlebox agent: originates probes on PROBE-INIT, digests and forwards
/// in-transit probes, steers path-checker probes by path-id, and emits
/// heartbeats. Stateless across probes except for the installed path rules.
class MbAgent {
 public:
  using Resolver = std::function<ResolveProbeIdResponse(const ResolveProbeIdRequest&)>;

  MbAgent(Middlebox device, PublicKey controller_pub,
          std::uint32_t ttl_max = kDefaultTtlMax);

  const Middlebox& device() const { return device_; }
  void set_resolver(Resolver resolver) { resolver_ = std::move(resolver); }
  void set_ttl_max(std::uint32_t ttl_max) { ttl_max_ = ttl_max; }

  void install_path_rule(std::uint32_t path_id, const std::string& out_iface);
  void remove_path_rule(std::uint32_t path_id);

  /// One probe per destination interface the device can route to, collapsed
  /// to one per distinct egress interface. Throws NoRouteToDestination when
  /// nothing is reachable.
  std::vector<LaunchedProbe> handle_probe_init(const ProbeInit& cmd,
                                               Rng& lb_rng, Rng& crypto_rng);

  /// Discovery probe arriving on in_iface.
  ProbeAction handle_incoming_probe(const ProbeMessage& msg,
                                    const std::string& in_iface, Rng& lb_rng,
                                    Rng& crypto_rng);

  /// Path-checker probe arriving on in_iface.
  PathAction handle_path_checker(const ProbeMessage& msg,
                                 const std::string& in_iface, Rng& crypto_rng);

  /// Originate a path-checker probe for an installed path rule.
  std::optional<LaunchedProbe> launch_path_probe(std::uint32_t path_id,
                                                 const PairAddrs& pair,
                                                 Rng& crypto_rng);

  /// Longest-prefix egress selection; RoutePredict lets dynamic-egress
  /// devices realize a different interface than predicted, StaticSteer pins
  /// the prediction. nullopt = NoRoute.
  std::optional<EgressDecision> compute_output_interface(Ipv4 dest,
                                                         EgressMode mode,
                                                         Rng& lb_rng) const;

  Heartbeat heartbeat_tick(std::uint64_t now) const;

 private:
  std::vector<const RouteLookup*> lookup(Ipv4 dest) const;
  SealedPayload seal_entry(const PayloadEntry& entry, const ProbeHeader& header,
                           Rng& crypto_rng) const;
  std::optional<Ipv4> pair_destination(const ProbePairId& id) const;

  Middlebox device_;
  PublicKey controller_pub_{};
  std::uint32_t ttl_max_;
  Resolver resolver_;
  std::map<std::uint32_t, std::string> path_rules_;

  // Route index: prefix length (descending) -> masked network -> candidates
  // in declaration order. Matches the declarative lookup_route semantics.
  std::vector<RouteLookup> route_storage_;
  std::map<int, std::unordered_map<std::uint32_t, std::vector<std::size_t>>,
           std::greater<int>>
      index_;
};

}  // namespace topoman

#endif
