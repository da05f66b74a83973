/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#ifndef TOPOMAN_TOPOGEN_HPP
#define TOPOMAN_TOPOGEN_HPP

#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "topoman/topology_model.hpp"

namespace topoman {

class ParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class InconsistentRouteError : public ParseError {
  using ParseError::ParseError;
};
class SubnetMismatchError : public ParseError {
  using ParseError::ParseError;
};

/// A network policy rule; only the endpoint networks matter for edge
/// detection, the action is carried opaquely.
struct PolicyRule {
  Subnet src_network;
  Subnet dst_network;
  std::string action;
  bool operator==(const PolicyRule&) const = default;
};

/// Parsed network configuration: the simulator ground truth.
struct NetworkInstance {
  std::string family = "custom";
  std::vector<Middlebox> middleboxes;  // declaration order
  std::vector<SdnIsland> islands;
  std::vector<Link> links;
  std::vector<PolicyRule> policies;

  const Middlebox* find_middlebox(const std::string& id) const;
  const SdnIsland* find_island(const std::string& id) const;
  const Middlebox* owner_of_ip(Ipv4 ip) const;

  /// Ground-truth graph (middleboxes, islands, links).
  TopologyGraph ground_truth() const;

  /// Interfaces flagged as attached to edge SDN switches, i.e. only
  /// discoverable from live data traffic.
  std::set<std::pair<std::string, std::string>> edge_facing_interfaces() const;

  /// The peer endpoint of (mb, iface) in the ground-truth links, if linked.
  std::optional<Endpoint> peer_of(const std::string& mb,
                                  const std::string& iface) const;

  double mean_interfaces_per_middlebox() const;

  /// Structural validation; throws ParseError subclasses on violations.
  void validate() const;
};

NetworkInstance parse_network_config(std::istream& in);
NetworkInstance parse_network_config_file(const std::string& path);
std::string serialize_network_config(const NetworkInstance& net);

std::vector<PolicyRule> parse_policy_config(std::istream& in);
std::vector<PolicyRule> parse_policy_config_file(const std::string& path);
std::string serialize_policy_config(const std::vector<PolicyRule>& rules);

enum class TopologyFamily { CiscoEnterprise, InlineOffline, Tree, FullMesh };

const char* to_string(TopologyFamily family);
std::optional<TopologyFamily> family_from_string(const std::string& text);

struct GeneratorOptions {
  int tree_fanout = 3;
};

/// Deterministic generator for the evaluation families. Instances always
/// pass validate().
NetworkInstance generate_topology(TopologyFamily family, int n,
                                  std::uint64_t seed,
                                  const GeneratorOptions& opts = {});

}  // namespace topoman

#endif
