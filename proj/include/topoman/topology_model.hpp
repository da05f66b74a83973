/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#ifndef TOPOMAN_TOPOLOGY_MODEL_HPP
#define TOPOMAN_TOPOLOGY_MODEL_HPP

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "topoman/ip.hpp"

namespace topoman {

enum class MbKind { firewall, ids, proxy, vpn, load_balancer, generic };

const char* to_string(MbKind kind);
std::optional<MbKind> mb_kind_from_string(const std::string& text);

struct Interface {
  std::string name;
  Ipv4 ip;
  int prefix_len = 30;
  /// Ground-truth flag: attaches to an edge SDN switch and is only
  /// discoverable from live data traffic.
  bool edge_facing = false;

  Subnet subnet() const { return Subnet{ip, prefix_len}; }
};

/// Next hop omitted means directly connected: forward to the destination
/// address itself.
struct RouteEntry {
  Subnet dest;
  std::string out_interface;
  std::optional<Ipv4> next_hop;
};

struct Middlebox {
  std::string id;
  MbKind kind = MbKind::generic;
  bool dynamic_egress = false;  // load balancers pick egress at send time
  std::vector<Interface> interfaces;
  std::vector<RouteEntry> routes;

  const Interface* find_interface(const std::string& name) const;
  const Interface* find_interface_by_ip(Ipv4 ip) const;
  bool owns_ip(Ipv4 ip) const { return find_interface_by_ip(ip) != nullptr; }
};

struct PortRef {
  std::string sw;
  std::string port;
  auto operator<=>(const PortRef&) const = default;
  std::string to_string() const { return sw + ":" + port; }
};

/// A contiguous SDN region. The controller knows its internal topology in
/// full; probes transit it unmodified. Forwarding is a prefix table mapping
/// destinations to border ports; gateway addresses are the L3 next hops
/// middlebox routes point at when they hand traffic to the island.
struct SdnIsland {
  std::string id;
  std::vector<std::string> switches;
  std::vector<std::pair<PortRef, PortRef>> internal_links;
  std::vector<std::pair<Subnet, PortRef>> port_routes;
  std::vector<Ipv4> gateway_ips;

  bool has_switch(const std::string& sw) const;
  bool is_gateway(Ipv4 ip) const;
  std::optional<PortRef> route_port(Ipv4 dest) const;  // longest prefix
};

/// One link endpoint: a middlebox interface or a switch port.
struct Endpoint {
  std::string node;   // middlebox id or switch id
  std::string iface;  // interface name or port name
  auto operator<=>(const Endpoint&) const = default;
  std::string to_string() const { return node + ":" + iface; }
};

/// Undirected; normalized() orders the endpoints so that set membership is
/// independent of insertion order.
struct Link {
  Endpoint a;
  Endpoint b;
  Link normalized() const { return a <= b ? Link{a, b} : Link{b, a}; }
  auto operator<=>(const Link&) const = default;
  std::string to_string() const {
    return a.to_string() + " <-> " + b.to_string();
  }
};

class UnknownEndpointError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class TopologyGraph {
 public:
  void add_middlebox(const Middlebox& mb);        // throws on duplicate id
  void add_island(const SdnIsland& island);       // throws on duplicate id
  /// Idempotent; inserting an existing link in either endpoint order is a
  /// no-op. Returns true when the link is new.
  bool insert_link(const Link& link);

  bool has_link(const Link& link) const;
  const std::set<Link>& links() const { return links_; }
  const std::map<std::string, Middlebox>& middleboxes() const { return mbs_; }
  const std::map<std::string, SdnIsland>& islands() const { return islands_; }
  const SdnIsland* island_of_switch(const std::string& sw) const;

  bool endpoint_exists(const Endpoint& e) const;

 private:
  std::map<std::string, Middlebox> mbs_;
  std::map<std::string, SdnIsland> islands_;
  std::map<std::string, std::string> switch_island_;
  std::set<Link> links_;
};

/// Longest-prefix match over the device's explicit routes plus the implicit
/// directly-connected routes of its interfaces. Ties at equal prefix length
/// go to the earliest declaration, interfaces first.
struct RouteLookup {
  std::string out_interface;
  Ipv4 next_hop;  // destination itself when directly connected
  int prefix_len = 0;
};

std::optional<RouteLookup> lookup_route(const Middlebox& mb, Ipv4 dest);

/// All candidates tied at the best prefix length, in declaration order.
/// Dynamic-egress devices draw their actual egress uniformly among the
/// distinct out-interfaces of this set.
std::vector<RouteLookup> lookup_route_multi(const Middlebox& mb, Ipv4 dest);

struct GraphDiff {
  std::vector<Link> missing_links;  // in reference, not in discovered
  std::vector<Link> extra_links;    // in discovered, not in reference
  std::vector<std::string> missing_nodes;

  bool empty() const {
    return missing_links.empty() && extra_links.empty() &&
           missing_nodes.empty();
  }
};

GraphDiff diff_graphs(const TopologyGraph& discovered,
                      const TopologyGraph& reference);

}  // namespace topoman

#endif
