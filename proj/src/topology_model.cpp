/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "topoman/topology_model.hpp"

#include <algorithm>

namespace topoman {

const char* to_string(MbKind kind) {
  switch (kind) {
    case MbKind::firewall: return "firewall";
    case MbKind::ids: return "ids";
    case MbKind::proxy: return "proxy";
    case MbKind::vpn: return "vpn";
    case MbKind::load_balancer: return "load_balancer";
    case MbKind::generic: return "generic";
  }
  return "generic";
}

std::optional<MbKind> mb_kind_from_string(const std::string& text) {
  for (MbKind k : {MbKind::firewall, MbKind::ids, MbKind::proxy, MbKind::vpn,
                   MbKind::load_balancer, MbKind::generic})
    if (text == to_string(k)) return k;
  return std::nullopt;
}

const Interface* Middlebox::find_interface(const std::string& name) const {
  for (const auto& i : interfaces)
    if (i.name == name) return &i;
  return nullptr;
}

const Interface* Middlebox::find_interface_by_ip(Ipv4 ip) const {
  for (const auto& i : interfaces)
    if (i.ip == ip) return &i;
  return nullptr;
}

bool SdnIsland::has_switch(const std::string& sw) const {
  return std::find(switches.begin(), switches.end(), sw) != switches.end();
}

bool SdnIsland::is_gateway(Ipv4 ip) const {
  return std::find(gateway_ips.begin(), gateway_ips.end(), ip) !=
         gateway_ips.end();
}

std::optional<PortRef> SdnIsland::route_port(Ipv4 dest) const {
  const PortRef* best = nullptr;
  int best_len = -1;
  for (const auto& [prefix, port] : port_routes) {
    if (prefix.contains(dest) && prefix.prefix_len > best_len) {
      best = &port;
      best_len = prefix.prefix_len;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

void TopologyGraph::add_middlebox(const Middlebox& mb) {
  if (!mbs_.emplace(mb.id, mb).second)
    throw std::runtime_error("duplicate middlebox id: " + mb.id);
}

void TopologyGraph::add_island(const SdnIsland& island) {
  if (!islands_.emplace(island.id, island).second)
    throw std::runtime_error("duplicate island id: " + island.id);
  for (const auto& sw : island.switches) {
    if (!switch_island_.emplace(sw, island.id).second)
      throw std::runtime_error("duplicate switch id: " + sw);
  }
}

const SdnIsland* TopologyGraph::island_of_switch(const std::string& sw) const {
  auto it = switch_island_.find(sw);
  if (it == switch_island_.end()) return nullptr;
  return &islands_.at(it->second);
}

bool TopologyGraph::endpoint_exists(const Endpoint& e) const {
  auto mb = mbs_.find(e.node);
  if (mb != mbs_.end()) return mb->second.find_interface(e.iface) != nullptr;
  // Switch ports are not enumerated up front; any port name on a known
  // switch is a valid endpoint.
  return switch_island_.count(e.node) > 0;
}

bool TopologyGraph::insert_link(const Link& link) {
  const Link norm = link.normalized();
  if (norm.a == norm.b)
    throw UnknownEndpointError("link endpoints must be distinct: " +
                               norm.a.to_string());
  if (!endpoint_exists(norm.a))
    throw UnknownEndpointError("unknown endpoint: " + norm.a.to_string());
  if (!endpoint_exists(norm.b))
    throw UnknownEndpointError("unknown endpoint: " + norm.b.to_string());
  return links_.insert(norm).second;
}

bool TopologyGraph::has_link(const Link& link) const {
  return links_.count(link.normalized()) > 0;
}

std::vector<RouteLookup> lookup_route_multi(const Middlebox& mb, Ipv4 dest) {
  struct Candidate {
    RouteLookup lookup;
  };
  std::vector<RouteLookup> candidates;
  for (const auto& iface : mb.interfaces) {
    if (iface.subnet().contains(dest))
      candidates.push_back(RouteLookup{iface.name, dest, iface.prefix_len});
  }
  for (const auto& r : mb.routes) {
    if (r.dest.contains(dest))
      candidates.push_back(RouteLookup{
          r.out_interface, r.next_hop.value_or(dest), r.dest.prefix_len});
  }
  int best = -1;
  for (const auto& c : candidates) best = std::max(best, c.prefix_len);
  std::vector<RouteLookup> out;
  for (const auto& c : candidates)
    if (c.prefix_len == best) out.push_back(c);
  return out;
}

std::optional<RouteLookup> lookup_route(const Middlebox& mb, Ipv4 dest) {
  auto all = lookup_route_multi(mb, dest);
  if (all.empty()) return std::nullopt;
  return all.front();
}

GraphDiff diff_graphs(const TopologyGraph& discovered,
                      const TopologyGraph& reference) {
  GraphDiff out;
  for (const auto& l : reference.links())
    if (!discovered.has_link(l)) out.missing_links.push_back(l);
  for (const auto& l : discovered.links())
    if (!reference.has_link(l)) out.extra_links.push_back(l);
  for (const auto& [id, mb] : reference.middleboxes())
    if (!discovered.middleboxes().count(id)) out.missing_nodes.push_back(id);
  for (const auto& [id, island] : reference.islands())
    if (!discovered.islands().count(id)) out.missing_nodes.push_back(id);
  return out;
}

}  // namespace topoman
