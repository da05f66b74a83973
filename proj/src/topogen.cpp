/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "topoman/topogen.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>

namespace topoman {

const Middlebox* NetworkInstance::find_middlebox(const std::string& id) const {
  for (const auto& mb : middleboxes)
    if (mb.id == id) return &mb;
  return nullptr;
}

const SdnIsland* NetworkInstance::find_island(const std::string& id) const {
  for (const auto& island : islands)
    if (island.id == id) return &island;
  return nullptr;
}

const Middlebox* NetworkInstance::owner_of_ip(Ipv4 ip) const {
  for (const auto& mb : middleboxes)
    if (mb.owns_ip(ip)) return &mb;
  return nullptr;
}

TopologyGraph NetworkInstance::ground_truth() const {
  TopologyGraph g;
  for (const auto& mb : middleboxes) g.add_middlebox(mb);
  for (const auto& island : islands) g.add_island(island);
  for (const auto& l : links) g.insert_link(l);
  return g;
}

std::set<std::pair<std::string, std::string>>
NetworkInstance::edge_facing_interfaces() const {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& mb : middleboxes)
    for (const auto& iface : mb.interfaces)
      if (iface.edge_facing) out.emplace(mb.id, iface.name);
  return out;
}

std::optional<Endpoint> NetworkInstance::peer_of(const std::string& mb,
                                                 const std::string& iface) const {
  const Endpoint self{mb, iface};
  for (const auto& l : links) {
    if (l.a == self) return l.b;
    if (l.b == self) return l.a;
  }
  return std::nullopt;
}

double NetworkInstance::mean_interfaces_per_middlebox() const {
  if (middleboxes.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& mb : middleboxes) total += mb.interfaces.size();
  return static_cast<double>(total) / static_cast<double>(middleboxes.size());
}

void NetworkInstance::validate() const {
  TopologyGraph g = ground_truth();  // throws on duplicate ids / bad endpoints

  std::map<Ipv4, std::string> ip_owner;
  for (const auto& mb : middleboxes) {
    if (mb.interfaces.empty())
      throw ParseError("middlebox " + mb.id + " has no interfaces");
    if (mb.dynamic_egress && mb.kind != MbKind::load_balancer)
      throw ParseError("middlebox " + mb.id +
                       " is dynamic-egress but not a load_balancer");
    std::set<std::string> names;
    for (const auto& iface : mb.interfaces) {
      if (!names.insert(iface.name).second)
        throw ParseError("middlebox " + mb.id + " repeats interface " +
                         iface.name);
      if (iface.prefix_len < 0 || iface.prefix_len > 32)
        throw ParseError("interface " + mb.id + ":" + iface.name +
                         " has bad prefix length");
      ip_owner.emplace(iface.ip, mb.id);
    }
  }

  std::map<Ipv4, std::string> gateway_island;
  for (const auto& island : islands) {
    for (Ipv4 gw : island.gateway_ips) {
      if (ip_owner.count(gw))
        throw ParseError("gateway " + gw.to_string() +
                         " collides with a middlebox interface");
      if (!gateway_island.emplace(gw, island.id).second)
        throw ParseError("gateway " + gw.to_string() + " declared twice");
    }
    for (const auto& [a, b] : island.internal_links)
      if (!island.has_switch(a.sw) || !island.has_switch(b.sw))
        throw ParseError("island " + island.id +
                         " internal link references a foreign switch");
    for (const auto& [prefix, port] : island.port_routes)
      if (!island.has_switch(port.sw))
        throw ParseError("island " + island.id + " route via foreign switch " +
                         port.sw);
  }

  // Linked middlebox interfaces must share their subnet.
  std::set<Link> seen;
  for (const auto& l : links) {
    if (!seen.insert(l.normalized()).second)
      throw ParseError("duplicate link: " + l.to_string());
    const Middlebox* ma = find_middlebox(l.a.node);
    const Middlebox* mb = find_middlebox(l.b.node);
    if (ma && mb) {
      const Interface* ia = ma->find_interface(l.a.iface);
      const Interface* ib = mb->find_interface(l.b.iface);
      if (!ia->subnet().same_network(ib->subnet()))
        throw SubnetMismatchError("linked interfaces on different subnets: " +
                                  l.to_string());
    }
  }

  // Edge-facing interfaces attach to a switch.
  for (const auto& mb : middleboxes)
    for (const auto& iface : mb.interfaces)
      if (iface.edge_facing) {
        auto peer = peer_of(mb.id, iface.name);
        if (!peer || find_middlebox(peer->node))
          throw ParseError("edge-facing interface " + mb.id + ":" + iface.name +
                           " is not attached to a switch");
      }

  // Every route must exit a linked interface toward a reachable next hop.
  for (const auto& mb : middleboxes) {
    for (const auto& r : mb.routes) {
      const Interface* out = mb.find_interface(r.out_interface);
      if (!out)
        throw InconsistentRouteError("route on " + mb.id +
                                     " via unknown interface " +
                                     r.out_interface);
      auto peer = peer_of(mb.id, r.out_interface);
      if (!peer)
        throw InconsistentRouteError("route on " + mb.id + " via " +
                                     r.out_interface +
                                     " which has no link");
      if (!r.next_hop) {
        if (!out->subnet().contains_subnet(r.dest))
          throw InconsistentRouteError(
              "direct route on " + mb.id + " for " + r.dest.to_string() +
              " outside the subnet of " + r.out_interface);
        continue;
      }
      if (!out->subnet().contains(*r.next_hop))
        throw InconsistentRouteError("next hop " + r.next_hop->to_string() +
                                     " outside the subnet of " + mb.id + ":" +
                                     r.out_interface);
      if (const Middlebox* peer_mb = find_middlebox(peer->node)) {
        const Interface* pi = peer_mb->find_interface(peer->iface);
        if (pi->ip != *r.next_hop)
          throw InconsistentRouteError(
              "next hop " + r.next_hop->to_string() + " on " + mb.id +
              " is not the linked peer " + peer->to_string());
      } else {
        const SdnIsland* island = g.island_of_switch(peer->node);
        if (!island || !island->is_gateway(*r.next_hop))
          throw InconsistentRouteError(
              "next hop " + r.next_hop->to_string() + " on " + mb.id +
              " is not a gateway of the attached island");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

namespace {

std::vector<std::pair<std::string, std::string>> split_kv(
    const std::string& rest, int line_no) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream is(rest);
  std::string tok;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected key=value, got '" + tok + "'");
    out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return out;
}

class KvView {
 public:
  KvView(std::vector<std::pair<std::string, std::string>> kv, int line)
      : kv_(std::move(kv)), line_(line) {}

  std::string need(const std::string& key) const {
    for (const auto& [k, v] : kv_)
      if (k == key) return v;
    throw ParseError("line " + std::to_string(line_) + ": missing " + key + "=");
  }
  std::optional<std::string> get(const std::string& key) const {
    for (const auto& [k, v] : kv_)
      if (k == key) return v;
    return std::nullopt;
  }
  Ipv4 need_ip(const std::string& key) const {
    auto ip = Ipv4::parse(need(key));
    if (!ip)
      throw ParseError("line " + std::to_string(line_) + ": bad IPv4 in " + key);
    return *ip;
  }
  Subnet need_subnet(const std::string& key) const {
    auto s = Subnet::parse(need(key));
    if (!s)
      throw ParseError("line " + std::to_string(line_) + ": bad prefix in " +
                       key);
    return *s;
  }
  int line() const { return line_; }

 private:
  std::vector<std::pair<std::string, std::string>> kv_;
  int line_;
};

PortRef parse_portref(const std::string& text, int line_no) {
  auto colon = text.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw ParseError("line " + std::to_string(line_no) +
                     ": expected SWITCH:PORT, got '" + text + "'");
  return PortRef{text.substr(0, colon), text.substr(colon + 1)};
}

Endpoint parse_endpoint(const std::string& text, int line_no) {
  auto colon = text.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw ParseError("line " + std::to_string(line_no) +
                     ": expected NODE:IFACE, got '" + text + "'");
  return Endpoint{text.substr(0, colon), text.substr(colon + 1)};
}

}  // namespace

NetworkInstance parse_network_config(std::istream& in) {
  NetworkInstance net;
  std::map<std::string, std::size_t> mb_index;
  std::map<std::string, std::size_t> island_index;
  std::map<std::string, std::string> switch_to_island;

  auto mb_of = [&](const std::string& id, int line) -> Middlebox& {
    auto it = mb_index.find(id);
    if (it == mb_index.end())
      throw ParseError("line " + std::to_string(line) +
                       ": unknown middlebox " + id);
    return net.middleboxes[it->second];
  };
  auto island_of = [&](const std::string& id, int line) -> SdnIsland& {
    auto it = island_index.find(id);
    if (it == island_index.end())
      throw ParseError("line " + std::to_string(line) + ": unknown island " + id);
    return net.islands[it->second];
  };

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    if (line[start] == '#') continue;
    if (line[start] != '[')
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected [section] tag");
    auto close = line.find(']', start);
    if (close == std::string::npos)
      throw ParseError("line " + std::to_string(line_no) + ": unclosed tag");
    const std::string tag = line.substr(start + 1, close - start - 1);
    KvView kv(split_kv(line.substr(close + 1), line_no), line_no);

    if (tag == "meta") {
      net.family = kv.need("family");
    } else if (tag == "middlebox") {
      Middlebox mb;
      mb.id = kv.need("id");
      if (mb_index.count(mb.id))
        throw ParseError("line " + std::to_string(line_no) +
                         ": duplicate middlebox " + mb.id);
      auto kind = mb_kind_from_string(kv.need("kind"));
      if (!kind)
        throw ParseError("line " + std::to_string(line_no) + ": unknown kind");
      mb.kind = *kind;
      mb.dynamic_egress = kv.get("dynamic").value_or("0") == "1";
      mb_index[mb.id] = net.middleboxes.size();
      net.middleboxes.push_back(std::move(mb));
    } else if (tag == "interface") {
      Middlebox& mb = mb_of(kv.need("mb"), line_no);
      Interface iface;
      iface.name = kv.need("name");
      iface.ip = kv.need_ip("ip");
      const std::string prefix = kv.need("prefix");
      try {
        iface.prefix_len = std::stoi(prefix);
      } catch (...) {
        throw ParseError("line " + std::to_string(line_no) + ": bad prefix");
      }
      if (iface.prefix_len < 0 || iface.prefix_len > 32)
        throw ParseError("line " + std::to_string(line_no) +
                         ": prefix out of range");
      iface.edge_facing = kv.get("edge_facing").value_or("0") == "1";
      mb.interfaces.push_back(std::move(iface));
    } else if (tag == "route") {
      Middlebox& mb = mb_of(kv.need("mb"), line_no);
      RouteEntry r;
      r.dest = kv.need_subnet("dest");
      r.out_interface = kv.need("out");
      if (auto nh = kv.get("next_hop")) {
        auto ip = Ipv4::parse(*nh);
        if (!ip)
          throw ParseError("line " + std::to_string(line_no) +
                           ": bad next_hop");
        r.next_hop = *ip;
      }
      mb.routes.push_back(std::move(r));
    } else if (tag == "island") {
      SdnIsland island;
      island.id = kv.need("id");
      if (island_index.count(island.id))
        throw ParseError("line " + std::to_string(line_no) +
                         ": duplicate island " + island.id);
      island_index[island.id] = net.islands.size();
      net.islands.push_back(std::move(island));
    } else if (tag == "switch") {
      SdnIsland& island = island_of(kv.need("island"), line_no);
      const std::string id = kv.need("id");
      if (!switch_to_island.emplace(id, island.id).second)
        throw ParseError("line " + std::to_string(line_no) +
                         ": duplicate switch " + id);
      island.switches.push_back(id);
    } else if (tag == "island_link") {
      PortRef a = parse_portref(kv.need("a"), line_no);
      PortRef b = parse_portref(kv.need("b"), line_no);
      auto ia = switch_to_island.find(a.sw);
      auto ib = switch_to_island.find(b.sw);
      if (ia == switch_to_island.end() || ib == switch_to_island.end() ||
          ia->second != ib->second)
        throw ParseError("line " + std::to_string(line_no) +
                         ": island link must join switches of one island");
      island_of(ia->second, line_no).internal_links.emplace_back(a, b);
    } else if (tag == "gateway") {
      island_of(kv.need("island"), line_no)
          .gateway_ips.push_back(kv.need_ip("ip"));
    } else if (tag == "island_route") {
      SdnIsland& island = island_of(kv.need("island"), line_no);
      island.port_routes.emplace_back(kv.need_subnet("prefix"),
                                      parse_portref(kv.need("port"), line_no));
    } else if (tag == "link") {
      net.links.push_back(Link{parse_endpoint(kv.need("a"), line_no),
                               parse_endpoint(kv.need("b"), line_no)});
    } else if (tag == "policy") {
      PolicyRule rule;
      rule.src_network = kv.need_subnet("src");
      rule.dst_network = kv.need_subnet("dst");
      rule.action = kv.need("action");
      net.policies.push_back(std::move(rule));
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": unknown tag [" +
                       tag + "]");
    }
  }
  net.validate();
  return net;
}

NetworkInstance parse_network_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_network_config(in);
}

std::string serialize_network_config(const NetworkInstance& net) {
  std::ostringstream out;
  out << "[meta] family=" << net.family << "\n";
  for (const auto& mb : net.middleboxes) {
    out << "[middlebox] id=" << mb.id << " kind=" << to_string(mb.kind)
        << " dynamic=" << (mb.dynamic_egress ? 1 : 0) << "\n";
    for (const auto& iface : mb.interfaces) {
      out << "[interface] mb=" << mb.id << " name=" << iface.name
          << " ip=" << iface.ip.to_string() << " prefix=" << iface.prefix_len;
      if (iface.edge_facing) out << " edge_facing=1";
      out << "\n";
    }
    for (const auto& r : mb.routes) {
      out << "[route] mb=" << mb.id << " dest=" << r.dest.to_string()
          << " out=" << r.out_interface;
      if (r.next_hop) out << " next_hop=" << r.next_hop->to_string();
      out << "\n";
    }
  }
  for (const auto& island : net.islands) {
    out << "[island] id=" << island.id << "\n";
    for (const auto& sw : island.switches)
      out << "[switch] island=" << island.id << " id=" << sw << "\n";
    for (const auto& [a, b] : island.internal_links)
      out << "[island_link] a=" << a.to_string() << " b=" << b.to_string()
          << "\n";
    for (Ipv4 gw : island.gateway_ips)
      out << "[gateway] island=" << island.id << " ip=" << gw.to_string()
          << "\n";
    for (const auto& [prefix, port] : island.port_routes)
      out << "[island_route] island=" << island.id
          << " prefix=" << prefix.to_string() << " port=" << port.to_string()
          << "\n";
  }
  for (const auto& l : net.links)
    out << "[link] a=" << l.a.to_string() << " b=" << l.b.to_string() << "\n";
  for (const auto& p : net.policies)
    out << "[policy] src=" << p.src_network.to_string()
        << " dst=" << p.dst_network.to_string() << " action=" << p.action
        << "\n";
  return out.str();
}

std::vector<PolicyRule> parse_policy_config(std::istream& in) {
  std::vector<PolicyRule> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream is(line);
    std::string src, arrow, dst, action;
    if (!(is >> src)) continue;  // blank
    if (src[0] == '#') continue;
    if (!(is >> arrow >> dst >> action) || arrow != "->")
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected '<src> -> <dst> <action>'");
    auto s = Subnet::parse(src);
    auto d = Subnet::parse(dst);
    if (!s || !d)
      throw ParseError("line " + std::to_string(line_no) + ": bad prefix");
    out.push_back(PolicyRule{*s, *d, action});
  }
  return out;
}

std::vector<PolicyRule> parse_policy_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_policy_config(in);
}

std::string serialize_policy_config(const std::vector<PolicyRule>& rules) {
  std::ostringstream out;
  for (const auto& r : rules)
    out << r.src_network.to_string() << " -> " << r.dst_network.to_string()
        << " " << r.action << "\n";
  return out.str();
}

const char* to_string(TopologyFamily family) {
  switch (family) {
    case TopologyFamily::CiscoEnterprise: return "cisco";
    case TopologyFamily::InlineOffline: return "inline_offline";
    case TopologyFamily::Tree: return "tree";
    case TopologyFamily::FullMesh: return "full_mesh";
  }
  return "custom";
}

std::optional<TopologyFamily> family_from_string(const std::string& text) {
  for (TopologyFamily f :
       {TopologyFamily::CiscoEnterprise, TopologyFamily::InlineOffline,
        TopologyFamily::Tree, TopologyFamily::FullMesh})
    if (text == to_string(f)) return f;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

namespace {

/// Incremental construction of a NetworkInstance: /30 address allocation,
/// interface/port numbering, and the shortest-path route tables derived from
/// the finished link set.
class Builder {
 public:
  explicit Builder(std::string family) { net_.family = std::move(family); }

  Middlebox& add_mb(const std::string& id, MbKind kind, bool dynamic = false) {
    Middlebox mb;
    mb.id = id;
    mb.kind = kind;
    mb.dynamic_egress = dynamic;
    net_.middleboxes.push_back(std::move(mb));
    return net_.middleboxes.back();
  }

  SdnIsland& add_island(const std::string& id, int switch_count) {
    SdnIsland island;
    island.id = id;
    for (int i = 0; i < switch_count; ++i)
      island.switches.push_back(id + "-SW" + std::to_string(i));
    for (int i = 0; i + 1 < switch_count; ++i)
      island.internal_links.emplace_back(
          PortRef{island.switches[i], "x" + std::to_string(i)},
          PortRef{island.switches[i + 1], "x" + std::to_string(i) + "b"});
    net_.islands.push_back(std::move(island));
    return net_.islands.back();
  }

  /// Point-to-point middlebox link over a fresh /30.
  void link_mbs(const std::string& a, const std::string& b) {
    const Subnet subnet = alloc_link_subnet();
    Interface ia{next_iface_name(a), Ipv4{subnet.network().value + 1}, 30};
    Interface ib{next_iface_name(b), Ipv4{subnet.network().value + 2}, 30};
    mb(a).interfaces.push_back(ia);
    mb(b).interfaces.push_back(ib);
    net_.links.push_back(Link{{a, ia.name}, {b, ib.name}});
  }

  /// Attach a middlebox to an island switch over a fresh /30; the island owns
  /// the gateway half of the subnet.
  void attach(const std::string& mb_id, const std::string& island_id,
              int switch_idx = 0) {
    const Subnet subnet = alloc_link_subnet();
    Interface iface{next_iface_name(mb_id), Ipv4{subnet.network().value + 1},
                    30};
    mb(mb_id).interfaces.push_back(iface);
    SdnIsland& isl = island(island_id);
    isl.gateway_ips.push_back(Ipv4{subnet.network().value + 2});
    const std::string sw = isl.switches.at(switch_idx);
    net_.links.push_back(Link{{mb_id, iface.name}, {sw, next_port_name(sw)}});
  }

  /// Edge-facing stub: attaches to an edge switch, carries a 192.168.0.0/16
  /// client subnet, gets no routes and no gateway — discoverable only from
  /// data traffic.
  void attach_stub(const std::string& mb_id, const std::string& island_id,
                   int switch_idx = 0) {
    const std::uint32_t base = 0xC0A80000u + 4u * stub_count_++;
    Interface iface{next_iface_name(mb_id), Ipv4{base + 1}, 30, true};
    mb(mb_id).interfaces.push_back(iface);
    const std::string sw = island(island_id).switches.at(switch_idx);
    net_.links.push_back(Link{{mb_id, iface.name}, {sw, next_port_name(sw)}});
  }

  Middlebox& mb(const std::string& id) {
    for (auto& m : net_.middleboxes)
      if (m.id == id) return m;
    throw std::logic_error("builder: unknown middlebox " + id);
  }
  SdnIsland& island(const std::string& id) {
    for (auto& isl : net_.islands)
      if (isl.id == id) return isl;
    throw std::logic_error("builder: unknown island " + id);
  }

  /// Devices that never forward transit traffic (edge and offline
  /// middleboxes): routes go around them, they are endpoints only.
  void set_non_transit(std::set<std::string> ids) { non_transit_ = std::move(ids); }

  /// Duplicate, at equal prefix, the routes a load balancer has via
  /// `primary_iface`, steering them through `alt_iface` instead. Gives
  /// dynamic-egress devices a real choice to draw from.
  void add_ecmp_alternates(const std::string& mb_id,
                           const std::string& primary_iface,
                           const std::string& alt_iface, Ipv4 alt_next_hop) {
    Middlebox& m = mb(mb_id);
    std::vector<RouteEntry> extra;
    for (const auto& r : m.routes)
      if (r.out_interface == primary_iface)
        extra.push_back(RouteEntry{r.dest, alt_iface, alt_next_hop});
    m.routes.insert(m.routes.end(), extra.begin(), extra.end());
  }

  /// Compute shortest-path route tables for every middlebox and forwarding
  /// tables for every island, then validate.
  NetworkInstance finish() {
    build_adjacency();
    for (auto& m : net_.middleboxes) emit_device_routes(m);
    for (auto& isl : net_.islands) emit_island_routes(isl);
    net_.validate();
    return std::move(net_);
  }

 private:
  struct Hop {
    std::string neighbor;       // node id (middlebox or island)
    std::string out_iface;      // set when the source node is a middlebox
    Ipv4 next_hop;              // peer interface ip, or island gateway
    PortRef port;               // set when the source node is an island
  };

  Subnet alloc_link_subnet() {
    return Subnet{Ipv4{0x0A000000u + 4u * link_count_++}, 30};
  }
  std::string next_iface_name(const std::string& mb_id) {
    return "eth" + std::to_string(iface_count_[mb_id]++);
  }
  std::string next_port_name(const std::string& sw) {
    return "p" + std::to_string(port_count_[sw]++);
  }

  void build_adjacency() {
    adj_.clear();
    for (const auto& l : net_.links) {
      const Middlebox* ma = net_.find_middlebox(l.a.node);
      const Middlebox* mb_ = net_.find_middlebox(l.b.node);
      if (ma && mb_) {
        const Interface* ia = ma->find_interface(l.a.iface);
        const Interface* ib = mb_->find_interface(l.b.iface);
        adj_[ma->id].push_back(Hop{mb_->id, ia->name, ib->ip, {}});
        adj_[mb_->id].push_back(Hop{ma->id, ib->name, ia->ip, {}});
        continue;
      }
      // Middlebox-to-switch attach; stubs stay out of the routed graph.
      const Middlebox* m = ma ? ma : mb_;
      const Endpoint mb_end = ma ? l.a : l.b;
      const Endpoint sw_end = ma ? l.b : l.a;
      const Interface* iface = m->find_interface(mb_end.iface);
      if (iface->edge_facing) continue;
      const SdnIsland* isl = island_of_switch(sw_end.node);
      Ipv4 gw{};
      for (Ipv4 g : isl->gateway_ips)
        if (iface->subnet().contains(g)) gw = g;
      adj_[m->id].push_back(Hop{isl->id, iface->name, gw, {}});
      adj_[isl->id].push_back(
          Hop{m->id, iface->name, iface->ip, PortRef{sw_end.node, sw_end.iface}});
      attach_[{m->id, iface->name}] =
          std::make_pair(isl->id, PortRef{sw_end.node, sw_end.iface});
    }
    for (auto& [node, hops] : adj_)
      std::sort(hops.begin(), hops.end(),
                [](const Hop& a, const Hop& b) { return a.neighbor < b.neighbor; });
  }

  const SdnIsland* island_of_switch(const std::string& sw) const {
    for (const auto& isl : net_.islands)
      if (isl.has_switch(sw)) return &isl;
    throw std::logic_error("builder: unknown switch " + sw);
  }

  /// First hop from `from` toward every reachable node (BFS, deterministic).
  /// Non-transit nodes are reachable but never expanded, so no path routes
  /// through them.
  std::map<std::string, const Hop*> first_hops(const std::string& from) {
    std::map<std::string, const Hop*> out;
    std::deque<std::string> queue{from};
    std::set<std::string> seen{from};
    while (!queue.empty()) {
      const std::string node = queue.front();
      queue.pop_front();
      if (node != from && non_transit_.count(node)) continue;
      for (const Hop& h : adj_[node]) {
        if (!seen.insert(h.neighbor).second) continue;
        out[h.neighbor] = node == from ? &h : out[node];
        queue.push_back(h.neighbor);
      }
    }
    return out;
  }

  void emit_device_routes(Middlebox& m) {
    auto hops = first_hops(m.id);
    // Group reachable destination addresses by their interface subnet; a
    // group collapses to one subnet route when every address agrees on the
    // first hop. Island-attach subnets live on the island's fabric, so the
    // path anchors at the island, not at the owning device.
    struct Dest {
      Ipv4 ip;
      const Hop* hop;
    };
    std::map<Subnet, std::vector<Dest>> groups;
    for (const auto& other : net_.middleboxes) {
      if (other.id == m.id) continue;
      for (const auto& iface : other.interfaces) {
        if (iface.edge_facing) continue;
        auto attach = attach_.find({other.id, iface.name});
        const std::string& anchor =
            attach == attach_.end() ? other.id : attach->second.first;
        auto hop_it = hops.find(anchor);
        if (hop_it == hops.end()) continue;
        bool direct = false;
        for (const auto& mine : m.interfaces)
          direct = direct || mine.subnet().contains(iface.ip);
        if (direct) continue;  // implicit connected route covers it
        groups[Subnet{iface.subnet().network(), iface.prefix_len}].push_back(
            Dest{iface.ip, hop_it->second});
      }
    }
    for (const auto& [subnet, dests] : groups) {
      bool uniform = true;
      for (const auto& d : dests) uniform = uniform && d.hop == dests[0].hop;
      if (uniform) {
        m.routes.push_back(RouteEntry{subnet, dests[0].hop->out_iface,
                                      dests[0].hop->next_hop});
      } else {
        for (const auto& d : dests)
          m.routes.push_back(
              RouteEntry{Subnet{d.ip, 32}, d.hop->out_iface, d.hop->next_hop});
      }
    }
  }

  void emit_island_routes(SdnIsland& isl) {
    if (adj_.find(isl.id) == adj_.end()) return;
    auto hops = first_hops(isl.id);
    struct Dest {
      Ipv4 ip;
      PortRef port;
    };
    std::map<Subnet, std::vector<Dest>> groups;
    for (const auto& other : net_.middleboxes) {
      for (const auto& iface : other.interfaces) {
        if (iface.edge_facing) continue;
        auto attach = attach_.find({other.id, iface.name});
        std::optional<PortRef> port;
        if (attach != attach_.end() && attach->second.first == isl.id) {
          port = attach->second.second;  // the subnet is on this fabric
        } else {
          const std::string& anchor =
              attach == attach_.end() ? other.id : attach->second.first;
          auto hop_it = hops.find(anchor);
          if (hop_it != hops.end()) port = hop_it->second->port;
        }
        if (!port) continue;
        groups[Subnet{iface.subnet().network(), iface.prefix_len}].push_back(
            Dest{iface.ip, *port});
      }
    }
    for (const auto& [subnet, dests] : groups) {
      bool uniform = true;
      for (const auto& d : dests)
        uniform = uniform && !(d.port < dests[0].port) && !(dests[0].port < d.port);
      if (uniform) {
        isl.port_routes.emplace_back(subnet, dests[0].port);
      } else {
        for (const auto& d : dests)
          isl.port_routes.emplace_back(Subnet{d.ip, 32}, d.port);
      }
    }
  }

  NetworkInstance net_;
  std::set<std::string> non_transit_;
  std::map<std::pair<std::string, std::string>, std::pair<std::string, PortRef>>
      attach_;
  std::uint32_t link_count_ = 0;
  std::uint32_t stub_count_ = 0;
  std::map<std::string, int> iface_count_;
  std::map<std::string, int> port_count_;
  std::map<std::string, std::vector<Hop>> adj_;
};

std::string mb_name(int i, int width) {
  std::string num = std::to_string(i + 1);
  while (static_cast<int>(num.size()) < width) num.insert(num.begin(), '0');
  return "MB" + num;
}

MbKind edge_kind(int i) {
  switch (i % 4) {
    case 0: return MbKind::proxy;
    case 1: return MbKind::vpn;
    case 2: return MbKind::firewall;
    default: return MbKind::generic;
  }
}

NetworkInstance gen_full_mesh(int n) {
  Builder b("full_mesh");
  const int width = static_cast<int>(std::to_string(n).size());
  for (int i = 0; i < n; ++i) b.add_mb(mb_name(i, width), edge_kind(i));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      b.link_mbs(mb_name(i, width), mb_name(j, width));
  return b.finish();
}

NetworkInstance gen_tree(int n, int fanout) {
  Builder b("tree");
  const int width = static_cast<int>(std::to_string(n).size());
  for (int i = 0; i < n; ++i)
    b.add_mb(mb_name(i, width), i == 0 ? MbKind::firewall : edge_kind(i));
  for (int i = 1; i < n; ++i)
    b.link_mbs(mb_name((i - 1) / fanout, width), mb_name(i, width));
  return b.finish();
}

NetworkInstance gen_inline_offline(int n) {
  Builder b("inline_offline");
  const int width = static_cast<int>(std::to_string(n).size());
  const int chain = (n + 1) / 2;
  for (int i = 0; i < chain; ++i)
    b.add_mb(mb_name(i, width), i % 2 == 0 ? MbKind::firewall : MbKind::ids);
  for (int i = 0; i < n - chain; ++i)
    b.add_mb(mb_name(chain + i, width), edge_kind(i));
  for (int i = 0; i + 1 < chain; ++i)
    b.link_mbs(mb_name(i, width), mb_name(i + 1, width));

  const int island_count = (chain + 1) / 2;  // one island at every other hop
  for (int j = 0; j < island_count; ++j) {
    b.add_island("ISL" + std::to_string(j), 1);
    b.attach(mb_name(2 * j, width), "ISL" + std::to_string(j));
  }
  std::set<std::string> offline_ids;
  for (int i = 0; i < n - chain; ++i) offline_ids.insert(mb_name(chain + i, width));
  b.set_non_transit(offline_ids);
  for (int i = 0; i < n - chain; ++i) {
    const std::string id = mb_name(chain + i, width);
    const std::string isl = "ISL" + std::to_string(i % island_count);
    b.attach(id, isl);
    b.attach_stub(id, isl);
  }
  NetworkInstance net = b.finish();
  net.policies.push_back(PolicyRule{*Subnet::parse("192.168.0.0/16"),
                                    *Subnet::parse("203.0.113.0/24"), "allow"});
  net.policies.push_back(PolicyRule{*Subnet::parse("192.168.0.0/16"),
                                    *Subnet::parse("198.51.100.0/24"), "allow"});
  return net;
}

NetworkInstance gen_cisco(int n) {
  // Three-tier enterprise profile: 2 core middleboxes behind a core island,
  // distribution pairs (one load balancer each) serving distribution islands,
  // edge middleboxes hanging off the distribution islands with access stubs
  // on shared edge switches.
  Builder b("cisco");
  const int width = static_cast<int>(std::to_string(n).size());
  const int core = n >= 8 ? 2 : 1;
  int dist = std::max(2, (n + 4) / 5);
  if (core + dist + 1 > n) dist = std::max(1, n - core - 1);
  const int edge = n - core - dist;

  std::vector<std::string> core_ids, dist_ids, edge_ids;
  for (int i = 0; i < core; ++i)
    core_ids.push_back(mb_name(i, width));
  for (int i = 0; i < dist; ++i)
    dist_ids.push_back(mb_name(core + i, width));
  for (int i = 0; i < edge; ++i)
    edge_ids.push_back(mb_name(core + dist + i, width));

  for (const auto& id : core_ids) b.add_mb(id, MbKind::firewall);
  for (int i = 0; i < dist; ++i)
    b.add_mb(dist_ids[i], i % 2 == 0 ? MbKind::load_balancer : MbKind::ids,
             /*dynamic=*/i % 2 == 0);
  for (int i = 0; i < edge; ++i) b.add_mb(edge_ids[i], edge_kind(i));

  b.add_island("CORE", 2);
  for (const auto& id : core_ids) b.attach(id, "CORE", 0);

  const int dist_islands = (dist + 1) / 2;
  for (int j = 0; j < dist_islands; ++j) b.add_island("DIST" + std::to_string(j), 1);
  for (int i = 0; i < dist; ++i) {
    b.link_mbs(dist_ids[i], core_ids[i % core]);
    b.attach(dist_ids[i], "DIST" + std::to_string(i / 2));
  }
  // Cross links inside each distribution pair give the load balancer an
  // alternate egress toward its island.
  for (int i = 0; i + 1 < dist; i += 2) b.link_mbs(dist_ids[i], dist_ids[i + 1]);

  const int acc_islands = std::max(1, (edge + 49) / 50);
  for (int j = 0; j < acc_islands; ++j) b.add_island("ACC" + std::to_string(j), 1);

  b.set_non_transit(std::set<std::string>(edge_ids.begin(), edge_ids.end()));

  const int multihomed = dist_islands >= 2 ? (edge * 3) / 10 : 0;
  for (int i = 0; i < edge; ++i) {
    const int isl = i % dist_islands;
    b.attach(edge_ids[i], "DIST" + std::to_string(isl));
    if (i < multihomed)
      b.attach(edge_ids[i], "DIST" + std::to_string((isl + 1) % dist_islands));
    b.attach_stub(edge_ids[i], "ACC" + std::to_string(i % acc_islands));
  }

  NetworkInstance net = [&] {
    // ECMP alternates must be added before route emission sees them; finish()
    // computes routes, so splice alternates in afterwards from the builder.
    NetworkInstance finished = b.finish();
    return finished;
  }();

  // Give each load balancer an equal-prefix alternate for its island-side
  // routes via the pair cross link.
  for (int i = 0; i + 1 < dist; i += 2) {
    Middlebox* lb = nullptr;
    const Middlebox* peer = nullptr;
    for (auto& m : net.middleboxes) {
      if (m.id == dist_ids[i]) lb = &m;
      if (m.id == dist_ids[i + 1]) peer = &m;
    }
    // The cross link is the one whose subnet the peer shares.
    const Interface* cross = nullptr;
    Ipv4 peer_ip{};
    for (const auto& mine : lb->interfaces)
      for (const auto& theirs : peer->interfaces)
        if (mine.subnet().same_network(theirs.subnet())) {
          cross = &mine;
          peer_ip = theirs.ip;
        }
    // Island-side interface: attached to a DIST island gateway.
    std::string island_iface;
    for (const auto& r : lb->routes) {
      if (!r.next_hop) continue;
      const Interface* out = lb->find_interface(r.out_interface);
      bool is_island_iface = false;
      for (const auto& isl : net.islands)
        is_island_iface =
            is_island_iface || (isl.id.rfind("DIST", 0) == 0 &&
                                isl.is_gateway(*r.next_hop));
      if (is_island_iface && out != cross) island_iface = r.out_interface;
    }
    if (!cross || island_iface.empty()) continue;
    std::vector<RouteEntry> extra;
    for (const auto& r : lb->routes)
      if (r.out_interface == island_iface)
        extra.push_back(RouteEntry{r.dest, cross->name, peer_ip});
    lb->routes.insert(lb->routes.end(), extra.begin(), extra.end());
  }
  net.validate();

  net.policies.push_back(PolicyRule{*Subnet::parse("192.168.0.0/16"),
                                    *Subnet::parse("203.0.113.0/24"), "allow"});
  net.policies.push_back(PolicyRule{*Subnet::parse("192.168.0.0/16"),
                                    *Subnet::parse("198.51.100.0/24"), "allow"});
  return net;
}

}  // namespace

NetworkInstance generate_topology(TopologyFamily family, int n,
                                  std::uint64_t seed,
                                  const GeneratorOptions& opts) {
  if (n < 2) throw ParseError("topology needs at least 2 middleboxes");
  (void)seed;  // instances are structurally deterministic in (family, n)
  switch (family) {
    case TopologyFamily::FullMesh: return gen_full_mesh(n);
    case TopologyFamily::Tree: return gen_tree(n, std::max(1, opts.tree_fanout));
    case TopologyFamily::InlineOffline: return gen_inline_offline(n);
    case TopologyFamily::CiscoEnterprise: return gen_cisco(n);
  }
  throw ParseError("unknown topology family");
}

}  // namespace topoman
