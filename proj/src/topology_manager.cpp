/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "topoman/topology_manager.hpp"

#include <algorithm>
#include <tuple>

namespace topoman {

std::set<std::string> compute_edge_set(const std::vector<Middlebox>& devices,
                                       const std::vector<PolicyRule>* policies,
                                       EdgeHeuristicKind heuristic) {
  std::set<std::string> out;
  if (heuristic == EdgeHeuristicKind::InterfaceBased) {
    for (const auto& mb : devices) {
      bool edge = true;
      for (const auto& iface : mb.interfaces) {
        for (const auto& other : devices) {
          if (other.id == mb.id) continue;
          for (const auto& theirs : other.interfaces)
            if (iface.subnet().same_network(theirs.subnet())) edge = false;
        }
      }
      if (edge) out.insert(mb.id);
    }
    return out;
  }

  // Policy based: collect endpoint networks and keep the ones that are only
  // ever a source or only ever a destination across the rule set.
  if (!policies) return out;
  std::vector<Subnet> networks;
  auto note = [&networks](const Subnet& s) {
    for (const auto& n : networks)
      if (n.same_network(s)) return;
    networks.push_back(s);
  };
  for (const auto& rule : *policies) {
    note(rule.src_network);
    note(rule.dst_network);
  }
  for (const auto& net : networks) {
    bool as_src = false, as_dst = false;
    for (const auto& rule : *policies) {
      as_src = as_src || rule.src_network.same_network(net);
      as_dst = as_dst || rule.dst_network.same_network(net);
    }
    if (as_src && as_dst) continue;
    for (const auto& mb : devices)
      for (const auto& iface : mb.interfaces)
        if (net.contains_subnet(iface.subnet())) out.insert(mb.id);
  }
  return out;
}

TopologyManager::TopologyManager(ControllerKeyPair keys, Rng token_rng,
                                 std::uint64_t token_window,
                                 std::uint64_t heartbeat_interval)
    : keys_(keys),
      token_rng_(token_rng),
      tokens_(token_window),
      heartbeat_interval_(heartbeat_interval) {}

void TopologyManager::register_capabilities(const DeviceCapabilities& caps) {
  const Middlebox& mb = caps.device;
  if (device_index_.count(mb.id))
    throw DuplicateDeviceError("device already registered: " + mb.id);
  device_index_[mb.id] = device_order_.size();
  device_order_.push_back(mb.id);
  discovered_.add_middlebox(mb);
  auto& list = undiscovered_by_dev_[mb.id];
  for (const auto& iface : mb.interfaces) {
    list.push_back(IfaceRef{mb.id, iface.name, iface.ip});
    undiscovered_.emplace(mb.id, iface.name);
  }
}

void TopologyManager::register_island(const SdnIsland& island) {
  discovered_.add_island(island);
}

void TopologyManager::set_edge_facing(
    std::set<std::pair<std::string, std::string>> ifaces) {
  edge_facing_ = std::move(ifaces);
}

void TopologyManager::compute_edges(EdgeHeuristicKind heuristic,
                                    const std::vector<PolicyRule>* policies) {
  std::vector<Middlebox> devices;
  devices.reserve(device_order_.size());
  for (const auto& id : device_order_)
    devices.push_back(discovered_.middleboxes().at(id));
  edge_set_ = compute_edge_set(devices, policies, heuristic);
}

bool TopologyManager::is_undiscovered(const std::string& dev,
                                      const std::string& iface) const {
  return undiscovered_.count({dev, iface}) > 0;
}

void TopologyManager::mark_discovered(const std::string& dev,
                                      const std::string& iface) {
  if (!undiscovered_.erase({dev, iface})) return;
  auto it = undiscovered_by_dev_.find(dev);
  if (it == undiscovered_by_dev_.end()) return;
  auto& list = it->second;
  list.erase(std::remove_if(list.begin(), list.end(),
                            [&](const IfaceRef& r) { return r.iface == iface; }),
             list.end());
  if (list.empty()) undiscovered_by_dev_.erase(it);
}

void TopologyManager::compute_reachability() {
  reachability_ready_ = true;
  unreachable_.clear();
  // Per device: the set of (masked network, prefix) its routes and connected
  // subnets can match.
  struct Index {
    std::map<int, std::set<std::uint32_t>> nets;
    bool matches(Ipv4 ip) const {
      for (const auto& [len, set] : nets) {
        const std::uint32_t mask =
            len <= 0 ? 0 : (len >= 32 ? 0xffffffffu : ~((1u << (32 - len)) - 1));
        if (set.count(ip.value & mask)) return true;
      }
      return false;
    }
  };
  std::map<std::string, Index> indices;
  for (const auto& id : device_order_) {
    const Middlebox& mb = discovered_.middleboxes().at(id);
    Index& idx = indices[id];
    for (const auto& iface : mb.interfaces)
      idx.nets[iface.prefix_len].insert(iface.subnet().network().value);
    for (const auto& r : mb.routes)
      idx.nets[r.dest.prefix_len].insert(r.dest.network().value);
  }
  for (const auto& id : device_order_) {
    const Middlebox& mb = discovered_.middleboxes().at(id);
    for (const auto& iface : mb.interfaces) {
      bool reachable = false;
      for (const auto& other : device_order_) {
        if (other == id) continue;
        if (indices.at(other).matches(iface.ip)) {
          reachable = true;
          break;
        }
      }
      if (!reachable) unreachable_.emplace(id, iface.name);
    }
  }
}

bool TopologyManager::selectable(const std::string& dev,
                                 const IfaceRef& iface) const {
  return unreachable_.count({dev, iface.iface}) == 0;
}

std::optional<std::pair<std::string, std::string>>
TopologyManager::eligible_iface_pair(const std::string& src_dev,
                                     const std::string& dst_dev) const {
  auto src = undiscovered_by_dev_.find(src_dev);
  auto dst = undiscovered_by_dev_.find(dst_dev);
  if (src == undiscovered_by_dev_.end() || dst == undiscovered_by_dev_.end())
    return std::nullopt;
  for (const auto& si : src->second) {
    if (!selectable(src_dev, si)) continue;
    for (const auto& di : dst->second) {
      if (!selectable(dst_dev, di)) continue;
      auto it = attempts_.find({src_dev + ":" + si.iface,
                                dst_dev + ":" + di.iface});
      if (it == attempts_.end() || it->second < 2)
        return std::make_pair(si.iface, di.iface);
    }
  }
  return std::nullopt;
}

SelectedPair TopologyManager::commit(const std::string& sd,
                                     const std::string& si,
                                     const std::string& dd,
                                     const std::string& di) {
  attempts_[{sd + ":" + si, dd + ":" + di}] += 1;
  device_pair_sel_[{std::min(sd, dd), std::max(sd, dd)}] += 1;
  device_sel_[sd] += 1;
  device_sel_[dd] += 1;
  ++selections_;
  SelectedPair out;
  out.src_device = sd;
  out.src_iface = si;
  out.src_ip = discovered_.middleboxes().at(sd).find_interface(si)->ip;
  out.dst_device = dd;
  out.dst_iface = di;
  out.dst_ip = discovered_.middleboxes().at(dd).find_interface(di)->ip;
  return out;
}

std::optional<SelectedPair> TopologyManager::pick_preferred(bool edge_only) {
  using Key = std::tuple<int, int, std::size_t, long, std::size_t, std::size_t>;
  // Pairs found fully attempt-capped stay capped (attempts never reset and
  // undiscovered interfaces only shrink), so cache them per call.
  std::set<std::pair<std::string, std::string>> capped;
  for (;;) {
    bool have_best = false;
    Key best_key{};
    std::pair<std::string, std::string> best_pair;
    for (const auto& [sd, sifaces] : undiscovered_by_dev_) {
      if (edge_only && !edge_set_.count(sd)) continue;
      const std::size_t si_idx = device_index_.at(sd);
      for (const auto& [dd, difaces] : undiscovered_by_dev_) {
        if (dd == sd) continue;
        if (edge_only && !edge_set_.count(dd)) continue;
        if (capped.count({sd, dd})) continue;
        const std::size_t di_idx = device_index_.at(dd);
        auto pc_it = device_pair_sel_.find({std::min(sd, dd), std::max(sd, dd)});
        const int pair_cnt = pc_it == device_pair_sel_.end() ? 0 : pc_it->second;
        auto s_it = device_sel_.find(sd);
        auto d_it = device_sel_.find(dd);
        const int sel_sum = (s_it == device_sel_.end() ? 0 : s_it->second) +
                            (d_it == device_sel_.end() ? 0 : d_it->second);
        const std::size_t iface_sum =
            discovered_.middleboxes().at(sd).interfaces.size() +
            discovered_.middleboxes().at(dd).interfaces.size();
        const long dist = si_idx > di_idx ? static_cast<long>(si_idx - di_idx)
                                          : static_cast<long>(di_idx - si_idx);
        Key key{pair_cnt, sel_sum, iface_sum, -dist, si_idx, di_idx};
        if (!have_best || key < best_key) {
          have_best = true;
          best_key = key;
          best_pair = {sd, dd};
        }
      }
    }
    if (!have_best) return std::nullopt;
    auto ifaces = eligible_iface_pair(best_pair.first, best_pair.second);
    if (!ifaces) {
      capped.insert(best_pair);
      continue;
    }
    return commit(best_pair.first, ifaces->first, best_pair.second,
                  ifaces->second);
  }
}

std::optional<SelectedPair> TopologyManager::pick_random(Rng& rng) {
  // Uniform draw among the least-selected eligible device pairs. Re-drawing
  // pairs that were already probed wastes probes without covering new links,
  // so the draw is fair across device pairs first and random within that
  // class; interface combinations still honour the 2-attempt cap.
  std::vector<std::pair<std::string, std::string>> class_members;
  int min_count = -1;
  for (const auto& [sd, sifaces] : undiscovered_by_dev_) {
    for (const auto& [dd, difaces] : undiscovered_by_dev_) {
      if (sd == dd) continue;
      if (!eligible_iface_pair(sd, dd)) continue;
      auto it = device_pair_sel_.find({std::min(sd, dd), std::max(sd, dd)});
      const int count = it == device_pair_sel_.end() ? 0 : it->second;
      if (min_count < 0 || count < min_count) {
        min_count = count;
        class_members.clear();
      }
      if (count == min_count) class_members.emplace_back(sd, dd);
    }
  }
  if (class_members.empty()) return std::nullopt;
  const auto& [sd, dd] = class_members[rng.below(class_members.size())];

  std::vector<std::pair<std::string, std::string>> combos;
  for (const auto& si : undiscovered_by_dev_.at(sd)) {
    if (!selectable(sd, si)) continue;
    for (const auto& di : undiscovered_by_dev_.at(dd)) {
      if (!selectable(dd, di)) continue;
      auto it = attempts_.find({sd + ":" + si.iface, dd + ":" + di.iface});
      if (it == attempts_.end() || it->second < 2)
        combos.emplace_back(si.iface, di.iface);
    }
  }
  const auto& [si, di] = combos[rng.below(combos.size())];
  return commit(sd, si, dd, di);
}

std::optional<SelectedPair> TopologyManager::select_probe_pair(
    SelectionMode mode, Rng& rng) {
  if (!reachability_ready_) compute_reachability();
  if (mode == SelectionMode::RandomSelect) return pick_random(rng);
  if (auto pair = pick_preferred(/*edge_only=*/true)) return pair;
  return pick_preferred(/*edge_only=*/false);
}

ProbeInit TopologyManager::build_probe_init(const SelectedPair& pair,
                                            std::uint64_t now) {
  ProbeInit cmd;
  cmd.dest_device = pair.dst_device;
  cmd.src_interface = pair.src_iface;
  cmd.payload_append = flags_.payload_append;
  cmd.header_sec = flags_.header_sec;
  cmd.payload_sec = flags_.payload_sec;
  cmd.ttl_max = ttl_max_;
  // Undiscovered interfaces come first: when several destination addresses
  // collapse onto one egress, the probe then chases what is still unknown.
  const Middlebox& dst = discovered_.middleboxes().at(pair.dst_device);
  std::vector<const Interface*> orderd;
  for (const auto& iface : dst.interfaces)
    if (is_undiscovered(dst.id, iface.name)) orderd.push_back(&iface);
  for (const auto& iface : dst.interfaces)
    if (!is_undiscovered(dst.id, iface.name)) orderd.push_back(&iface);
  for (const Interface* iface : orderd) {
    ProbeInitDest d;
    d.iface = iface->name;
    d.ip = iface->ip;
    if (flags_.header_sec)
      d.token = tokens_.issue(PairAddrs{pair.src_ip, iface->ip}, now, token_rng_);
    cmd.dest_interfaces.push_back(d);
  }
  return cmd;
}

void TopologyManager::begin_probe(const ProbePairId& id) {
  traces_.erase(pair_id_to_string(id));
}

PayloadEntry TopologyManager::open_entry(const SealedPayload& seg,
                                         const ProbePairId& pair) const {
  AuthenticatedHeaderFields hdr;
  hdr.probe_pair_id = pair;
  hdr.flag_payload_sec = true;
  hdr.flag_payload_append = flags_.payload_append;
  std::string line;
  try {
    line = to_string(open_payload(seg, hdr, keys_));
  } catch (const IntegrityError& e) {
    throw CorruptReportError(std::string("integrity failure: ") + e.what());
  } catch (const DecryptError& e) {
    throw CorruptReportError(std::string("decrypt failure: ") + e.what());
  }
  if (!line.empty() && line.back() == '\n') line.pop_back();
  try {
    return decode_entry_line(line);
  } catch (const ProtocolError& e) {
    throw CorruptReportError(std::string("bad sealed entry: ") + e.what());
  }
}

bool TopologyManager::insert_discovered_link(const Link& link,
                                             std::vector<Link>& out) {
  bool fresh;
  try {
    fresh = discovered_.insert_link(link);
  } catch (const UnknownEndpointError& e) {
    throw UnknownDeviceError(e.what());
  }
  auto mark_endpoint = [this](const Endpoint& e) {
    if (discovered_.middleboxes().count(e.node)) mark_discovered(e.node, e.iface);
  };
  mark_endpoint(link.a);
  mark_endpoint(link.b);
  if (fresh) out.push_back(link.normalized());
  return fresh;
}

std::vector<Link> TopologyManager::stitch(const std::string& pair_key) {
  std::vector<Link> inserted;
  auto trace_it = traces_.find(pair_key);
  if (trace_it == traces_.end()) return inserted;
  ProbeTrace& trace = trace_it->second;

  for (const auto& [ttl, entry] : trace.entries) {
    auto next = trace.entries.find(ttl + 1);
    if (next == trace.entries.end()) continue;
    std::string out_iface = entry.out_interface;
    if (out_iface == kPending) {
      auto corr = trace.corrections.find(ttl);
      if (corr == trace.corrections.end()) continue;  // wait for the update
      out_iface = corr->second;
    }
    if (out_iface == kNone) continue;  // terminal entries head no link
    const PayloadEntry& next_entry = next->second;
    if (next_entry.in_interface == kNone) continue;

    auto obs = trace.island_obs.find(ttl + 1);
    if (obs != trace.island_obs.end()) {
      insert_discovered_link(
          Link{{entry.device, out_iface},
               {obs->second.in_port.sw, obs->second.in_port.port}},
          inserted);
      insert_discovered_link(
          Link{{obs->second.out_port.sw, obs->second.out_port.port},
               {next_entry.device, next_entry.in_interface}},
          inserted);
    } else {
      insert_discovered_link(Link{{entry.device, out_iface},
                                  {next_entry.device, next_entry.in_interface}},
                             inserted);
    }
  }
  return inserted;
}

std::vector<Link> TopologyManager::process_probe_update(const ProbeUpdate& report) {
  ++up_calls_;
  std::vector<PayloadEntry> entries = report.entries;
  if (report.sealed) {
    entries.clear();
    for (const auto& seg : report.segments)
      entries.push_back(open_entry(seg, report.pair));
  }
  if (entries.empty()) throw CorruptReportError("probe update with no entries");
  for (const auto& e : entries)
    if (!discovered_.middleboxes().count(e.device))
      throw UnknownDeviceError("probe update names unknown device " + e.device);

  const std::string key = pair_id_to_string(report.pair);
  ProbeTrace& trace = traces_[key];
  if (report.terminal && entries.size() > 1) {
    // Full trace: entry k sits at TTL k.
    if (report.ttl + 1 != entries.size())
      throw CorruptReportError("terminal trace length disagrees with TTL");
    for (std::size_t k = 0; k < entries.size(); ++k)
      trace.entries[static_cast<std::uint32_t>(k)] = entries[k];
  } else {
    trace.entries[report.ttl] = entries.front();
    if (report.terminal && entries.size() != 1)
      throw CorruptReportError("unexpected multi-entry hop report");
  }
  return stitch(key);
}

std::vector<Link> TopologyManager::process_out_interface_update(
    const UpdateOutInterface& msg) {
  const std::string key = pair_id_to_string(msg.pair);
  traces_[key].corrections[msg.ttl] = msg.actual_out;
  return stitch(key);
}

std::vector<Link> TopologyManager::process_island_observation(
    const IslandObservation& obs) {
  traces_[obs.pair_key].island_obs[obs.ttl] = obs;
  return stitch(obs.pair_key);
}

std::optional<Link> TopologyManager::handle_late_discovery(
    const TrafficObservation& obs) {
  std::vector<Link> inserted;
  insert_discovered_link(Link{{obs.mb, obs.iface}, {obs.sw, obs.port}}, inserted);
  if (inserted.empty()) return std::nullopt;
  return inserted.front();
}

TerminationResult TopologyManager::check_termination(SelectionMode mode) {
  if (!reachability_ready_) compute_reachability();
  TerminationResult out;
  out.residual.assign(undiscovered_.begin(), undiscovered_.end());
  if (undiscovered_.empty()) {
    out.done = true;
    return out;
  }
  bool all_edge_facing = true;
  for (const auto& entry : undiscovered_)
    all_edge_facing = all_edge_facing && edge_facing_.count(entry) > 0;
  if (all_edge_facing) {
    out.done = true;
    return out;
  }
  // No eligible pair left means the selector is exhausted.
  (void)mode;
  for (const auto& [sd, sifaces] : undiscovered_by_dev_)
    for (const auto& [dd, difaces] : undiscovered_by_dev_) {
      if (sd == dd) continue;
      if (eligible_iface_pair(sd, dd)) return out;  // Continue
    }
  out.done = true;
  return out;
}

VerificationReport TopologyManager::verify_offline(
    const TopologyGraph& reference) const {
  VerificationReport out;
  out.diff = diff_graphs(discovered_, reference);
  out.residual.assign(undiscovered_.begin(), undiscovered_.end());
  std::set<std::pair<std::string, std::string>> late;
  for (const auto& entry : undiscovered_)
    if (edge_facing_.count(entry)) late.insert(entry);
  bool all_late = true;
  for (const auto& link : out.diff.missing_links) {
    const bool pending =
        late.count({link.a.node, link.a.iface}) > 0 ||
        late.count({link.b.node, link.b.iface}) > 0;
    if (pending)
      out.late_discovery_pending.push_back(link);
    else
      all_late = false;
  }
  out.clean = out.diff.extra_links.empty() && out.diff.missing_nodes.empty() &&
              all_late;
  return out;
}

ResolveProbeIdResponse TopologyManager::resolve(const ResolveProbeIdRequest& req,
                                                std::uint64_t now) const {
  return ResolveProbeIdResponse{tokens_.resolve(req.token, now)};
}

void TopologyManager::record_heartbeat(const Heartbeat& hb) {
  last_heartbeat_[hb.device] = hb.time;
}

bool TopologyManager::device_up(const std::string& id, std::uint64_t now) const {
  auto it = last_heartbeat_.find(id);
  if (it == last_heartbeat_.end()) return false;
  return now < it->second + 3 * heartbeat_interval_;
}

int TopologyManager::max_attempt_count() const {
  int out = 0;
  for (const auto& [key, count] : attempts_) out = std::max(out, count);
  return out;
}

}  // namespace topoman
