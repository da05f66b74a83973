/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "topoman/mb_agent.hpp"

#include <algorithm>

namespace topoman {

namespace {
std::uint32_t mask_for(int prefix_len) {
  if (prefix_len <= 0) return 0;
  if (prefix_len >= 32) return 0xffffffffu;
  return ~((1u << (32 - prefix_len)) - 1);
}
}  // namespace

MbAgent::MbAgent(Middlebox device, PublicKey controller_pub,
                 std::uint32_t ttl_max)
    : device_(std::move(device)),
      controller_pub_(controller_pub),
      ttl_max_(ttl_max) {
  // Interfaces first, then explicit routes, mirroring lookup_route's
  // declaration-order tie break.
  for (const auto& iface : device_.interfaces)
    route_storage_.push_back(RouteLookup{iface.name, Ipv4{0}, iface.prefix_len});
  for (const auto& r : device_.routes)
    route_storage_.push_back(RouteLookup{
        r.out_interface, r.next_hop.value_or(Ipv4{0}), r.dest.prefix_len});
  std::size_t idx = 0;
  for (const auto& iface : device_.interfaces) {
    index_[iface.prefix_len][iface.subnet().network().value].push_back(idx);
    ++idx;
  }
  for (const auto& r : device_.routes) {
    index_[r.dest.prefix_len][r.dest.network().value].push_back(idx);
    ++idx;
  }
  // Interface entries and DIRECT routes forward to the destination itself;
  // mark them with next_hop 0 and patch at lookup time.
}

void MbAgent::install_path_rule(std::uint32_t path_id,
                                const std::string& out_iface) {
  path_rules_[path_id] = out_iface;
}

void MbAgent::remove_path_rule(std::uint32_t path_id) {
  path_rules_.erase(path_id);
}

std::vector<const RouteLookup*> MbAgent::lookup(Ipv4 dest) const {
  for (const auto& [len, buckets] : index_) {
    auto it = buckets.find(dest.value & mask_for(len));
    if (it == buckets.end()) continue;
    std::vector<const RouteLookup*> out;
    out.reserve(it->second.size());
    for (std::size_t i : it->second) out.push_back(&route_storage_[i]);
    return out;
  }
  return {};
}

std::optional<EgressDecision> MbAgent::compute_output_interface(
    Ipv4 dest, EgressMode mode, Rng& lb_rng) const {
  auto candidates = lookup(dest);
  if (candidates.empty()) return std::nullopt;
  auto next_hop_of = [dest](const RouteLookup* r) {
    return r->next_hop.value == 0 ? dest : r->next_hop;
  };
  const RouteLookup* predicted = candidates.front();

  if (mode == EgressMode::StaticSteer || !device_.dynamic_egress) {
    return EgressDecision{predicted->out_interface, predicted->out_interface,
                          next_hop_of(predicted), false};
  }
  // Dynamic egress: draw uniformly over the distinct candidate interfaces.
  std::vector<const RouteLookup*> distinct;
  for (const RouteLookup* c : candidates) {
    bool seen = false;
    for (const RouteLookup* d : distinct)
      seen = seen || d->out_interface == c->out_interface;
    if (!seen) distinct.push_back(c);
  }
  const RouteLookup* actual =
      distinct[lb_rng.below(static_cast<std::uint64_t>(distinct.size()))];
  const bool corrected = actual->out_interface != predicted->out_interface;
  return EgressDecision{corrected ? kPending : predicted->out_interface,
                        actual->out_interface, next_hop_of(actual), corrected};
}

SealedPayload MbAgent::seal_entry(const PayloadEntry& entry,
                                  const ProbeHeader& header,
                                  Rng& crypto_rng) const {
  const std::string line = encode_entry(entry);
  return seal_payload(to_bytes(line), AuthenticatedHeaderFields::from_header(header),
                      controller_pub_, crypto_rng);
}

std::optional<Ipv4> MbAgent::pair_destination(const ProbePairId& id) const {
  if (const auto* clear = std::get_if<PairAddrs>(&id)) return clear->dst;
  if (!resolver_) return std::nullopt;
  auto resp = resolver_(ResolveProbeIdRequest{std::get<PairToken>(id).value});
  if (!resp.pair) return std::nullopt;
  return resp.pair->dst;
}

std::vector<LaunchedProbe> MbAgent::handle_probe_init(const ProbeInit& cmd,
                                                      Rng& lb_rng,
                                                      Rng& crypto_rng) {
  const Interface* src_iface = device_.find_interface(cmd.src_interface);
  const Ipv4 src_ip = src_iface ? src_iface->ip
                                : (device_.interfaces.empty()
                                       ? Ipv4{}
                                       : device_.interfaces.front().ip);

  // One probe per distinct predicted egress; the first destination interface
  // reached through that egress is the representative.
  std::vector<LaunchedProbe> out;
  std::vector<std::string> egress_seen;
  bool any_route = false;
  for (const auto& dest : cmd.dest_interfaces) {
    auto candidates = lookup(dest.ip);
    if (candidates.empty()) continue;
    any_route = true;
    const std::string& predicted = candidates.front()->out_interface;
    if (std::find(egress_seen.begin(), egress_seen.end(), predicted) !=
        egress_seen.end())
      continue;
    egress_seen.push_back(predicted);

    auto decision = compute_output_interface(dest.ip, EgressMode::RoutePredict,
                                             lb_rng);
    ProbeMessage msg;
    msg.header.probe_ttl = 0;
    msg.header.path_id = 0;
    msg.header.flag_payload_append = cmd.payload_append;
    msg.header.flag_payload_sec = cmd.payload_sec;
    if (cmd.header_sec) {
      if (!dest.token)
        throw BadValueError("PROBE-INIT with HDRSEC but no token for " +
                            dest.ip.to_string());
      msg.header.probe_pair_id = PairToken{*dest.token};
    } else {
      msg.header.probe_pair_id = PairAddrs{src_ip, dest.ip};
    }

    PayloadEntry entry{device_.id, kNone, decision->payload_out};
    if (cmd.payload_sec)
      msg.segments.push_back(seal_entry(entry, msg.header, crypto_rng));
    else
      msg.entries.push_back(entry);

    LaunchedProbe probe;
    probe.out_iface = decision->actual_out;
    probe.next_hop = decision->next_hop;
    probe.route_target = dest.ip;
    if (!cmd.payload_append) {
      ProbeUpdate report;
      report.pair = msg.header.probe_pair_id;
      report.ttl = 0;
      report.terminal = false;
      report.sealed = cmd.payload_sec;
      if (cmd.payload_sec)
        report.segments = msg.segments;
      else
        report.entries = msg.entries;
      probe.source_report = std::move(report);
    }
    if (decision->correction_needed)
      probe.correction = UpdateOutInterface{msg.header.probe_pair_id, 0,
                                            device_.id, decision->actual_out};

    auto advanced = advance_ttl(msg.header, cmd.ttl_max ? cmd.ttl_max : ttl_max_);
    if (!advanced) continue;  // threshold of 1 hop: nothing can leave
    msg.header = *advanced;
    probe.msg = std::move(msg);
    out.push_back(std::move(probe));
  }
  if (!any_route)
    throw NoRouteToDestination("no route from " + device_.id + " to any interface of " +
                               cmd.dest_device);
  return out;
}

ProbeAction MbAgent::handle_incoming_probe(const ProbeMessage& msg,
                                           const std::string& in_iface,
                                           Rng& lb_rng, Rng& crypto_rng) {
  auto dest = pair_destination(msg.header.probe_pair_id);
  if (!dest)
    return DropProbe{"unresolvable probe-id token at " + device_.id, true};

  if (device_.owns_ip(*dest)) {
    PayloadEntry entry{device_.id, in_iface, kNone};
    ProbeUpdate report;
    report.pair = msg.header.probe_pair_id;
    report.ttl = msg.header.probe_ttl;
    report.terminal = true;
    report.sealed = msg.header.flag_payload_sec;
    if (msg.header.flag_payload_sec) {
      if (msg.header.flag_payload_append) report.segments = msg.segments;
      report.segments.push_back(seal_entry(entry, msg.header, crypto_rng));
    } else {
      if (msg.header.flag_payload_append) report.entries = msg.entries;
      report.entries.push_back(entry);
    }
    return TerminalUpCall{std::move(report)};
  }

  auto advanced = advance_ttl(msg.header, ttl_max_);
  if (!advanced)
    return DropProbe{"ttl threshold reached at " + device_.id};

  auto decision =
      compute_output_interface(*dest, EgressMode::RoutePredict, lb_rng);
  if (!decision) return DropProbe{"no route at " + device_.id};

  PayloadEntry entry{device_.id, in_iface, decision->payload_out};
  LaunchedProbe forward;
  forward.out_iface = decision->actual_out;
  forward.next_hop = decision->next_hop;
  forward.route_target = *dest;
  if (decision->correction_needed)
    forward.correction =
        UpdateOutInterface{msg.header.probe_pair_id, msg.header.probe_ttl,
                           device_.id, decision->actual_out};

  ProbeMessage next = msg;
  next.header = *advanced;
  if (msg.header.flag_payload_append) {
    if (msg.header.flag_payload_sec)
      next.segments.push_back(seal_entry(entry, msg.header, crypto_rng));
    else
      next = append_entry(next, entry);
    forward.msg = std::move(next);
    return AppendAndForward{std::move(forward)};
  }

  // Approach 1: replace the payload with this hop's context and up-call it.
  ProbeUpdate report;
  report.pair = msg.header.probe_pair_id;
  report.ttl = msg.header.probe_ttl;
  report.terminal = false;
  report.sealed = msg.header.flag_payload_sec;
  if (msg.header.flag_payload_sec) {
    next.segments = {seal_entry(entry, msg.header, crypto_rng)};
    report.segments = next.segments;
  } else {
    next.entries = {entry};
    report.entries = next.entries;
  }
  forward.msg = std::move(next);
  return UpCallAndForward{std::move(report), std::move(forward)};
}

PathAction MbAgent::handle_path_checker(const ProbeMessage& msg,
                                        const std::string& in_iface,
                                        Rng& crypto_rng) {
  (void)crypto_rng;
  auto rule = path_rules_.find(msg.header.path_id);
  if (rule == path_rules_.end()) return PathBroken{device_.id};

  if (rule->second == kLocalDeliver) {
    ProbeUpdate report;
    report.pair = msg.header.probe_pair_id;
    report.ttl = msg.header.probe_ttl;
    report.terminal = true;
    report.entries = msg.entries;
    report.entries.push_back(PayloadEntry{device_.id, in_iface, kNone});
    return PathTerminal{std::move(report)};
  }

  auto advanced = advance_ttl(msg.header, ttl_max_);
  if (!advanced) return DropProbe{"ttl threshold reached at " + device_.id};

  if (!device_.find_interface(rule->second)) return PathBroken{device_.id};

  ProbeMessage next = msg;
  next.header = *advanced;
  next = append_entry(next, PayloadEntry{device_.id, in_iface, rule->second});

  LaunchedProbe forward;
  forward.msg = std::move(next);
  forward.out_iface = rule->second;
  if (const auto* clear = std::get_if<PairAddrs>(&msg.header.probe_pair_id)) {
    forward.next_hop = clear->dst;
    forward.route_target = clear->dst;
  }
  return ForwardPath{std::move(forward)};
}

std::optional<LaunchedProbe> MbAgent::launch_path_probe(std::uint32_t path_id,
                                                        const PairAddrs& pair,
                                                        Rng& crypto_rng) {
  (void)crypto_rng;
  auto rule = path_rules_.find(path_id);
  if (rule == path_rules_.end() || rule->second == kLocalDeliver ||
      !device_.find_interface(rule->second))
    return std::nullopt;

  ProbeMessage msg;
  msg.header.path_id = path_id;
  msg.header.probe_ttl = 0;
  msg.header.flag_payload_append = true;
  msg.header.probe_pair_id = pair;
  msg.entries.push_back(PayloadEntry{device_.id, kNone, rule->second});

  auto advanced = advance_ttl(msg.header, ttl_max_);
  if (!advanced) return std::nullopt;
  msg.header = *advanced;

  LaunchedProbe out;
  out.msg = std::move(msg);
  out.out_iface = rule->second;
  out.next_hop = pair.dst;
  out.route_target = pair.dst;
  return out;
}

Heartbeat MbAgent::heartbeat_tick(std::uint64_t now) const {
  return Heartbeat{device_.id, "UP", now};
}

}  // namespace topoman
