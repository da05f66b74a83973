/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "topoman/sim_harness.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>

namespace topoman {

PathSetup derive_path_rules(const NetworkInstance& net, const PathSpec& spec) {
  if (spec.path_id == 0)
    throw BadValueError("path-id 0 is reserved for discovery probes");
  if (spec.nodes.size() < 2)
    throw BadValueError("a path needs at least two nodes");
  PathSetup out;
  for (std::size_t k = 0; k + 1 < spec.nodes.size(); ++k) {
    const Middlebox* cur = net.find_middlebox(spec.nodes[k]);
    const Middlebox* nxt = net.find_middlebox(spec.nodes[k + 1]);
    if (!cur || !nxt)
      throw BadValueError("path names unknown middlebox");
    std::optional<std::pair<std::string, std::string>> joining;  // cur/nxt iface
    for (const auto& l : net.links) {
      if (l.a.node == cur->id && l.b.node == nxt->id)
        joining = {l.a.iface, l.b.iface};
      if (l.b.node == cur->id && l.a.node == nxt->id)
        joining = {l.b.iface, l.a.iface};
    }
    if (!joining)
      throw BadValueError("path nodes " + cur->id + " and " + nxt->id +
                          " are not directly linked");
    out.rules[cur->id] = joining->first;
    if (k == 0) out.pair.src = cur->find_interface(joining->first)->ip;
    if (k + 2 == spec.nodes.size())
      out.pair.dst = nxt->find_interface(joining->second)->ip;
  }
  out.rules[spec.nodes.back()] = kLocalDeliver;
  return out;
}

namespace {
ControllerKeyPair controller_keys_for(std::uint64_t seed) {
  Rng key_rng = Rng(seed).fork(5);
  return ControllerKeyPair::generate(key_rng);
}
}  // namespace

Simulation::Simulation(const NetworkInstance& net, const RunMode& mode,
                       std::uint64_t seed, std::ostream* transcript)
    : net_(net),
      mode_(mode),
      truth_(net.ground_truth()),
      manager_(controller_keys_for(seed), Rng(seed).fork(4)),
      sel_rng_(Rng(seed).fork(1)),
      lb_rng_(Rng(seed).fork(2)),
      transcript_(transcript) {
  const Rng crypto_base = Rng(seed).fork(3);
  manager_.set_ttl_max(mode.ttl_max);
  manager_.set_probe_flags(
      ProbeFlags{mode.payload_append, mode.header_sec, mode.payload_sec});

  for (const auto& mb : net_.middleboxes) {
    // Registration travels through the wire codec like every other message.
    const ApiMessage caps = decode_api(encode_api(to_api(DeviceCapabilities{mb})));
    manager_.register_capabilities(device_capabilities_from_api(caps));
    Middlebox agent_view = mb;
    agents_.emplace(mb.id, MbAgent(agent_view, manager_.public_key(),
                                   mode.ttl_max));
    agent_crypto_.emplace(mb.id, crypto_base.fork(mb.id));
  }
  for (const auto& island : net_.islands) manager_.register_island(island);
  manager_.set_edge_facing(net_.edge_facing_interfaces());
  if (mode.selection == SelectionMode::EdgeHeuristic)
    manager_.compute_edges(mode.heuristic, &net_.policies);

  for (auto& [id, agent] : agents_) {
    agent.set_resolver([this](const ResolveProbeIdRequest& req) {
      ++metrics_.resolves;
      return manager_.resolve(req, now_);
    });
  }

  for (const auto& l : net_.links) {
    peer_[l.a] = l.b;
    peer_[l.b] = l.a;
  }
}

void Simulation::log(const std::string& line) {
  if (transcript_) (*transcript_) << "t=" << now_ << " " << line << "\n";
}

void Simulation::schedule(std::uint64_t at, EventPayload payload) {
  queue_.insert(Event{at, seq_++, std::move(payload)});
}

void Simulation::emit_probe(const LaunchedProbe& probe,
                            const std::string& from_device) {
  const Endpoint from{from_device, probe.out_iface};
  auto peer = peer_.find(from);
  if (peer == peer_.end())
    throw std::logic_error("simulator invariant violation: probe leaves " +
                           from.to_string() + " which has no link");
  Ipv4 ip_dst = probe.route_target;
  schedule(now_ + 1,
           DeliverProbe{encode_message(probe.msg), peer->second, ip_dst});
  ++inflight_;
  if (probe.source_report) {
    schedule(now_ + 1, DeliverApi{encode_api(to_api(*probe.source_report))});
  }
  if (probe.correction) {
    ++metrics_.corrections;
    schedule(now_ + 1, DeliverApi{encode_api(to_api(*probe.correction))});
  }
}

void Simulation::drain() {
  while (!queue_.empty()) {
    Event ev = *queue_.begin();
    queue_.erase(queue_.begin());
    now_ = ev.time;
    process(ev);
  }
}

void Simulation::process(const Event& ev) {
  if (const auto* probe = std::get_if<DeliverProbe>(&ev.payload)) {
    if (truth_.middleboxes().count(probe->at.node))
      deliver_at_middlebox(*probe);
    else
      deliver_at_switch(*probe);
    return;
  }
  if (const auto* api = std::get_if<DeliverApi>(&ev.payload)) {
    const ApiMessage msg = decode_api(api->wire);
    if (msg.name == "PROBE-UPDATE") {
      const ProbeUpdate report = probe_update_from_api(msg);
      log("UPCALL pair=" + pair_id_to_string(report.pair) +
          " ttl=" + std::to_string(report.ttl) +
          " terminal=" + (report.terminal ? "1" : "0"));
      for (const Link& l : manager_.process_probe_update(report))
        log("LINK " + l.to_string());
    } else if (msg.name == "UPDATE-OUTINTERFACE") {
      const UpdateOutInterface upd = update_out_interface_from_api(msg);
      log("CORRECTION pair=" + pair_id_to_string(upd.pair) + " ttl=" +
          std::to_string(upd.ttl) + " out=" + upd.actual_out);
      for (const Link& l : manager_.process_out_interface_update(upd))
        log("LINK " + l.to_string());
    } else if (msg.name == "HEARTBEAT") {
      manager_.record_heartbeat(heartbeat_from_api(msg));
    }
    return;
  }
  if (const auto* obs = std::get_if<DeliverIslandObs>(&ev.payload)) {
    for (const Link& l : manager_.process_island_observation(obs->obs))
      log("LINK " + l.to_string());
    return;
  }
  if (const auto* hb = std::get_if<HeartbeatTick>(&ev.payload)) {
    auto it = agents_.find(hb->device);
    if (it != agents_.end())
      schedule(now_ + 1,
               DeliverApi{encode_api(to_api(it->second.heartbeat_tick(now_)))});
    return;
  }
}

void Simulation::deliver_at_middlebox(const DeliverProbe& ev) {
  const ProbeMessage msg = decode_message(ev.wire);
  log("HOP mb=" + ev.at.node + " in=" + ev.at.iface +
      " pair=" + pair_id_to_string(msg.header.probe_pair_id) +
      " ttl=" + std::to_string(msg.header.probe_ttl));

  if (classify_probe(msg.header) == ProbeKind::PathChecker) {
    handle_path_probe(msg, ev.at);
    return;
  }

  MbAgent& agent = agents_.at(ev.at.node);
  Rng& crypto = agent_crypto_.at(ev.at.node);
  ProbeAction action =
      agent.handle_incoming_probe(msg, ev.at.iface, lb_rng_, crypto);

  if (auto* up = std::get_if<UpCallAndForward>(&action)) {
    schedule(now_ + 1, DeliverApi{encode_api(to_api(up->report))});
    --inflight_;
    emit_probe(up->forward, ev.at.node);
    return;
  }
  if (auto* fwd = std::get_if<AppendAndForward>(&action)) {
    --inflight_;
    emit_probe(fwd->forward, ev.at.node);
    return;
  }
  if (auto* term = std::get_if<TerminalUpCall>(&action)) {
    --inflight_;
    schedule(now_ + 1, DeliverApi{encode_api(to_api(term->report))});
    return;
  }
  const auto& drop = std::get<DropProbe>(action);
  --inflight_;
  ++metrics_.drops;
  if (drop.alert) ++metrics_.alerts;
  log("DROP reason=\"" + drop.reason + "\"");
}

void Simulation::deliver_at_switch(const DeliverProbe& ev) {
  const SdnIsland* island = truth_.island_of_switch(ev.at.node);
  if (!island)
    throw std::logic_error("simulator invariant violation: unknown switch " +
                           ev.at.node);
  const ProbeMessage msg = decode_message(ev.wire);
  auto egress = island->route_port(ev.ip_dst);
  if (!egress)
    throw std::logic_error("simulator invariant violation: island " +
                           island->id + " has no route toward " +
                           ev.ip_dst.to_string());
  auto attached = peer_.find(Endpoint{egress->sw, egress->port});
  if (attached == peer_.end())
    throw std::logic_error("simulator invariant violation: island port " +
                           egress->to_string() + " is not attached");

  log("SDN island=" + island->id + " in=" + ev.at.node + ":" + ev.at.iface +
      " out=" + egress->to_string() +
      " ttl=" + std::to_string(msg.header.probe_ttl));
  // Packet-in/packet-out exchange: the probe is forwarded unmodified; the
  // SDN controller model reports the transit to the topology manager.
  if (classify_probe(msg.header) == ProbeKind::Discovery) {
    IslandObservation obs{island->id,
                          PortRef{ev.at.node, ev.at.iface},
                          *egress,
                          pair_id_to_string(msg.header.probe_pair_id),
                          msg.header.probe_ttl};
    schedule(now_ + 1, DeliverIslandObs{obs});
  }
  schedule(now_ + 1, DeliverProbe{ev.wire, attached->second, ev.ip_dst});
}

void Simulation::handle_path_probe(const ProbeMessage& msg, const Endpoint& at) {
  MbAgent& agent = agents_.at(at.node);
  Rng& crypto = agent_crypto_.at(at.node);
  PathAction action = agent.handle_path_checker(msg, at.iface, crypto);

  if (auto* fwd = std::get_if<ForwardPath>(&action)) {
    --inflight_;
    last_forwarder_ = at.node;
    emit_probe(fwd->forward, at.node);
    return;
  }
  if (auto* term = std::get_if<PathTerminal>(&action)) {
    --inflight_;
    PathResult result;
    for (const auto& e : term->report.entries) result.trace.push_back(e.device);
    result.ok = result.trace == path_nodes_;
    if (!result.ok) {
      result.failed_at = at.node;
      result.last_good = last_forwarder_.empty()
                             ? std::nullopt
                             : std::optional<std::string>(last_forwarder_);
    }
    log("PATH terminal=" + at.node + (result.ok ? " ok=1" : " ok=0"));
    path_result_ = std::move(result);
    return;
  }
  if (auto* broken = std::get_if<PathBroken>(&action)) {
    --inflight_;
    PathResult result;
    result.ok = false;
    result.failed_at = broken->device;
    result.last_good = last_forwarder_.empty()
                           ? std::nullopt
                           : std::optional<std::string>(last_forwarder_);
    log("PATH broken=" + broken->device);
    path_result_ = std::move(result);
    return;
  }
  const auto& drop = std::get<DropProbe>(action);
  --inflight_;
  ++metrics_.drops;
  PathResult result;
  result.ok = false;
  result.failed_at = at.node;
  result.last_good = last_forwarder_.empty()
                         ? std::nullopt
                         : std::optional<std::string>(last_forwarder_);
  log("PATH drop=\"" + drop.reason + "\"");
  path_result_ = std::move(result);
}

RunResult Simulation::run_discovery() {
  const auto start = std::chrono::steady_clock::now();
  for (;;) {
    TerminationResult term = manager_.check_termination(mode_.selection);
    if (term.done) break;
    auto pair = manager_.select_probe_pair(mode_.selection, sel_rng_);
    if (!pair) break;  // exhausted

    ProbeInit cmd = manager_.build_probe_init(*pair, now_);
    log("INIT src=" + pair->src_device + ":" + pair->src_iface +
        " dst=" + pair->dst_device + ":" + pair->dst_iface);
    // The command crosses the wire like the real API.
    const ProbeInit decoded = probe_init_from_api(decode_api(encode_api(to_api(cmd))));

    MbAgent& src = agents_.at(pair->src_device);
    Rng& crypto = agent_crypto_.at(pair->src_device);
    std::vector<LaunchedProbe> probes;
    try {
      probes = src.handle_probe_init(decoded, lb_rng_, crypto);
    } catch (const NoRouteToDestination&) {
      log("NOROUTE src=" + pair->src_device + " dst=" + pair->dst_device);
      continue;
    }
    for (auto& probe : probes) {
      manager_.begin_probe(probe.msg.header.probe_pair_id);
      ++metrics_.probe_triggers;
      log("TRIGGER pair=" + pair_id_to_string(probe.msg.header.probe_pair_id) +
          " out=" + probe.out_iface);
      emit_probe(probe, pair->src_device);
    }
    drain();
  }
  drain();
  if (inflight_ != 0)
    throw std::logic_error("simulator invariant violation: " +
                           std::to_string(inflight_) + " probes leaked");

  metrics_.sim_ticks = now_;
  metrics_.up_calls = manager_.up_call_count();
  const auto end = std::chrono::steady_clock::now();
  metrics_.wall_clock_seconds =
      std::chrono::duration<double>(end - start).count();

  RunResult out;
  out.metrics = metrics_;
  out.report = manager_.verify_offline(truth_);
  log("DONE ticks=" + std::to_string(metrics_.sim_ticks) +
      " triggers=" + std::to_string(metrics_.probe_triggers) +
      " upcalls=" + std::to_string(metrics_.up_calls) +
      " clean=" + (out.report.clean ? "1" : "0"));
  return out;
}

TrafficObservation Simulation::inject_data_traffic(const std::string& mb,
                                                   const std::string& iface) {
  const Middlebox* device = net_.find_middlebox(mb);
  if (!device || !device->find_interface(iface))
    throw NotEdgeAttachedError("unknown interface " + mb + ":" + iface);
  if (!device->find_interface(iface)->edge_facing)
    throw NotEdgeAttachedError(mb + ":" + iface +
                               " is not attached to an edge switch");
  auto peer = peer_.find(Endpoint{mb, iface});
  if (peer == peer_.end())
    throw NotEdgeAttachedError(mb + ":" + iface + " has no link");
  TrafficObservation obs{peer->second.node, peer->second.iface, mb, iface};
  log("TRAFFIC mb=" + mb + ":" + iface + " sw=" + peer->second.to_string());
  if (auto link = manager_.handle_late_discovery(obs))
    log("LINK " + link->to_string());
  return obs;
}

void Simulation::inject_all_residual_traffic() {
  VerificationReport report = manager_.verify_offline(truth_);
  for (const auto& [mb, iface] : report.residual) {
    const Middlebox* device = net_.find_middlebox(mb);
    if (device && device->find_interface(iface) &&
        device->find_interface(iface)->edge_facing)
      inject_data_traffic(mb, iface);
  }
}

VerificationReport Simulation::verify() const {
  return manager_.verify_offline(truth_);
}

PathSetup Simulation::install_path(const PathSpec& spec) {
  const PathSetup setup = derive_path_rules(net_, spec);
  for (const auto& [device, iface] : setup.rules)
    agents_.at(device).install_path_rule(spec.path_id, iface);
  return setup;
}

PathResult Simulation::check_path(const PathSpec& spec) {
  const PathSetup setup = derive_path_rules(net_, spec);
  path_nodes_ = spec.nodes;
  path_result_.reset();
  last_forwarder_.clear();

  MbAgent& src = agents_.at(spec.nodes.front());
  Rng& crypto = agent_crypto_.at(spec.nodes.front());
  auto probe = src.launch_path_probe(spec.path_id, setup.pair, crypto);
  if (!probe) {
    PathResult out;
    out.ok = false;
    out.failed_at = spec.nodes.front();
    return out;
  }
  log("PATHINIT id=" + std::to_string(spec.path_id) +
      " src=" + spec.nodes.front());
  last_forwarder_ = spec.nodes.front();
  emit_probe(*probe, spec.nodes.front());
  drain();

  if (!path_result_) {
    PathResult out;
    out.ok = false;
    out.failed_at = spec.nodes.front();
    out.last_good = last_forwarder_;
    return out;
  }
  return *path_result_;
}

PathResult Simulation::run_path_verification(const PathSpec& spec) {
  install_path(spec);
  return check_path(spec);
}

void Simulation::run_heartbeat_rounds(std::uint64_t rounds,
                                      const std::string& fail_device,
                                      std::uint64_t fail_after) {
  const std::uint64_t base = now_;
  for (std::uint64_t r = 0; r < rounds; ++r) {
    for (const auto& [id, agent] : agents_) {
      if (id == fail_device && r >= fail_after) continue;
      schedule(base + r, HeartbeatTick{id});
    }
  }
  drain();
}

}  // namespace topoman
