/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#ifndef TOPOMAN_API_MESSAGES_HPP
#define TOPOMAN_API_MESSAGES_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "topoman/probe_protocol.hpp"
#include "topoman/topology_model.hpp"

namespace topoman {

/// Generic controller/agent message: `API: <NAME>` first line, then one
/// `KEY: value` line per field. Keys may repeat (interface lists, hop
/// entries); order is preserved and significant for round-trips.
struct ApiMessage {
  std::string name;
  std::vector<std::pair<std::string, std::string>> fields;

  std::optional<std::string> first(const std::string& key) const;
  std::vector<std::string> all(const std::string& key) const;
};

std::string encode_api(const ApiMessage& msg);
ApiMessage decode_api(const std::string& bytes);  // throws MalformedHeaderError

// --- DEVICE-CAPABILITIES ---------------------------------------------------
// Graybox view a middlebox exposes at registration: interfaces, routes, kind.
struct DeviceCapabilities {
  Middlebox device;
};
ApiMessage to_api(const DeviceCapabilities& caps);
DeviceCapabilities device_capabilities_from_api(const ApiMessage& msg);

// --- PROBE-INIT --------------------------------------------------------------
struct ProbeInitDest {
  std::string iface;
  Ipv4 ip;
  std::optional<std::uint64_t> token;  // present when header security is on
};

struct ProbeInit {
  std::string dest_device;
  std::string src_interface;  // the selected source interface
  std::vector<ProbeInitDest> dest_interfaces;
  bool payload_append = false;
  bool header_sec = false;
  bool payload_sec = false;
  std::uint32_t ttl_max = kDefaultTtlMax;
};
ApiMessage to_api(const ProbeInit& cmd);
ProbeInit probe_init_from_api(const ApiMessage& msg);

// --- PROBE-UPDATE ------------------------------------------------------------
// One up-call. Per-hop reports carry a single entry at the hop's observed
// TTL; terminal reports carry the whole trace (entry k at TTL k) with the
// TTL field naming the terminal hop.
struct ProbeUpdate {
  ProbePairId pair = PairAddrs{};
  std::uint32_t ttl = 0;
  bool terminal = false;
  bool sealed = false;
  std::vector<PayloadEntry> entries;
  std::vector<SealedPayload> segments;
};
ApiMessage to_api(const ProbeUpdate& report);
ProbeUpdate probe_update_from_api(const ApiMessage& msg);

// --- UPDATE-OUTINTERFACE -----------------------------------------------------
struct UpdateOutInterface {
  ProbePairId pair = PairAddrs{};
  std::uint32_t ttl = 0;  // the corrected hop's observed TTL
  std::string device;
  std::string actual_out;
};
ApiMessage to_api(const UpdateOutInterface& msg);
UpdateOutInterface update_out_interface_from_api(const ApiMessage& msg);

// --- RESOLVE-PROBEID ----------------------------------------------------------
struct ResolveProbeIdRequest {
  std::uint64_t token = 0;
};
ApiMessage to_api(const ResolveProbeIdRequest& req);
ResolveProbeIdRequest resolve_request_from_api(const ApiMessage& msg);

struct ResolveProbeIdResponse {
  std::optional<PairAddrs> pair;  // nullopt = UNKNOWN-TOKEN
};
ApiMessage to_api(const ResolveProbeIdResponse& resp);
ResolveProbeIdResponse resolve_response_from_api(const ApiMessage& msg);

// --- HEARTBEAT -----------------------------------------------------------------
struct Heartbeat {
  std::string device;
  std::string status = "UP";
  std::uint64_t time = 0;
};
ApiMessage to_api(const Heartbeat& hb);
Heartbeat heartbeat_from_api(const ApiMessage& msg);

}  // namespace topoman

#endif
