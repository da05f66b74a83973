/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "topoman/api_messages.hpp"

#include <sstream>

namespace topoman {

namespace {

std::uint32_t parse_u32_field(const std::string& value, const char* what) {
  std::uint64_t out = 0;
  if (value.empty()) throw BadValueError(std::string(what) + ": empty");
  for (char c : value) {
    if (c < '0' || c > '9')
      throw BadValueError(std::string(what) + ": not a number: " + value);
    out = out * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return static_cast<std::uint32_t>(out);
}

std::uint64_t parse_hex64(const std::string& text, const char* what) {
  if (text.size() != 16)
    throw BadValueError(std::string(what) + ": expected 16 hex digits");
  std::uint64_t out = 0;
  for (char c : text) {
    out <<= 4;
    if (c >= '0' && c <= '9')
      out |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f')
      out |= static_cast<std::uint64_t>(c - 'a' + 10);
    else
      throw BadValueError(std::string(what) + ": bad hex digit");
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ProbePairId parse_pair_field(const std::string& value) {
  auto arrow = value.find("->");
  if (arrow == std::string::npos) return PairToken{parse_hex64(value, "PAIR")};
  auto src = Ipv4::parse(value.substr(0, arrow));
  auto dst = Ipv4::parse(value.substr(arrow + 2));
  if (!src || !dst) throw BadValueError("bad probe pair: " + value);
  return PairAddrs{*src, *dst};
}

/// key=value;key=value attribute list used inside single-line fields.
std::vector<std::pair<std::string, std::string>> parse_attrs(
    const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto semi = text.find(';', pos);
    std::string item = text.substr(
        pos, semi == std::string::npos ? std::string::npos : semi - pos);
    pos = semi == std::string::npos ? text.size() : semi + 1;
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw BadValueError("expected key=value attribute: " + item);
    out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

std::string attr(const std::vector<std::pair<std::string, std::string>>& attrs,
                 const std::string& key) {
  for (const auto& [k, v] : attrs)
    if (k == key) return v;
  throw BadValueError("missing attribute " + key);
}

std::optional<std::string> attr_opt(
    const std::vector<std::pair<std::string, std::string>>& attrs,
    const std::string& key) {
  for (const auto& [k, v] : attrs)
    if (k == key) return v;
  return std::nullopt;
}

}  // namespace

std::optional<std::string> ApiMessage::first(const std::string& key) const {
  for (const auto& [k, v] : fields)
    if (k == key) return v;
  return std::nullopt;
}

std::vector<std::string> ApiMessage::all(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : fields)
    if (k == key) out.push_back(v);
  return out;
}

std::string encode_api(const ApiMessage& msg) {
  std::string out = "API: " + msg.name + "\n";
  for (const auto& [k, v] : msg.fields) out += k + ": " + v + "\n";
  return out;
}

ApiMessage decode_api(const std::string& bytes) {
  ApiMessage out;
  std::istringstream in(bytes);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto colon = line.find(": ");
    if (colon == std::string::npos)
      throw MalformedHeaderError("api line without ': ': " + line);
    std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 2);
    if (first) {
      if (key != "API") throw MalformedHeaderError("first line must be API:");
      out.name = value;
      first = false;
      continue;
    }
    out.fields.emplace_back(std::move(key), std::move(value));
  }
  if (first) throw MalformedHeaderError("empty api message");
  return out;
}

// --- DEVICE-CAPABILITIES ----------------------------------------------------

ApiMessage to_api(const DeviceCapabilities& caps) {
  ApiMessage out;
  out.name = "DEVICE-CAPABILITIES";
  out.fields.emplace_back("DEVICE", caps.device.id);
  out.fields.emplace_back("KIND", to_string(caps.device.kind));
  out.fields.emplace_back("DYNAMIC", caps.device.dynamic_egress ? "1" : "0");
  for (const auto& iface : caps.device.interfaces) {
    out.fields.emplace_back(
        "INTERFACE", "name=" + iface.name + ";ip=" + iface.ip.to_string() +
                         ";prefix=" + std::to_string(iface.prefix_len));
  }
  for (const auto& r : caps.device.routes) {
    std::string v = "dest=" + r.dest.to_string() + ";out=" + r.out_interface;
    if (r.next_hop) v += ";next_hop=" + r.next_hop->to_string();
    out.fields.emplace_back("ROUTE", v);
  }
  return out;
}

DeviceCapabilities device_capabilities_from_api(const ApiMessage& msg) {
  if (msg.name != "DEVICE-CAPABILITIES")
    throw BadValueError("not a DEVICE-CAPABILITIES message");
  DeviceCapabilities out;
  auto dev = msg.first("DEVICE");
  auto kind = msg.first("KIND");
  if (!dev || !kind) throw BadValueError("capabilities missing DEVICE/KIND");
  out.device.id = *dev;
  auto k = mb_kind_from_string(*kind);
  if (!k) throw BadValueError("unknown kind: " + *kind);
  out.device.kind = *k;
  out.device.dynamic_egress = msg.first("DYNAMIC").value_or("0") == "1";
  for (const auto& text : msg.all("INTERFACE")) {
    auto attrs = parse_attrs(text);
    Interface iface;
    iface.name = attr(attrs, "name");
    auto ip = Ipv4::parse(attr(attrs, "ip"));
    if (!ip) throw BadValueError("bad interface ip");
    iface.ip = *ip;
    iface.prefix_len = static_cast<int>(
        parse_u32_field(attr(attrs, "prefix"), "INTERFACE prefix"));
    out.device.interfaces.push_back(std::move(iface));
  }
  for (const auto& text : msg.all("ROUTE")) {
    auto attrs = parse_attrs(text);
    RouteEntry r;
    auto dest = Subnet::parse(attr(attrs, "dest"));
    if (!dest) throw BadValueError("bad route dest");
    r.dest = *dest;
    r.out_interface = attr(attrs, "out");
    if (auto nh = attr_opt(attrs, "next_hop")) {
      auto ip = Ipv4::parse(*nh);
      if (!ip) throw BadValueError("bad route next_hop");
      r.next_hop = *ip;
    }
    out.device.routes.push_back(std::move(r));
  }
  return out;
}

// --- PROBE-INIT ---------------------------------------------------------------

ApiMessage to_api(const ProbeInit& cmd) {
  ApiMessage out;
  out.name = "PROBE-INIT";
  out.fields.emplace_back("DEST-DEVICE", cmd.dest_device);
  out.fields.emplace_back("SRC-INTERFACE", cmd.src_interface);
  for (const auto& d : cmd.dest_interfaces) {
    std::string v = "name=" + d.iface + ";ip=" + d.ip.to_string();
    if (d.token) v += ";token=" + hex64(*d.token);
    out.fields.emplace_back("DEST-INTERFACE", v);
  }
  std::string flags;
  auto add = [&flags](const char* tok) {
    if (!flags.empty()) flags += ',';
    flags += tok;
  };
  if (cmd.payload_append) add("APPEND");
  if (cmd.header_sec) add("HDRSEC");
  if (cmd.payload_sec) add("PAYSEC");
  if (flags.empty()) flags = kNone;
  out.fields.emplace_back("FLAGS", flags);
  out.fields.emplace_back("TTL-MAX", std::to_string(cmd.ttl_max));
  return out;
}

ProbeInit probe_init_from_api(const ApiMessage& msg) {
  if (msg.name != "PROBE-INIT") throw BadValueError("not a PROBE-INIT message");
  ProbeInit out;
  out.dest_device = msg.first("DEST-DEVICE").value_or("");
  out.src_interface = msg.first("SRC-INTERFACE").value_or("");
  if (out.dest_device.empty())
    throw BadValueError("PROBE-INIT missing DEST-DEVICE");
  for (const auto& text : msg.all("DEST-INTERFACE")) {
    auto attrs = parse_attrs(text);
    ProbeInitDest d;
    d.iface = attr(attrs, "name");
    auto ip = Ipv4::parse(attr(attrs, "ip"));
    if (!ip) throw BadValueError("bad DEST-INTERFACE ip");
    d.ip = *ip;
    if (auto tok = attr_opt(attrs, "token"))
      d.token = parse_hex64(*tok, "token");
    out.dest_interfaces.push_back(d);
  }
  const std::string flags = msg.first("FLAGS").value_or(kNone);
  if (flags != kNone) {
    std::size_t pos = 0;
    while (pos <= flags.size()) {
      auto comma = flags.find(',', pos);
      std::string tok = flags.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      if (tok == "APPEND")
        out.payload_append = true;
      else if (tok == "HDRSEC")
        out.header_sec = true;
      else if (tok == "PAYSEC")
        out.payload_sec = true;
      else
        throw BadValueError("PROBE-INIT FLAGS: unknown token " + tok);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  out.ttl_max = parse_u32_field(
      msg.first("TTL-MAX").value_or(std::to_string(kDefaultTtlMax)), "TTL-MAX");
  return out;
}

// --- PROBE-UPDATE ---------------------------------------------------------------

ApiMessage to_api(const ProbeUpdate& report) {
  ApiMessage out;
  out.name = "PROBE-UPDATE";
  out.fields.emplace_back("PROBE-PAIR-ID", pair_id_to_string(report.pair));
  out.fields.emplace_back("TTL", std::to_string(report.ttl));
  out.fields.emplace_back("TERMINAL", report.terminal ? "1" : "0");
  if (report.sealed) {
    for (const auto& seg : report.segments) {
      std::string line = encode_segment(seg);
      line.pop_back();  // line-oriented field, strip the payload '\n'
      out.fields.emplace_back("SEG", line.substr(4));
    }
  } else {
    for (const auto& e : report.entries) {
      std::string line = encode_entry(e);
      line.pop_back();
      out.fields.emplace_back("ENTRY", line);
    }
  }
  return out;
}

ProbeUpdate probe_update_from_api(const ApiMessage& msg) {
  if (msg.name != "PROBE-UPDATE")
    throw BadValueError("not a PROBE-UPDATE message");
  ProbeUpdate out;
  auto pair = msg.first("PROBE-PAIR-ID");
  if (!pair) throw BadValueError("PROBE-UPDATE missing PROBE-PAIR-ID");
  out.pair = parse_pair_field(*pair);
  out.ttl = parse_u32_field(msg.first("TTL").value_or(""), "TTL");
  out.terminal = msg.first("TERMINAL").value_or("0") == "1";
  for (const auto& text : msg.all("ENTRY"))
    out.entries.push_back(decode_entry_line(text));
  for (const auto& text : msg.all("SEG")) {
    auto colon = text.find(':');
    if (colon == std::string::npos) throw BadValueError("bad SEG field");
    SealedPayload seg;
    seg.wrapped_blob = b64_decode(text.substr(0, colon));
    seg.ciphertext = b64_decode(text.substr(colon + 1));
    out.segments.push_back(std::move(seg));
  }
  out.sealed = !out.segments.empty();
  return out;
}

// --- UPDATE-OUTINTERFACE ----------------------------------------------------------

ApiMessage to_api(const UpdateOutInterface& msg) {
  ApiMessage out;
  out.name = "UPDATE-OUTINTERFACE";
  out.fields.emplace_back("PROBE-PAIR-ID", pair_id_to_string(msg.pair));
  out.fields.emplace_back("TTL", std::to_string(msg.ttl));
  out.fields.emplace_back("DEVICE", msg.device);
  out.fields.emplace_back("OUT-INTERFACE", msg.actual_out);
  return out;
}

UpdateOutInterface update_out_interface_from_api(const ApiMessage& msg) {
  if (msg.name != "UPDATE-OUTINTERFACE")
    throw BadValueError("not an UPDATE-OUTINTERFACE message");
  UpdateOutInterface out;
  auto pair = msg.first("PROBE-PAIR-ID");
  if (!pair) throw BadValueError("UPDATE-OUTINTERFACE missing PROBE-PAIR-ID");
  out.pair = parse_pair_field(*pair);
  out.ttl = parse_u32_field(msg.first("TTL").value_or(""), "TTL");
  out.device = msg.first("DEVICE").value_or("");
  out.actual_out = msg.first("OUT-INTERFACE").value_or("");
  if (out.device.empty() || out.actual_out.empty())
    throw BadValueError("UPDATE-OUTINTERFACE missing DEVICE/OUT-INTERFACE");
  return out;
}

// --- RESOLVE-PROBEID ----------------------------------------------------------------

ApiMessage to_api(const ResolveProbeIdRequest& req) {
  ApiMessage out;
  out.name = "RESOLVE-PROBEID";
  out.fields.emplace_back("TOKEN", hex64(req.token));
  return out;
}

ResolveProbeIdRequest resolve_request_from_api(const ApiMessage& msg) {
  if (msg.name != "RESOLVE-PROBEID")
    throw BadValueError("not a RESOLVE-PROBEID message");
  ResolveProbeIdRequest out;
  out.token = parse_hex64(msg.first("TOKEN").value_or(""), "TOKEN");
  return out;
}

ApiMessage to_api(const ResolveProbeIdResponse& resp) {
  ApiMessage out;
  out.name = "RESOLVE-PROBEID-RESULT";
  out.fields.emplace_back("STATUS", resp.pair ? "OK" : "UNKNOWN-TOKEN");
  if (resp.pair) out.fields.emplace_back("PAIR", pair_id_to_string(*resp.pair));
  return out;
}

ResolveProbeIdResponse resolve_response_from_api(const ApiMessage& msg) {
  if (msg.name != "RESOLVE-PROBEID-RESULT")
    throw BadValueError("not a RESOLVE-PROBEID-RESULT message");
  ResolveProbeIdResponse out;
  if (msg.first("STATUS").value_or("") == "OK") {
    auto pair = parse_pair_field(msg.first("PAIR").value_or(""));
    out.pair = std::get<PairAddrs>(pair);
  }
  return out;
}

// --- HEARTBEAT -------------------------------------------------------------------------

ApiMessage to_api(const Heartbeat& hb) {
  ApiMessage out;
  out.name = "HEARTBEAT";
  out.fields.emplace_back("DEVICE", hb.device);
  out.fields.emplace_back("STATUS", hb.status);
  out.fields.emplace_back("TIME", std::to_string(hb.time));
  return out;
}

Heartbeat heartbeat_from_api(const ApiMessage& msg) {
  if (msg.name != "HEARTBEAT") throw BadValueError("not a HEARTBEAT message");
  Heartbeat out;
  out.device = msg.first("DEVICE").value_or("");
  out.status = msg.first("STATUS").value_or("UP");
  out.time = parse_u32_field(msg.first("TIME").value_or("0"), "TIME");
  return out;
}

}  // namespace topoman
