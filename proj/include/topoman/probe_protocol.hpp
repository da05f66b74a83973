/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#ifndef TOPOMAN_PROBE_PROTOCOL_HPP
#define TOPOMAN_PROBE_PROTOCOL_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "topoman/ip.hpp"

namespace topoman {

// Transport ports: discovery probes ride the well-known probe port, path
// checker probes ride a per-path port so transport-port rules can steer them.
inline constexpr int kDiscoveryPort = 7077;
inline constexpr int kPathCheckerPortBase = 7078;

inline constexpr const char* kNone = "NONE";
inline constexpr const char* kPending = "PENDING";

class ProtocolError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class MalformedHeaderError : public ProtocolError {
  using ProtocolError::ProtocolError;
};
class LengthMismatchError : public ProtocolError {
  using ProtocolError::ProtocolError;
};
class BadValueError : public ProtocolError {
  using ProtocolError::ProtocolError;
};
class AppendOnNonAppendProbe : public ProtocolError {
  using ProtocolError::ProtocolError;
};

enum class ProbeKind { Discovery, PathChecker };

/// Probe-pair identity in the clear: source and destination interface IPs.
struct PairAddrs {
  Ipv4 src;
  Ipv4 dst;
  auto operator<=>(const PairAddrs&) const = default;
};

/// Opaque 64-bit token standing in for the pair when header security is on.
struct PairToken {
  std::uint64_t value = 0;
  auto operator<=>(const PairToken&) const = default;
};

using ProbePairId = std::variant<PairAddrs, PairToken>;

std::string pair_id_to_string(const ProbePairId& id);

/// Header of a probe message. The header-sec flag is structural: it is true
/// exactly when pair_id holds the token form. payload_length is not stored;
/// it is computed at encode time and checked at decode time, so the "length
/// matches the encoded payload" invariant holds by construction.
struct ProbeHeader {
  std::uint32_t probe_ttl = 0;
  std::uint32_t path_id = 0;  // 0 = discovery, >0 = path checker
  bool flag_payload_append = false;
  bool flag_payload_sec = false;
  ProbePairId probe_pair_id = PairAddrs{};

  bool flag_header_sec() const {
    return std::holds_alternative<PairToken>(probe_pair_id);
  }
  bool operator==(const ProbeHeader&) const = default;
};

ProbeKind classify_probe(const ProbeHeader& header);

/// Increment the TTL; nullopt means the probe hit the configured threshold
/// and must be discarded.
std::optional<ProbeHeader> advance_ttl(const ProbeHeader& header,
                                       std::uint32_t max_threshold);

inline constexpr std::uint32_t kDefaultTtlMax = 32;

/// One hop's traversal report: the device plus the interfaces the probe used.
/// in_interface is NONE at the source hop; out_interface is NONE at the
/// destination hop and PENDING while a dynamic-egress correction is in flight.
struct PayloadEntry {
  std::string device;
  std::string in_interface = kNone;
  std::string out_interface = kNone;
  bool operator==(const PayloadEntry&) const = default;
};

std::string encode_entry(const PayloadEntry& entry);  // one line, '\n' included
PayloadEntry decode_entry_line(const std::string& line);  // without '\n'

/// Sealed payload segment: public-key wrapped (key || digest) plus the
/// symmetric ciphertext. Semantics live in payload_security; this is the
/// wire-level shape.
struct SealedPayload {
  std::vector<std::uint8_t> wrapped_blob;
  std::vector<std::uint8_t> ciphertext;
  bool operator==(const SealedPayload&) const = default;
};

std::string encode_segment(const SealedPayload& seg);  // one line, '\n' included

/// A probe message: header plus either clear traversal entries or sealed
/// segments (one per reporting hop) when flag_payload_sec is set.
struct ProbeMessage {
  ProbeHeader header;
  std::vector<PayloadEntry> entries;
  std::vector<SealedPayload> segments;

  bool operator==(const ProbeMessage&) const = default;
};

std::string encode_message(const ProbeMessage& msg);
ProbeMessage decode_message(const std::string& bytes);

/// Append one hop entry to an append-mode clear-payload probe.
ProbeMessage append_entry(const ProbeMessage& msg, const PayloadEntry& entry);

std::string b64_encode(const std::vector<std::uint8_t>& data);
std::vector<std::uint8_t> b64_decode(const std::string& text);  // throws BadValueError

}  // namespace topoman

#endif
