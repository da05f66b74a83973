/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#ifndef TOPOMAN_PAYLOAD_SECURITY_HPP
#define TOPOMAN_PAYLOAD_SECURITY_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "topoman/probe_protocol.hpp"
#include "topoman/rng.hpp"

namespace topoman {

class IntegrityError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class DecryptError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

using PublicKey = std::array<std::uint8_t, 32>;
using PrivateKey = std::array<std::uint8_t, 32>;

/// Controller key pair; the public half is distributed to every agent, the
/// private half never leaves the controller.
struct ControllerKeyPair {
  PublicKey public_key{};
  PrivateKey private_key{};

  static ControllerKeyPair generate(Rng& rng);
};

/// The header subset bound into the integrity digest: probe-pair id plus the
/// three security-relevant flags. canonical() reuses the probe text grammar
/// (FLAGS line, then PROBE-PAIR-ID line) so there is exactly one serializer.
struct AuthenticatedHeaderFields {
  ProbePairId probe_pair_id = PairAddrs{};
  bool flag_payload_sec = true;
  bool flag_payload_append = false;

  bool flag_header_sec() const {
    return std::holds_alternative<PairToken>(probe_pair_id);
  }
  std::string canonical() const;

  static AuthenticatedHeaderFields from_header(const ProbeHeader& h);
};

/// Seal: fresh 256-bit key from rng, AES-256-CTR with a random 128-bit nonce
/// prepended to the ciphertext, SHA-256 over canonical(hdr) || ciphertext,
/// then (key || digest) wrapped to the controller public key.
SealedPayload seal_payload(std::span<const std::uint8_t> plaintext,
                           const AuthenticatedHeaderFields& hdr,
                           const PublicKey& pub, Rng& rng);

/// Open: unwrap (key || digest), recompute the digest over
/// canonical(hdr) || ciphertext, compare, then decrypt. Throws DecryptError
/// when the wrapped blob rejects the private key and IntegrityError when the
/// digest does not match.
std::vector<std::uint8_t> open_payload(const SealedPayload& sealed,
                                       const AuthenticatedHeaderFields& hdr,
                                       const ControllerKeyPair& keys);

std::vector<std::uint8_t> to_bytes(const std::string& text);
std::string to_string(const std::vector<std::uint8_t>& bytes);

/// Controller-side table mapping opaque probe-id tokens to probe pairs.
/// Tokens live for one validity window (a discovery round); lookups after
/// expiry behave as if the token was never issued.
class TokenAuthority {
 public:
  explicit TokenAuthority(std::uint64_t validity_window_ticks)
      : window_(validity_window_ticks) {}

  std::uint64_t issue(const PairAddrs& pair, std::uint64_t now, Rng& rng);
  /// Injectable draw for tests that force collisions.
  std::uint64_t issue_with(const PairAddrs& pair, std::uint64_t now,
                           const std::function<std::uint64_t()>& draw);

  std::optional<PairAddrs> resolve(std::uint64_t token, std::uint64_t now) const;

  std::size_t live_count(std::uint64_t now) const;

 private:
  struct Entry {
    PairAddrs pair;
    std::uint64_t expires_at;
  };
  std::uint64_t window_;
  std::map<std::uint64_t, Entry> live_;
};

}  // namespace topoman

#endif
