/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include <deque>

#include "doctest.h"
#include "topoman/payload_security.hpp"

using namespace topoman;

namespace {

AuthenticatedHeaderFields sample_hdr() {
  AuthenticatedHeaderFields hdr;
  hdr.probe_pair_id =
      PairAddrs{*Ipv4::parse("10.0.1.1"), *Ipv4::parse("10.0.9.1")};
  hdr.flag_payload_sec = true;
  hdr.flag_payload_append = true;
  return hdr;
}

}  // namespace

TEST_CASE("seal/open round-trip over randomized payloads") {
  Rng key_rng(1);
  ControllerKeyPair keys = ControllerKeyPair::generate(key_rng);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    std::vector<std::uint8_t> plain(rng.below(2048));
    rng.fill(plain);
    AuthenticatedHeaderFields hdr = sample_hdr();
    SealedPayload sealed = seal_payload(plain, hdr, keys.public_key, rng);
    CHECK(open_payload(sealed, hdr, keys) == plain);
  }
  // Large payload: 64 KiB.
  std::vector<std::uint8_t> big(64 * 1024);
  rng.fill(big);
  SealedPayload sealed = seal_payload(big, sample_hdr(), keys.public_key, rng);
  CHECK(open_payload(sealed, sample_hdr(), keys) == big);
}

TEST_CASE("empty payload seals and opens") {
  Rng key_rng(1);
  ControllerKeyPair keys = ControllerKeyPair::generate(key_rng);
  Rng rng(3);
  SealedPayload sealed =
      seal_payload({}, sample_hdr(), keys.public_key, rng);
  CHECK(open_payload(sealed, sample_hdr(), keys).empty());
}

TEST_CASE("sealing twice with different rng states differs everywhere") {
  Rng key_rng(1);
  ControllerKeyPair keys = ControllerKeyPair::generate(key_rng);
  Rng rng(4);
  const std::vector<std::uint8_t> plain{1, 2, 3, 4};
  SealedPayload a = seal_payload(plain, sample_hdr(), keys.public_key, rng);
  SealedPayload b = seal_payload(plain, sample_hdr(), keys.public_key, rng);
  CHECK(a.ciphertext != b.ciphertext);
  CHECK(a.wrapped_blob != b.wrapped_blob);
}

TEST_CASE("single-bit tampering is always detected") {
  Rng key_rng(1);
  ControllerKeyPair keys = ControllerKeyPair::generate(key_rng);
  Rng rng(5);
  std::vector<std::uint8_t> plain(48);
  rng.fill(plain);
  AuthenticatedHeaderFields hdr = sample_hdr();
  const SealedPayload sealed = seal_payload(plain, hdr, keys.public_key, rng);

  SUBCASE("every ciphertext bit") {
    for (std::size_t bit = 0; bit < sealed.ciphertext.size() * 8; ++bit) {
      SealedPayload bad = sealed;
      bad.ciphertext[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      CHECK_THROWS_AS(open_payload(bad, hdr, keys), IntegrityError);
    }
  }
  SUBCASE("every wrapped-blob bit") {
    for (std::size_t bit = 0; bit < sealed.wrapped_blob.size() * 8; ++bit) {
      SealedPayload bad = sealed;
      bad.wrapped_blob[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      CHECK_THROWS(open_payload(bad, hdr, keys));
    }
  }
  SUBCASE("each authenticated header field") {
    AuthenticatedHeaderFields changed = hdr;
    changed.flag_payload_append = !changed.flag_payload_append;
    CHECK_THROWS_AS(open_payload(sealed, changed, keys), IntegrityError);

    changed = hdr;
    changed.probe_pair_id = PairToken{0x1234abcd5678ef01ull};  // header-sec flip
    CHECK_THROWS_AS(open_payload(sealed, changed, keys), IntegrityError);

    changed = hdr;
    changed.probe_pair_id =
        PairAddrs{*Ipv4::parse("10.0.1.1"), *Ipv4::parse("10.0.9.2")};
    CHECK_THROWS_AS(open_payload(sealed, changed, keys), IntegrityError);

    changed = hdr;
    changed.flag_payload_sec = false;
    CHECK_THROWS_AS(open_payload(sealed, changed, keys), IntegrityError);
  }
  SUBCASE("wrong private key") {
    Rng other_rng(1001);
    ControllerKeyPair other = ControllerKeyPair::generate(other_rng);
    CHECK_THROWS_AS(open_payload(sealed, hdr, other), DecryptError);
  }
}

TEST_CASE("token issuance and resolution") {
  TokenAuthority authority(/*window=*/100);
  Rng rng(6);
  const PairAddrs p1{*Ipv4::parse("10.0.0.1"), *Ipv4::parse("10.0.0.2")};
  const PairAddrs p2{*Ipv4::parse("10.0.0.5"), *Ipv4::parse("10.0.0.6")};

  const std::uint64_t t1 = authority.issue(p1, 0, rng);
  const std::uint64_t t2 = authority.issue(p2, 0, rng);
  CHECK(t1 != t2);
  CHECK(authority.resolve(t1, 10) == p1);
  CHECK(authority.resolve(t2, 10) == p2);

  SUBCASE("unissued token is unknown") {
    std::uint64_t bogus = t1 ^ t2 ^ 0x5a5a5a5a5a5a5a5aull;
    CHECK(!authority.resolve(bogus, 0).has_value());
  }
  SUBCASE("expired token is unknown") {
    CHECK(!authority.resolve(t1, 100).has_value());
    CHECK(authority.resolve(t1, 99).has_value());
  }
  SUBCASE("forced collision retries to a unique token") {
    std::deque<std::uint64_t> feed{t1, t1, 777};  // two collisions, then fresh
    const std::uint64_t t3 = authority.issue_with(p2, 0, [&feed] {
      std::uint64_t v = feed.front();
      feed.pop_front();
      return v;
    });
    CHECK(t3 == 777);
    CHECK(authority.resolve(t1, 0) == p1);  // original mapping untouched
    CHECK(authority.resolve(t3, 0) == p2);
  }
}
