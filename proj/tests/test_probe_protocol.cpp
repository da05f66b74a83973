/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include <string>

#include "doctest.h"
#include "topoman/probe_protocol.hpp"
#include "topoman/rng.hpp"

using namespace topoman;

namespace {

ProbeMessage sample_discovery() {
  ProbeMessage msg;
  msg.header.probe_ttl = 0;
  msg.header.path_id = 0;
  msg.header.flag_payload_append = true;
  msg.header.probe_pair_id =
      PairAddrs{*Ipv4::parse("10.0.1.1"), *Ipv4::parse("10.0.9.1")};
  return msg;
}

/// Random valid message generator for the round-trip property.
ProbeMessage random_message(Rng& rng) {
  ProbeMessage msg;
  msg.header.probe_ttl = static_cast<std::uint32_t>(rng.below(32));
  msg.header.path_id = static_cast<std::uint32_t>(rng.below(4));
  msg.header.flag_payload_append = rng.below(2) == 1;
  msg.header.flag_payload_sec = rng.below(4) == 0;
  if (rng.below(2) == 0)
    msg.header.probe_pair_id = PairToken{rng.next_u64()};
  else
    msg.header.probe_pair_id =
        PairAddrs{Ipv4{static_cast<std::uint32_t>(rng.next_u64())},
                  Ipv4{static_cast<std::uint32_t>(rng.next_u64())}};
  const std::size_t max_entries = msg.header.flag_payload_append ? 5 : 1;
  const std::size_t count = rng.below(max_entries + 1);
  for (std::size_t i = 0; i < count; ++i) {
    if (msg.header.flag_payload_sec) {
      SealedPayload seg;
      seg.wrapped_blob.resize(rng.below(40) + 1);
      seg.ciphertext.resize(rng.below(60) + 1);
      rng.fill(seg.wrapped_blob);
      rng.fill(seg.ciphertext);
      msg.segments.push_back(std::move(seg));
    } else {
      msg.entries.push_back(PayloadEntry{
          "MB" + std::to_string(rng.below(100)),
          i == 0 ? std::string(kNone) : "eth" + std::to_string(rng.below(8)),
          rng.below(5) == 0 ? std::string(kPending)
                            : "eth" + std::to_string(rng.below(8))});
    }
  }
  return msg;
}

}  // namespace

TEST_CASE("encode emits the documented line grammar") {
  ProbeMessage msg = sample_discovery();
  const std::string wire = encode_message(msg);
  CHECK(wire ==
        "TOPOMAN/1 DISCOVERY\n"
        "PROBE-TTL: 0\n"
        "PATH-ID: 0\n"
        "PAYLOAD-LENGTH: 0\n"
        "FLAGS: APPEND\n"
        "PROBE-PAIR-ID: 10.0.1.1->10.0.9.1\n"
        "\n");
}

TEST_CASE("payload length counts the encoded entry bytes exactly") {
  ProbeMessage msg = sample_discovery();
  msg.entries = {PayloadEntry{"MB1", kNone, "eth1"},
                 PayloadEntry{"MB2", "eth0", "eth3"},
                 PayloadEntry{"MB3", "eth2", kNone}};
  // Independent oracle: encode the three entries separately and count bytes.
  std::size_t expected = 0;
  for (const auto& e : msg.entries) expected += encode_entry(e).size();
  REQUIRE(expected > 0);
  const std::string wire = encode_message(msg);
  const std::string needle = "PAYLOAD-LENGTH: " + std::to_string(expected);
  CHECK(wire.find(needle) != std::string::npos);
}

TEST_CASE("round-trip: decode(encode(m)) == m over randomized messages") {
  Rng rng(1234);
  for (int i = 0; i < 500; ++i) {
    ProbeMessage msg = random_message(rng);
    CAPTURE(i);
    ProbeMessage back = decode_message(encode_message(msg));
    CHECK(back == msg);
  }
}

TEST_CASE("round-trip: encode(decode(b)) is byte-identical") {
  Rng rng(99);
  for (int i = 0; i < 100; ++i) {
    const std::string wire = encode_message(random_message(rng));
    CHECK(encode_message(decode_message(wire)) == wire);
  }
}

TEST_CASE("decode rejects malformed input") {
  ProbeMessage msg = sample_discovery();
  msg.entries.push_back(PayloadEntry{"MB1", kNone, "eth0"});
  const std::string wire = encode_message(msg);

  SUBCASE("declared length larger than the payload") {
    std::string bad = wire;
    bad.replace(bad.find("PAYLOAD-LENGTH: "), std::string::npos,
                "PAYLOAD-LENGTH: 100\nFLAGS: APPEND\n"
                "PROBE-PAIR-ID: 10.0.1.1->10.0.9.1\n\n" +
                    encode_entry(msg.entries[0]));
    CHECK_THROWS_AS(decode_message(bad), LengthMismatchError);
  }
  SUBCASE("missing required key") {
    std::string bad = wire;
    auto pos = bad.find("PATH-ID: 0\n");
    bad.erase(pos, std::string("PATH-ID: 0\n").size());
    CHECK_THROWS_AS(decode_message(bad), MalformedHeaderError);
  }
  SUBCASE("duplicate key") {
    std::string bad = wire;
    bad.insert(bad.find("PATH-ID"), "PROBE-TTL: 3\n");
    CHECK_THROWS_AS(decode_message(bad), MalformedHeaderError);
  }
  SUBCASE("unknown key is rejected") {
    std::string bad = wire;
    bad.insert(bad.find("PATH-ID"), "X-CUSTOM: 1\n");
    CHECK_THROWS_AS(decode_message(bad), MalformedHeaderError);
  }
  SUBCASE("non-numeric ttl") {
    std::string bad = wire;
    bad.replace(bad.find("PROBE-TTL: 0"), std::string("PROBE-TTL: 0").size(),
                "PROBE-TTL: ab");
    CHECK_THROWS_AS(decode_message(bad), BadValueError);
  }
  SUBCASE("protocol line disagreeing with path-id") {
    std::string bad = wire;
    bad.replace(0, std::string("TOPOMAN/1 DISCOVERY").size(),
                "TOPOMAN/1 PATHCHECK");
    CHECK_THROWS_AS(decode_message(bad), BadValueError);
  }
}

TEST_CASE("advance_ttl increments below the threshold and discards at it") {
  ProbeHeader h;
  h.probe_ttl = 3;
  auto out = advance_ttl(h, 32);
  REQUIRE(out.has_value());
  CHECK(out->probe_ttl == 4);

  h.probe_ttl = 31;
  CHECK(!advance_ttl(h, 32).has_value());

  h.probe_ttl = 0;
  CHECK(!advance_ttl(h, 1).has_value());
}

TEST_CASE("classification depends on path_id only") {
  ProbeHeader h;
  h.path_id = 0;
  CHECK(classify_probe(h) == ProbeKind::Discovery);
  h.path_id = 7;
  CHECK(classify_probe(h) == ProbeKind::PathChecker);
  h.path_id = 1;
  CHECK(classify_probe(h) == ProbeKind::PathChecker);
}

TEST_CASE("append_entry grows the tail and keeps prior entries intact") {
  ProbeMessage msg = sample_discovery();
  ProbeMessage one = append_entry(msg, PayloadEntry{"MB3", "eth0", "eth1"});
  CHECK(one.entries.size() == 1);
  const std::string first = encode_entry(one.entries[0]);

  ProbeMessage two = append_entry(one, PayloadEntry{"MB4", "eth2", kNone});
  CHECK(two.entries.size() == 2);
  CHECK(encode_entry(two.entries[0]) == first);

  // Length equals the sum of independently encoded entry lines.
  std::size_t expected = 0;
  for (const auto& e : two.entries) expected += encode_entry(e).size();
  const std::string wire = encode_message(two);
  CHECK(wire.find("PAYLOAD-LENGTH: " + std::to_string(expected)) !=
        std::string::npos);

  ProbeMessage non_append = sample_discovery();
  non_append.header.flag_payload_append = false;
  CHECK_THROWS_AS(append_entry(non_append, PayloadEntry{"MB1", kNone, kNone}),
                  AppendOnNonAppendProbe);
}

TEST_CASE("base64 survives arbitrary bytes") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::uint8_t> data(rng.below(70));
    rng.fill(data);
    CHECK(b64_decode(b64_encode(data)) == data);
  }
  CHECK_THROWS_AS(b64_decode("abc"), BadValueError);
  CHECK_THROWS_AS(b64_decode("a=bc"), BadValueError);
}
