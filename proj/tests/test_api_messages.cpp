/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "doctest.h"
#include "topoman/api_messages.hpp"

using namespace topoman;

TEST_CASE("probe-init wire format round-trips") {
  ProbeInit cmd;
  cmd.dest_device = "MB009";
  cmd.src_interface = "eth1";
  cmd.dest_interfaces = {
      ProbeInitDest{"eth0", *Ipv4::parse("10.0.3.2"), std::nullopt},
      ProbeInitDest{"eth1", *Ipv4::parse("10.0.7.2"), 0xdeadbeef01020304ull}};
  cmd.payload_append = true;
  cmd.header_sec = true;
  cmd.ttl_max = 32;

  const std::string wire = encode_api(to_api(cmd));
  CHECK(wire ==
        "API: PROBE-INIT\n"
        "DEST-DEVICE: MB009\n"
        "SRC-INTERFACE: eth1\n"
        "DEST-INTERFACE: name=eth0;ip=10.0.3.2\n"
        "DEST-INTERFACE: name=eth1;ip=10.0.7.2;token=deadbeef01020304\n"
        "FLAGS: APPEND,HDRSEC\n"
        "TTL-MAX: 32\n");

  ProbeInit back = probe_init_from_api(decode_api(wire));
  CHECK(back.dest_device == cmd.dest_device);
  CHECK(back.src_interface == cmd.src_interface);
  REQUIRE(back.dest_interfaces.size() == 2);
  CHECK(back.dest_interfaces[1].token == cmd.dest_interfaces[1].token);
  CHECK(back.payload_append);
  CHECK(back.header_sec);
  CHECK(!back.payload_sec);
}

TEST_CASE("probe-update carries per-hop entries or a terminal trace") {
  ProbeUpdate report;
  report.pair = PairAddrs{*Ipv4::parse("10.0.1.1"), *Ipv4::parse("10.0.9.1")};
  report.ttl = 2;
  report.terminal = true;
  report.entries = {PayloadEntry{"MB1", kNone, "eth1"},
                    PayloadEntry{"MB2", "eth0", "eth1"},
                    PayloadEntry{"MB3", "eth0", kNone}};

  const std::string wire = encode_api(to_api(report));
  CHECK(wire ==
        "API: PROBE-UPDATE\n"
        "PROBE-PAIR-ID: 10.0.1.1->10.0.9.1\n"
        "TTL: 2\n"
        "TERMINAL: 1\n"
        "ENTRY: device=MB1;in=NONE;out=eth1\n"
        "ENTRY: device=MB2;in=eth0;out=eth1\n"
        "ENTRY: device=MB3;in=eth0;out=NONE\n");

  ProbeUpdate back = probe_update_from_api(decode_api(wire));
  CHECK(back.entries == report.entries);
  CHECK(back.terminal);
  CHECK(back.ttl == 2);
  CHECK(!back.sealed);
}

TEST_CASE("update-outinterface round-trips") {
  UpdateOutInterface msg;
  msg.pair = PairToken{0x0102030405060708ull};
  msg.ttl = 3;
  msg.device = "MB004";
  msg.actual_out = "eth2";
  UpdateOutInterface back =
      update_out_interface_from_api(decode_api(encode_api(to_api(msg))));
  CHECK(back.device == "MB004");
  CHECK(back.actual_out == "eth2");
  CHECK(back.ttl == 3);
  CHECK(std::get<PairToken>(back.pair).value == 0x0102030405060708ull);
}

TEST_CASE("resolve-probeid request and both response shapes") {
  ResolveProbeIdRequest req{42};
  auto back = resolve_request_from_api(decode_api(encode_api(to_api(req))));
  CHECK(back.token == 42);

  ResolveProbeIdResponse ok{
      PairAddrs{*Ipv4::parse("10.0.0.1"), *Ipv4::parse("10.0.0.2")}};
  auto ok_back = resolve_response_from_api(decode_api(encode_api(to_api(ok))));
  REQUIRE(ok_back.pair.has_value());
  CHECK(ok_back.pair->dst == *Ipv4::parse("10.0.0.2"));

  ResolveProbeIdResponse unknown{std::nullopt};
  auto un_back =
      resolve_response_from_api(decode_api(encode_api(to_api(unknown))));
  CHECK(!un_back.pair.has_value());
}

TEST_CASE("device capabilities round-trip the graybox view") {
  Middlebox mb;
  mb.id = "MB7";
  mb.kind = MbKind::load_balancer;
  mb.dynamic_egress = true;
  mb.interfaces = {Interface{"eth0", *Ipv4::parse("10.0.0.1"), 30},
                   Interface{"eth1", *Ipv4::parse("10.0.0.5"), 30}};
  mb.routes = {RouteEntry{*Subnet::parse("10.1.0.0/16"), "eth0",
                          *Ipv4::parse("10.0.0.2")},
               RouteEntry{*Subnet::parse("10.2.0.0/16"), "eth1", std::nullopt}};

  DeviceCapabilities back = device_capabilities_from_api(
      decode_api(encode_api(to_api(DeviceCapabilities{mb}))));
  CHECK(back.device.id == "MB7");
  CHECK(back.device.kind == MbKind::load_balancer);
  CHECK(back.device.dynamic_egress);
  REQUIRE(back.device.interfaces.size() == 2);
  CHECK(back.device.interfaces[1].ip == *Ipv4::parse("10.0.0.5"));
  REQUIRE(back.device.routes.size() == 2);
  CHECK(back.device.routes[0].next_hop == *Ipv4::parse("10.0.0.2"));
  CHECK(!back.device.routes[1].next_hop.has_value());
}

TEST_CASE("heartbeat round-trips") {
  Heartbeat hb{"MB1", "UP", 42};
  Heartbeat back = heartbeat_from_api(decode_api(encode_api(to_api(hb))));
  CHECK(back.device == "MB1");
  CHECK(back.status == "UP");
  CHECK(back.time == 42);
}

TEST_CASE("api decode rejects garbage") {
  CHECK_THROWS_AS(decode_api(""), MalformedHeaderError);
  CHECK_THROWS_AS(decode_api("HELLO: world\n"), MalformedHeaderError);
  CHECK_THROWS_AS(decode_api("API PROBE-INIT\n"), MalformedHeaderError);
}
