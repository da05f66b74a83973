/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "doctest.h"
#include "topoman/mb_agent.hpp"

using namespace topoman;

namespace {

PublicKey test_pub() {
  Rng rng(1);
  return ControllerKeyPair::generate(rng).public_key;
}

/// Source middlebox with two uplinks: 10.1.0.0/16 routes via eth1,
/// 10.2.0.0/16 via eth2.
Middlebox source_device() {
  Middlebox mb;
  mb.id = "SRC";
  mb.interfaces = {Interface{"eth1", *Ipv4::parse("10.0.0.1"), 30},
                   Interface{"eth2", *Ipv4::parse("10.0.0.5"), 30}};
  mb.routes = {RouteEntry{*Subnet::parse("10.1.0.0/16"), "eth1",
                          *Ipv4::parse("10.0.0.2")},
               RouteEntry{*Subnet::parse("10.2.0.0/16"), "eth2",
                          *Ipv4::parse("10.0.0.6")}};
  return mb;
}

ProbeInit init_for(std::vector<ProbeInitDest> dests, bool append = false) {
  ProbeInit cmd;
  cmd.dest_device = "DST";
  cmd.src_interface = "eth1";
  cmd.dest_interfaces = std::move(dests);
  cmd.payload_append = append;
  return cmd;
}

}  // namespace

TEST_CASE("probe-init collapses destinations sharing an egress") {
  MbAgent agent(source_device(), test_pub());
  Rng lb(1), crypto(2);

  SUBCASE("both destination interfaces behind eth1: one probe") {
    auto probes = agent.handle_probe_init(
        init_for({{"a", *Ipv4::parse("10.1.3.2"), {}},
                  {"b", *Ipv4::parse("10.1.7.2"), {}}}),
        lb, crypto);
    REQUIRE(probes.size() == 1);
    CHECK(probes[0].out_iface == "eth1");
    // Representative is the first listed destination.
    auto pair = std::get<PairAddrs>(probes[0].msg.header.probe_pair_id);
    CHECK(pair.dst == *Ipv4::parse("10.1.3.2"));
    CHECK(pair.src == *Ipv4::parse("10.0.0.1"));
  }
  SUBCASE("alternate routes: two probes") {
    auto probes = agent.handle_probe_init(
        init_for({{"a", *Ipv4::parse("10.1.3.2"), {}},
                  {"b", *Ipv4::parse("10.2.3.2"), {}}}),
        lb, crypto);
    REQUIRE(probes.size() == 2);
    CHECK(probes[0].out_iface == "eth1");
    CHECK(probes[1].out_iface == "eth2");
  }
  SUBCASE("unreachable destination") {
    CHECK_THROWS_AS(agent.handle_probe_init(
                        init_for({{"a", *Ipv4::parse("172.16.0.1"), {}}}), lb,
                        crypto),
                    NoRouteToDestination);
  }
  SUBCASE("source probes start at ttl 0 and advance before leaving") {
    auto probes = agent.handle_probe_init(
        init_for({{"a", *Ipv4::parse("10.1.3.2"), {}}}), lb, crypto);
    REQUIRE(probes.size() == 1);
    CHECK(probes[0].msg.header.probe_ttl == 1);  // advanced at the source hop
    REQUIRE(probes[0].msg.entries.size() == 1);
    CHECK(probes[0].msg.entries[0].in_interface == kNone);
    CHECK(probes[0].msg.entries[0].out_interface == "eth1");
    REQUIRE(probes[0].source_report.has_value());
    CHECK(probes[0].source_report->ttl == 0);
  }
}

TEST_CASE("incoming discovery probes") {
  MbAgent agent(source_device(), test_pub());
  Rng lb(1), crypto(2);

  ProbeMessage msg;
  msg.header.probe_ttl = 1;
  msg.header.probe_pair_id =
      PairAddrs{*Ipv4::parse("10.9.0.1"), *Ipv4::parse("10.1.3.2")};

  SUBCASE("append mode: exactly one new payload entry, prefix preserved") {
    msg.header.flag_payload_append = true;
    msg.entries = {PayloadEntry{"A", kNone, "eth9"}};
    auto action = agent.handle_incoming_probe(msg, "eth2", lb, crypto);
    auto* fwd = std::get_if<AppendAndForward>(&action);
    REQUIRE(fwd != nullptr);
    REQUIRE(fwd->forward.msg.entries.size() == 2);
    CHECK(fwd->forward.msg.entries[0] == msg.entries[0]);
    CHECK(fwd->forward.msg.entries[1].device == "SRC");
    CHECK(fwd->forward.msg.entries[1].in_interface == "eth2");
    CHECK(fwd->forward.msg.entries[1].out_interface == "eth1");
    CHECK(fwd->forward.msg.header.probe_ttl == 2);
  }
  SUBCASE("per-hop mode: up-call plus forward, payload replaced") {
    msg.entries = {PayloadEntry{"A", kNone, "eth9"}};
    auto action = agent.handle_incoming_probe(msg, "eth2", lb, crypto);
    auto* up = std::get_if<UpCallAndForward>(&action);
    REQUIRE(up != nullptr);
    CHECK(up->report.ttl == 1);  // observed, pre-advance
    REQUIRE(up->report.entries.size() == 1);
    CHECK(up->report.entries[0].device == "SRC");
    REQUIRE(up->forward.msg.entries.size() == 1);
    CHECK(up->forward.msg.entries[0].device == "SRC");
  }
  SUBCASE("destination device terminates without forwarding") {
    msg.header.probe_pair_id =
        PairAddrs{*Ipv4::parse("10.9.0.1"), *Ipv4::parse("10.0.0.5")};
    msg.header.flag_payload_append = true;
    msg.entries = {PayloadEntry{"A", kNone, "eth9"}};
    auto action = agent.handle_incoming_probe(msg, "eth1", lb, crypto);
    auto* term = std::get_if<TerminalUpCall>(&action);
    REQUIRE(term != nullptr);
    CHECK(term->report.terminal);
    REQUIRE(term->report.entries.size() == 2);
    CHECK(term->report.entries[1].device == "SRC");
    CHECK(term->report.entries[1].out_interface == kNone);
  }
  SUBCASE("ttl threshold drops the probe") {
    agent.set_ttl_max(2);
    msg.entries = {PayloadEntry{"A", kNone, "eth9"}};
    auto action = agent.handle_incoming_probe(msg, "eth2", lb, crypto);
    CHECK(std::get_if<DropProbe>(&action) != nullptr);
  }
  SUBCASE("unresolvable token drops with an alert") {
    msg.header.probe_pair_id = PairToken{12345};
    agent.set_resolver([](const ResolveProbeIdRequest&) {
      return ResolveProbeIdResponse{std::nullopt};
    });
    auto action = agent.handle_incoming_probe(msg, "eth2", lb, crypto);
    auto* drop = std::get_if<DropProbe>(&action);
    REQUIRE(drop != nullptr);
    CHECK(drop->alert);
  }
}

TEST_CASE("output interface computation") {
  SUBCASE("non-dynamic device never needs a correction") {
    MbAgent agent(source_device(), test_pub());
    Rng lb(3);
    auto out = agent.compute_output_interface(*Ipv4::parse("10.1.0.9"),
                                              EgressMode::RoutePredict, lb);
    REQUIRE(out.has_value());
    CHECK(out->payload_out == "eth1");
    CHECK(out->actual_out == "eth1");
    CHECK(!out->correction_needed);
  }

  Middlebox lb_dev = source_device();
  lb_dev.id = "LB";
  lb_dev.kind = MbKind::load_balancer;
  lb_dev.dynamic_egress = true;
  // Two equal-prefix candidates for the same destinations.
  lb_dev.routes = {RouteEntry{*Subnet::parse("10.1.0.0/16"), "eth1",
                              *Ipv4::parse("10.0.0.2")},
                   RouteEntry{*Subnet::parse("10.1.0.0/16"), "eth2",
                              *Ipv4::parse("10.0.0.6")}};

  SUBCASE("dynamic egress draws among candidates; mismatch raises a correction") {
    MbAgent agent(lb_dev, test_pub());
    int corrections = 0, agreements = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng lb(seed);
      auto out = agent.compute_output_interface(*Ipv4::parse("10.1.0.9"),
                                                EgressMode::RoutePredict, lb);
      REQUIRE(out.has_value());
      if (out->correction_needed) {
        ++corrections;
        CHECK(out->actual_out == "eth2");   // the only alternate
        CHECK(out->payload_out == kPending);
      } else {
        ++agreements;
        CHECK(out->actual_out == "eth1");  // the longest-prefix prediction
        CHECK(out->payload_out == "eth1");
      }
    }
    CHECK(corrections > 0);
    CHECK(agreements > 0);
  }
  SUBCASE("static steer pins the computed interface in 100 of 100 trials") {
    MbAgent agent(lb_dev, test_pub());
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng lb(seed);
      auto out = agent.compute_output_interface(*Ipv4::parse("10.1.0.9"),
                                                EgressMode::StaticSteer, lb);
      REQUIRE(out.has_value());
      CHECK(out->actual_out == "eth1");
      CHECK(!out->correction_needed);
    }
  }
  SUBCASE("no route") {
    MbAgent agent(lb_dev, test_pub());
    Rng lb(1);
    CHECK(!agent
               .compute_output_interface(*Ipv4::parse("192.168.0.1"),
                                         EgressMode::RoutePredict, lb)
               .has_value());
  }
}

TEST_CASE("path checker forwarding") {
  MbAgent agent(source_device(), test_pub());
  Rng crypto(2);

  ProbeMessage msg;
  msg.header.path_id = 3;
  msg.header.probe_ttl = 1;
  msg.header.flag_payload_append = true;
  msg.header.probe_pair_id =
      PairAddrs{*Ipv4::parse("10.9.0.1"), *Ipv4::parse("10.2.3.2")};
  msg.entries = {PayloadEntry{"A", kNone, "eth0"}};

  SUBCASE("installed rule steers the probe") {
    agent.install_path_rule(3, "eth2");
    auto action = agent.handle_path_checker(msg, "eth1", crypto);
    auto* fwd = std::get_if<ForwardPath>(&action);
    REQUIRE(fwd != nullptr);
    CHECK(fwd->forward.out_iface == "eth2");
    CHECK(fwd->forward.msg.entries.size() == 2);
  }
  SUBCASE("missing rule breaks the path") {
    auto action = agent.handle_path_checker(msg, "eth1", crypto);
    auto* broken = std::get_if<PathBroken>(&action);
    REQUIRE(broken != nullptr);
    CHECK(broken->device == "SRC");
  }
  SUBCASE("local rule terminates with the trace") {
    agent.install_path_rule(3, kLocalDeliver);
    auto action = agent.handle_path_checker(msg, "eth1", crypto);
    auto* term = std::get_if<PathTerminal>(&action);
    REQUIRE(term != nullptr);
    CHECK(term->report.entries.size() == 2);
    CHECK(term->report.entries.back().device == "SRC");
  }
}

TEST_CASE("heartbeat messages carry the tick time") {
  MbAgent agent(source_device(), test_pub());
  Heartbeat hb = agent.heartbeat_tick(42);
  CHECK(hb.device == "SRC");
  CHECK(hb.status == "UP");
  CHECK(hb.time == 42);
}
