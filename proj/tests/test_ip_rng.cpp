/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "doctest.h"
#include "topoman/ip.hpp"
#include "topoman/rng.hpp"

using namespace topoman;

TEST_CASE("ipv4 parse and format round-trip") {
  auto ip = Ipv4::parse("10.0.1.200");
  REQUIRE(ip.has_value());
  CHECK(ip->to_string() == "10.0.1.200");
  CHECK(Ipv4::parse("10.0.1").has_value() == false);
  CHECK(Ipv4::parse("10.0.1.256").has_value() == false);
  CHECK(Ipv4::parse("10.0.1.2x").has_value() == false);
}

TEST_CASE("subnet membership and containment") {
  Subnet net = *Subnet::parse("10.1.0.0/16");
  CHECK(net.contains(*Ipv4::parse("10.1.5.5")));
  CHECK(!net.contains(*Ipv4::parse("10.2.0.1")));
  CHECK(net.contains_subnet(*Subnet::parse("10.1.4.0/30")));
  CHECK(!net.contains_subnet(*Subnet::parse("10.0.0.0/8")));
  CHECK(Subnet::parse("10.0.0.0/40").has_value() == false);
  CHECK(Subnet::parse("10.0.0.0").has_value() == false);

  Subnet a = *Subnet::parse("10.0.0.1/30");
  Subnet b = *Subnet::parse("10.0.0.2/30");
  CHECK(a.same_network(b));
}

TEST_CASE("rng streams are deterministic and forks are independent") {
  Rng a(42), b(42);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng base(7);
  Rng f1 = base.fork(1);
  Rng f2 = base.fork(2);
  CHECK(f1.next_u64() != f2.next_u64());

  Rng g1 = Rng(7).fork("MB001");
  Rng g2 = Rng(7).fork("MB001");
  CHECK(g1.next_u64() == g2.next_u64());

  Rng h(9);
  for (int i = 0; i < 1000; ++i) CHECK(h.below(10) < 10);
}
