/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#ifndef TOPOMAN_IP_HPP
#define TOPOMAN_IP_HPP

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace topoman {

/// IPv4 address kept in host byte order.
struct Ipv4 {
  std::uint32_t value = 0;

  auto operator<=>(const Ipv4&) const = default;

  std::string to_string() const;
  static std::optional<Ipv4> parse(const std::string& text);
};

/// (address, prefix) pair; the address is masked on demand, not on construction.
struct Subnet {
  Ipv4 addr;
  int prefix_len = 0;

  Ipv4 network() const;
  bool contains(Ipv4 ip) const;
  bool contains_subnet(const Subnet& other) const;
  /// Equality of the covered range: same network and same prefix length.
  bool same_network(const Subnet& other) const;

  std::string to_string() const;
  static std::optional<Subnet> parse(const std::string& text);

  auto operator<=>(const Subnet&) const = default;
};

}  // namespace topoman

#endif
