/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "topoman/ip.hpp"

#include <cstdio>

namespace topoman {

std::string Ipv4::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (value >> 24) & 0xff,
                (value >> 16) & 0xff, (value >> 8) & 0xff, value & 0xff);
  return buf;
}

std::optional<Ipv4> Ipv4::parse(const std::string& text) {
  unsigned a = 0, b = 0, c = 0, d = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &tail) != 4)
    return std::nullopt;
  if (a > 255 || b > 255 || c > 255 || d > 255) return std::nullopt;
  return Ipv4{(a << 24) | (b << 16) | (c << 8) | d};
}

namespace {
std::uint32_t mask_for(int prefix_len) {
  if (prefix_len <= 0) return 0;
  if (prefix_len >= 32) return 0xffffffffu;
  return ~((1u << (32 - prefix_len)) - 1);
}
}  // namespace

Ipv4 Subnet::network() const { return Ipv4{addr.value & mask_for(prefix_len)}; }

bool Subnet::contains(Ipv4 ip) const {
  return (ip.value & mask_for(prefix_len)) == network().value;
}

bool Subnet::contains_subnet(const Subnet& other) const {
  return prefix_len <= other.prefix_len && contains(other.network());
}

bool Subnet::same_network(const Subnet& other) const {
  return prefix_len == other.prefix_len && network() == other.network();
}

std::string Subnet::to_string() const {
  return network().to_string() + "/" + std::to_string(prefix_len);
}

std::optional<Subnet> Subnet::parse(const std::string& text) {
  auto slash = text.find('/');
  if (slash == std::string::npos) return std::nullopt;
  auto ip = Ipv4::parse(text.substr(0, slash));
  if (!ip) return std::nullopt;
  const std::string plen = text.substr(slash + 1);
  if (plen.empty() || plen.size() > 2) return std::nullopt;
  for (char ch : plen)
    if (ch < '0' || ch > '9') return std::nullopt;
  int p = std::stoi(plen);
  if (p < 0 || p > 32) return std::nullopt;
  return Subnet{*ip, p};
}

}  // namespace topoman
