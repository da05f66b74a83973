/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "topoman/probe_protocol.hpp"

#include <array>
#include <cstdio>
#include <map>
#include <sstream>

namespace topoman {

namespace {

constexpr char kMagicDiscovery[] = "TOPOMAN/1 DISCOVERY";
constexpr char kMagicPathCheck[] = "TOPOMAN/1 PATHCHECK";

const char* kHeaderKeys[] = {"PROBE-TTL", "PATH-ID", "PAYLOAD-LENGTH", "FLAGS",
                             "PROBE-PAIR-ID"};

std::uint32_t parse_u32(const std::string& value, const char* what) {
  if (value.empty()) throw BadValueError(std::string(what) + ": empty value");
  std::uint64_t out = 0;
  for (char c : value) {
    if (c < '0' || c > '9')
      throw BadValueError(std::string(what) + ": not a number: " + value);
    out = out * 10 + static_cast<std::uint64_t>(c - '0');
    if (out > 0xffffffffull)
      throw BadValueError(std::string(what) + ": out of range: " + value);
  }
  return static_cast<std::uint32_t>(out);
}

std::string flags_to_string(const ProbeHeader& h) {
  std::string out;
  auto add = [&out](const char* tok) {
    if (!out.empty()) out += ',';
    out += tok;
  };
  if (h.flag_payload_append) add("APPEND");
  if (h.flag_header_sec()) add("HDRSEC");
  if (h.flag_payload_sec) add("PAYSEC");
  if (out.empty()) out = kNone;
  return out;
}

struct ParsedFlags {
  bool append = false;
  bool hdrsec = false;
  bool paysec = false;
};

ParsedFlags parse_flags(const std::string& value) {
  ParsedFlags out;
  if (value == kNone) return out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    auto comma = value.find(',', pos);
    std::string tok = value.substr(pos, comma == std::string::npos
                                            ? std::string::npos
                                            : comma - pos);
    if (tok == "APPEND")
      out.append = true;
    else if (tok == "HDRSEC")
      out.hdrsec = true;
    else if (tok == "PAYSEC")
      out.paysec = true;
    else
      throw BadValueError("FLAGS: unknown token: " + tok);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string token_to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t hex_to_token(const std::string& text) {
  if (text.size() != 16)
    throw BadValueError("PROBE-PAIR-ID: token must be 16 hex digits: " + text);
  std::uint64_t out = 0;
  for (char c : text) {
    out <<= 4;
    if (c >= '0' && c <= '9')
      out |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f')
      out |= static_cast<std::uint64_t>(c - 'a' + 10);
    else
      throw BadValueError("PROBE-PAIR-ID: bad hex digit in token: " + text);
  }
  return out;
}

std::string encode_payload(const ProbeMessage& msg) {
  std::string out;
  if (msg.header.flag_payload_sec) {
    for (const auto& seg : msg.segments) out += encode_segment(seg);
  } else {
    for (const auto& e : msg.entries) out += encode_entry(e);
  }
  return out;
}

void check_invariants(const ProbeMessage& msg) {
  if (msg.header.flag_payload_sec) {
    if (!msg.entries.empty())
      throw BadValueError("sealed probe must not carry clear entries");
  } else {
    if (!msg.segments.empty())
      throw BadValueError("clear probe must not carry sealed segments");
    if (!msg.header.flag_payload_append && msg.entries.size() > 1)
      throw BadValueError("non-append probe carries more than one entry");
  }
}

}  // namespace

std::string pair_id_to_string(const ProbePairId& id) {
  if (const auto* clear = std::get_if<PairAddrs>(&id))
    return clear->src.to_string() + "->" + clear->dst.to_string();
  return token_to_hex(std::get<PairToken>(id).value);
}

ProbeKind classify_probe(const ProbeHeader& header) {
  return header.path_id == 0 ? ProbeKind::Discovery : ProbeKind::PathChecker;
}

std::optional<ProbeHeader> advance_ttl(const ProbeHeader& header,
                                       std::uint32_t max_threshold) {
  if (header.probe_ttl + 1 >= max_threshold) return std::nullopt;
  ProbeHeader out = header;
  out.probe_ttl += 1;
  return out;
}

std::string encode_entry(const PayloadEntry& entry) {
  return "device=" + entry.device + ";in=" + entry.in_interface +
         ";out=" + entry.out_interface + "\n";
}

PayloadEntry decode_entry_line(const std::string& line) {
  PayloadEntry out;
  std::size_t pos = 0;
  auto take = [&](const char* key) {
    std::string prefix = std::string(key) + "=";
    if (line.compare(pos, prefix.size(), prefix) != 0)
      throw BadValueError("payload entry: expected " + prefix + " in: " + line);
    pos += prefix.size();
    auto semi = line.find(';', pos);
    std::string value = line.substr(
        pos, semi == std::string::npos ? std::string::npos : semi - pos);
    pos = semi == std::string::npos ? line.size() : semi + 1;
    if (value.empty())
      throw BadValueError("payload entry: empty " + std::string(key));
    return value;
  };
  out.device = take("device");
  out.in_interface = take("in");
  out.out_interface = take("out");
  if (pos != line.size())
    throw BadValueError("payload entry: trailing data in: " + line);
  return out;
}

std::string encode_segment(const SealedPayload& seg) {
  return "seg=" + b64_encode(seg.wrapped_blob) + ":" +
         b64_encode(seg.ciphertext) + "\n";
}

namespace {
SealedPayload decode_segment_line(const std::string& line) {
  if (line.rfind("seg=", 0) != 0)
    throw BadValueError("sealed payload: expected seg= line: " + line);
  auto colon = line.find(':', 4);
  if (colon == std::string::npos)
    throw BadValueError("sealed payload: missing ':' separator");
  SealedPayload out;
  out.wrapped_blob = b64_decode(line.substr(4, colon - 4));
  out.ciphertext = b64_decode(line.substr(colon + 1));
  return out;
}
}  // namespace

std::string encode_message(const ProbeMessage& msg) {
  check_invariants(msg);
  const std::string payload = encode_payload(msg);
  std::string out;
  out += classify_probe(msg.header) == ProbeKind::Discovery ? kMagicDiscovery
                                                            : kMagicPathCheck;
  out += '\n';
  out += "PROBE-TTL: " + std::to_string(msg.header.probe_ttl) + "\n";
  out += "PATH-ID: " + std::to_string(msg.header.path_id) + "\n";
  out += "PAYLOAD-LENGTH: " + std::to_string(payload.size()) + "\n";
  out += "FLAGS: " + flags_to_string(msg.header) + "\n";
  out += "PROBE-PAIR-ID: " + pair_id_to_string(msg.header.probe_pair_id) + "\n";
  out += '\n';
  out += payload;
  return out;
}

ProbeMessage decode_message(const std::string& bytes) {
  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string> {
    if (pos > bytes.size()) return std::nullopt;
    auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) return std::nullopt;
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };

  auto magic = next_line();
  if (!magic) throw MalformedHeaderError("missing protocol line");
  bool is_discovery;
  if (*magic == kMagicDiscovery)
    is_discovery = true;
  else if (*magic == kMagicPathCheck)
    is_discovery = false;
  else
    throw MalformedHeaderError("unrecognized protocol line: " + *magic);

  std::map<std::string, std::string> fields;
  while (true) {
    auto line = next_line();
    if (!line) throw MalformedHeaderError("header not terminated by blank line");
    if (line->empty()) break;
    auto colon = line->find(": ");
    if (colon == std::string::npos)
      throw MalformedHeaderError("header line without ': ': " + *line);
    std::string key = line->substr(0, colon);
    std::string value = line->substr(colon + 2);
    bool known = false;
    for (const char* k : kHeaderKeys) known = known || key == k;
    if (!known) throw MalformedHeaderError("unknown header key: " + key);
    if (!fields.emplace(key, value).second)
      throw MalformedHeaderError("duplicate header key: " + key);
  }
  for (const char* k : kHeaderKeys)
    if (!fields.count(k))
      throw MalformedHeaderError("missing header key: " + std::string(k));

  ProbeMessage msg;
  msg.header.probe_ttl = parse_u32(fields["PROBE-TTL"], "PROBE-TTL");
  msg.header.path_id = parse_u32(fields["PATH-ID"], "PATH-ID");
  if (is_discovery != (msg.header.path_id == 0))
    throw BadValueError("protocol line disagrees with PATH-ID");
  const std::uint32_t declared =
      parse_u32(fields["PAYLOAD-LENGTH"], "PAYLOAD-LENGTH");
  ParsedFlags flags = parse_flags(fields["FLAGS"]);
  msg.header.flag_payload_append = flags.append;
  msg.header.flag_payload_sec = flags.paysec;

  const std::string& pair = fields["PROBE-PAIR-ID"];
  if (flags.hdrsec) {
    msg.header.probe_pair_id = PairToken{hex_to_token(pair)};
  } else {
    auto arrow = pair.find("->");
    if (arrow == std::string::npos)
      throw BadValueError("PROBE-PAIR-ID: expected src->dst: " + pair);
    auto src = Ipv4::parse(pair.substr(0, arrow));
    auto dst = Ipv4::parse(pair.substr(arrow + 2));
    if (!src || !dst)
      throw BadValueError("PROBE-PAIR-ID: bad address: " + pair);
    msg.header.probe_pair_id = PairAddrs{*src, *dst};
  }

  const std::string payload = bytes.substr(pos);
  if (payload.size() != declared)
    throw LengthMismatchError("PAYLOAD-LENGTH says " + std::to_string(declared) +
                              " but payload is " +
                              std::to_string(payload.size()) + " bytes");

  std::size_t p = 0;
  while (p < payload.size()) {
    auto nl = payload.find('\n', p);
    if (nl == std::string::npos)
      throw BadValueError("payload line not newline-terminated");
    std::string line = payload.substr(p, nl - p);
    p = nl + 1;
    if (msg.header.flag_payload_sec)
      msg.segments.push_back(decode_segment_line(line));
    else
      msg.entries.push_back(decode_entry_line(line));
  }
  check_invariants(msg);
  return msg;
}

ProbeMessage append_entry(const ProbeMessage& msg, const PayloadEntry& entry) {
  if (!msg.header.flag_payload_append)
    throw AppendOnNonAppendProbe("append_entry on a non-append probe");
  if (msg.header.flag_payload_sec)
    throw BadValueError("append_entry on a sealed probe; seal the entry first");
  ProbeMessage out = msg;
  out.entries.push_back(entry);
  return out;
}

namespace {
constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string b64_encode(const std::vector<std::uint8_t>& data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= data.size()) {
    std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += kB64Alphabet[(v >> 6) & 63];
    out += kB64Alphabet[v & 63];
    i += 3;
  }
  const std::size_t rem = data.size() - i;
  if (rem == 1) {
    std::uint32_t v = data[i] << 16;
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += "==";
  } else if (rem == 2) {
    std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += kB64Alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> b64_decode(const std::string& text) {
  if (text.size() % 4 != 0)
    throw BadValueError("base64: length not a multiple of 4");
  static const auto value_of = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    for (int i = 0; i < 64; ++i)
      t[static_cast<unsigned char>(kB64Alphabet[i])] = i;
    return t;
  }();
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
      char c = text[i + k];
      if (c == '=') {
        if (i + 4 != text.size() || k < 2)
          throw BadValueError("base64: misplaced padding");
        ++pad;
        v <<= 6;
        continue;
      }
      if (pad > 0) throw BadValueError("base64: data after padding");
      int d = value_of[static_cast<unsigned char>(c)];
      if (d < 0) throw BadValueError("base64: bad character");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

}  // namespace topoman
