/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include "topoman/payload_security.hpp"

#include <openssl/evp.h>
#include <sodium.h>

#include <cstring>
#include <mutex>

namespace topoman {

namespace {

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw std::runtime_error("sodium_init failed");
  });
}

constexpr std::size_t kSymKeyLen = 32;   // AES-256
constexpr std::size_t kNonceLen = 16;    // CTR mode IV
constexpr std::size_t kDigestLen = crypto_hash_sha256_BYTES;
constexpr std::size_t kWrappedPlainLen = kSymKeyLen + kDigestLen;

/// AES-256-CTR, length preserving; decrypt is the same operation.
std::vector<std::uint8_t> aes256ctr(std::span<const std::uint8_t> input,
                                    const std::uint8_t* key,
                                    const std::uint8_t* iv) {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
  std::vector<std::uint8_t> out(input.size());
  int len = 0;
  int ok = EVP_EncryptInit_ex(ctx, EVP_aes_256_ctr(), nullptr, key, iv);
  if (ok == 1 && !input.empty())
    ok = EVP_EncryptUpdate(ctx, out.data(), &len, input.data(),
                           static_cast<int>(input.size()));
  int fin = 0;
  if (ok == 1) ok = EVP_EncryptFinal_ex(ctx, out.data() + len, &fin);
  EVP_CIPHER_CTX_free(ctx);
  if (ok != 1) throw std::runtime_error("AES-256-CTR failed");
  out.resize(static_cast<std::size_t>(len + fin));
  return out;
}

std::array<std::uint8_t, kDigestLen> digest_over(
    const AuthenticatedHeaderFields& hdr,
    const std::vector<std::uint8_t>& ciphertext) {
  const std::string canon = hdr.canonical();
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  crypto_hash_sha256_update(
      &st, reinterpret_cast<const unsigned char*>(canon.data()), canon.size());
  crypto_hash_sha256_update(&st, ciphertext.data(), ciphertext.size());
  std::array<std::uint8_t, kDigestLen> out{};
  crypto_hash_sha256_final(&st, out.data());
  return out;
}

}  // namespace

ControllerKeyPair ControllerKeyPair::generate(Rng& rng) {
  ensure_sodium();
  std::array<std::uint8_t, crypto_box_SEEDBYTES> seed{};
  rng.fill(seed);
  ControllerKeyPair kp;
  crypto_box_seed_keypair(kp.public_key.data(), kp.private_key.data(),
                          seed.data());
  return kp;
}

std::string AuthenticatedHeaderFields::canonical() const {
  std::string flags;
  auto add = [&flags](const char* tok) {
    if (!flags.empty()) flags += ',';
    flags += tok;
  };
  if (flag_payload_append) add("APPEND");
  if (flag_header_sec()) add("HDRSEC");
  if (flag_payload_sec) add("PAYSEC");
  if (flags.empty()) flags = kNone;
  return "FLAGS: " + flags + "\nPROBE-PAIR-ID: " +
         pair_id_to_string(probe_pair_id) + "\n";
}

AuthenticatedHeaderFields AuthenticatedHeaderFields::from_header(
    const ProbeHeader& h) {
  AuthenticatedHeaderFields out;
  out.probe_pair_id = h.probe_pair_id;
  out.flag_payload_sec = h.flag_payload_sec;
  out.flag_payload_append = h.flag_payload_append;
  return out;
}

SealedPayload seal_payload(std::span<const std::uint8_t> plaintext,
                           const AuthenticatedHeaderFields& hdr,
                           const PublicKey& pub, Rng& rng) {
  ensure_sodium();
  std::array<std::uint8_t, kSymKeyLen> key{};
  std::array<std::uint8_t, kNonceLen> iv{};
  rng.fill(key);
  rng.fill(iv);

  SealedPayload out;
  out.ciphertext.assign(iv.begin(), iv.end());
  auto body = aes256ctr(plaintext, key.data(), iv.data());
  out.ciphertext.insert(out.ciphertext.end(), body.begin(), body.end());

  const auto digest = digest_over(hdr, out.ciphertext);
  std::array<std::uint8_t, kWrappedPlainLen> wrapped_plain{};
  std::memcpy(wrapped_plain.data(), key.data(), kSymKeyLen);
  std::memcpy(wrapped_plain.data() + kSymKeyLen, digest.data(), kDigestLen);

  // Sealed box with an rng-derived ephemeral key pair. The layout matches
  // crypto_box_seal (ephemeral pk || box with nonce = blake2b(epk || pk)),
  // so crypto_box_seal_open recovers it; drawing the ephemeral seed from the
  // caller's stream keeps sealing reproducible under a fixed seed.
  std::array<std::uint8_t, crypto_box_SEEDBYTES> eseed{};
  rng.fill(eseed);
  std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> epk{};
  std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> esk{};
  crypto_box_seed_keypair(epk.data(), esk.data(), eseed.data());

  std::array<std::uint8_t, crypto_box_NONCEBYTES> nonce{};
  crypto_generichash_state gh;
  crypto_generichash_init(&gh, nullptr, 0, nonce.size());
  crypto_generichash_update(&gh, epk.data(), epk.size());
  crypto_generichash_update(&gh, pub.data(), pub.size());
  crypto_generichash_final(&gh, nonce.data(), nonce.size());

  out.wrapped_blob.resize(crypto_box_PUBLICKEYBYTES + crypto_box_MACBYTES +
                          kWrappedPlainLen);
  std::memcpy(out.wrapped_blob.data(), epk.data(), epk.size());
  if (crypto_box_easy(out.wrapped_blob.data() + crypto_box_PUBLICKEYBYTES,
                      wrapped_plain.data(), wrapped_plain.size(), nonce.data(),
                      pub.data(), esk.data()) != 0)
    throw std::runtime_error("crypto_box_easy failed");
  sodium_memzero(key.data(), key.size());
  sodium_memzero(esk.data(), esk.size());
  return out;
}

std::vector<std::uint8_t> open_payload(const SealedPayload& sealed,
                                       const AuthenticatedHeaderFields& hdr,
                                       const ControllerKeyPair& keys) {
  ensure_sodium();
  std::array<std::uint8_t, kWrappedPlainLen> wrapped_plain{};
  if (sealed.wrapped_blob.size() != crypto_box_SEALBYTES + kWrappedPlainLen ||
      crypto_box_seal_open(wrapped_plain.data(), sealed.wrapped_blob.data(),
                           sealed.wrapped_blob.size(), keys.public_key.data(),
                           keys.private_key.data()) != 0)
    throw DecryptError("wrapped blob does not open with this private key");

  const auto digest = digest_over(hdr, sealed.ciphertext);
  if (sodium_memcmp(digest.data(), wrapped_plain.data() + kSymKeyLen,
                    kDigestLen) != 0)
    throw IntegrityError("payload digest mismatch");

  if (sealed.ciphertext.size() < kNonceLen)
    throw IntegrityError("ciphertext shorter than its nonce");
  std::span<const std::uint8_t> body(sealed.ciphertext.data() + kNonceLen,
                                     sealed.ciphertext.size() - kNonceLen);
  return aes256ctr(body, wrapped_plain.data(), sealed.ciphertext.data());
}

std::vector<std::uint8_t> to_bytes(const std::string& text) {
  return std::vector<std::uint8_t>(text.begin(), text.end());
}

std::string to_string(const std::vector<std::uint8_t>& bytes) {
  return std::string(bytes.begin(), bytes.end());
}

std::uint64_t TokenAuthority::issue(const PairAddrs& pair, std::uint64_t now,
                                    Rng& rng) {
  return issue_with(pair, now, [&rng] { return rng.next_u64(); });
}

std::uint64_t TokenAuthority::issue_with(
    const PairAddrs& pair, std::uint64_t now,
    const std::function<std::uint64_t()>& draw) {
  for (;;) {
    const std::uint64_t token = draw();
    auto it = live_.find(token);
    if (it != live_.end() && it->second.expires_at > now) continue;  // retry
    live_[token] = Entry{pair, now + window_};
    return token;
  }
}

std::optional<PairAddrs> TokenAuthority::resolve(std::uint64_t token,
                                                 std::uint64_t now) const {
  auto it = live_.find(token);
  if (it == live_.end() || it->second.expires_at <= now) return std::nullopt;
  return it->second.pair;
}

std::size_t TokenAuthority::live_count(std::uint64_t now) const {
  std::size_t n = 0;
  for (const auto& [tok, e] : live_)
    if (e.expires_at > now) ++n;
  return n;
}

}  // namespace topoman
