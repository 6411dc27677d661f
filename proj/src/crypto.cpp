#include "antico/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>
#include <mutex>
#include <nlohmann/json.hpp>
#include <set>

namespace antico::crypto {

namespace {

constexpr std::string_view kChallengeDomain = "antico/v1/challenge";
constexpr std::string_view kHashPointDomain = "antico/v1/hash-to-point";
constexpr std::string_view kKeygenDomain = "antico/v1/keygen";
constexpr std::string_view kAnonDomain = "antico/v1/anon";
constexpr std::string_view kKdfDomain = "antico/v1/kdf";
constexpr std::string_view kNonceDomain = "antico/v1/nonce";
constexpr std::string_view kDrbgDomain = "antico/v1/drbg";

void ensure_sodium() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  });
}

// BLAKE2b over length-prefixed domain followed by data.
void hash_into(std::span<std::uint8_t> out, std::string_view domain, std::initializer_list<ByteView> parts) {
  ensure_sodium();
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, out.size());
  std::uint8_t len = static_cast<std::uint8_t>(domain.size());
  crypto_generichash_update(&st, &len, 1);
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(domain.data()), domain.size());
  for (auto p : parts) crypto_generichash_update(&st, p.data(), p.size());
  crypto_generichash_final(&st, out.data(), out.size());
}

ByteView view(const std::array<std::uint8_t, 32>& a) { return {a.data(), a.size()}; }

}  // namespace

std::array<std::uint8_t, 32> digest(std::string_view domain, ByteView data) {
  std::array<std::uint8_t, 32> out;
  hash_into(out, domain, {data});
  return out;
}

// ---- Scalar ----

std::optional<Scalar> Scalar::from_bytes(ByteView b) {
  if (b.size() != kScalarBytes) return std::nullopt;
  ensure_sodium();
  std::uint8_t wide[64] = {0};
  std::memcpy(wide, b.data(), 32);
  Scalar s;
  crypto_core_ristretto255_scalar_reduce(s.bytes_.data(), wide);
  if (std::memcmp(s.bytes_.data(), b.data(), 32) != 0) return std::nullopt;
  return s;
}

Scalar Scalar::from_wide(ByteView b64) {
  if (b64.size() != 64) throw std::invalid_argument("wide scalar needs 64 bytes");
  ensure_sodium();
  Scalar s;
  crypto_core_ristretto255_scalar_reduce(s.bytes_.data(), b64.data());
  return s;
}

Scalar Scalar::hash(std::string_view domain, ByteView data) {
  std::array<std::uint8_t, 64> wide;
  hash_into(wide, domain, {data});
  return from_wide(wide);
}

bool Scalar::is_zero() const { return sodium_is_zero(bytes_.data(), bytes_.size()); }

Scalar operator+(const Scalar& a, const Scalar& b) {
  Scalar r;
  crypto_core_ristretto255_scalar_add(r.bytes_.data(), a.bytes_.data(), b.bytes_.data());
  return r;
}

Scalar operator-(const Scalar& a, const Scalar& b) {
  Scalar r;
  crypto_core_ristretto255_scalar_sub(r.bytes_.data(), a.bytes_.data(), b.bytes_.data());
  return r;
}

Scalar operator*(const Scalar& a, const Scalar& b) {
  Scalar r;
  crypto_core_ristretto255_scalar_mul(r.bytes_.data(), a.bytes_.data(), b.bytes_.data());
  return r;
}

// ---- Point ----

std::optional<Point> Point::from_bytes(ByteView b) {
  if (b.size() != kPointBytes) return std::nullopt;
  // libsodium 1.0.18 ignores bit 255; a canonical encoding never sets it
  if (b[kPointBytes - 1] & 0x80) return std::nullopt;
  ensure_sodium();
  Point p;
  std::memcpy(p.bytes_.data(), b.data(), kPointBytes);
  if (p.is_identity()) return p;
  if (!crypto_core_ristretto255_is_valid_point(b.data())) return std::nullopt;
  return p;
}

Point Point::base_mul(const Scalar& s) {
  ensure_sodium();
  Point p;
  // returns -1 only when the result is the identity, which stays all-zero
  if (crypto_scalarmult_ristretto255_base(p.bytes_.data(), s.bytes().data()) != 0) p.bytes_.fill(0);
  return p;
}

Point Point::hash(std::string_view domain, ByteView data) {
  std::array<std::uint8_t, 64> wide;
  hash_into(wide, domain, {data});
  Point p;
  crypto_core_ristretto255_from_hash(p.bytes_.data(), wide.data());
  return p;
}

bool Point::is_identity() const { return sodium_is_zero(bytes_.data(), bytes_.size()); }

Point operator+(const Point& a, const Point& b) {
  if (a.is_identity()) return b;
  if (b.is_identity()) return a;
  Point r;
  crypto_core_ristretto255_add(r.bytes_.data(), a.bytes_.data(), b.bytes_.data());
  return r;
}

Point operator*(const Scalar& s, const Point& p) {
  Point r;
  if (p.is_identity() || s.is_zero()) return r;
  if (crypto_scalarmult_ristretto255(r.bytes_.data(), s.bytes().data(), p.bytes_.data()) != 0) r.bytes_.fill(0);
  return r;
}

// ---- Entropy ----

Entropy::Entropy(ByteView seed) { hash_into(key_, kDrbgDomain, {seed}); }

Entropy::Entropy(std::uint64_t seed) {
  std::uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(seed >> (8 * i));
  hash_into(key_, kDrbgDomain, {ByteView(b, 8)});
}

Entropy Entropy::from_os() {
  ensure_sodium();
  std::array<std::uint8_t, 32> seed;
  randombytes_buf(seed.data(), seed.size());
  return Entropy(ByteView(seed));
}

void Entropy::fill(std::span<std::uint8_t> out) {
  ensure_sodium();
  std::uint8_t ctr[8];
  for (int i = 0; i < 8; ++i) ctr[i] = static_cast<std::uint8_t>(counter_ >> (8 * i));
  ++counter_;
  std::array<std::uint8_t, randombytes_SEEDBYTES> block_seed;
  hash_into(block_seed, kDrbgDomain, {view(key_), ByteView(ctr, 8)});
  randombytes_buf_deterministic(out.data(), out.size(), block_seed.data());
}

Bytes Entropy::bytes(std::size_t n) {
  Bytes b(n);
  fill(b);
  return b;
}

Scalar Entropy::scalar() {
  for (;;) {
    std::array<std::uint8_t, 64> wide;
    fill(wide);
    Scalar s = Scalar::from_wide(wide);
    if (!s.is_zero()) return s;
  }
}

// ---- keys ----

static KeyPair derive_keypair(std::string_view domain, ByteView seed) {
  for (std::uint8_t ctr = 0;; ++ctr) {
    std::array<std::uint8_t, 64> wide;
    hash_into(wide, domain, {seed, ByteView(&ctr, 1)});
    Scalar sk = Scalar::from_wide(wide);
    if (!sk.is_zero()) return {sk, Point::base_mul(sk)};
  }
}

KeyPair keygen(ByteView seed) {
  if (seed.size() < 32) throw std::invalid_argument("keygen seed must have at least 32 bytes");
  return derive_keypair(kKeygenDomain, seed);
}

AnonAddress anon_address(Entropy& entropy) {
  auto seed = entropy.bytes(32);
  KeyPair kp = derive_keypair(kAnonDomain, seed);
  return {kp.secret, kp.public_key};
}

Point hash_to_point(const Point& pk) { return Point::hash(kHashPointDomain, view(pk.bytes())); }

KeyImage key_image(const KeyPair& kp) { return {kp.secret * hash_to_point(kp.public_key)}; }

// ---- Ring ----

Ring::Ring(std::vector<Point> members) : members_(std::move(members)) {
  if (members_.size() < 2) throw std::invalid_argument("ring needs at least 2 members");
  std::set<Point> seen;
  for (const auto& m : members_) {
    if (m.is_identity()) throw std::invalid_argument("identity is not a valid public key");
    if (!seen.insert(m).second) throw std::invalid_argument("duplicate ring member");
  }
  hashed_.reserve(members_.size());
  for (const auto& m : members_) hashed_.push_back(hash_to_point(m));
}

std::optional<std::size_t> Ring::index_of(const Point& pk) const {
  auto it = std::find(members_.begin(), members_.end(), pk);
  if (it == members_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - members_.begin());
}

Bytes Ring::encode() const {
  ByteWriter w;
  w.header('R').u32(static_cast<std::uint32_t>(members_.size()));
  for (const auto& m : members_) w.field(view(m.bytes()));
  return w.take();
}

Ring Ring::decode(ByteView b) {
  ByteReader r(b);
  r.header('R');
  std::uint32_t n = r.u32();
  if (n > 4096) throw EncodingError("ring too large");
  std::vector<Point> members;
  for (std::uint32_t i = 0; i < n; ++i) {
    auto p = Point::from_bytes(r.field());
    if (!p) throw EncodingError("invalid ring member encoding");
    members.push_back(*p);
  }
  r.finish();
  try {
    return Ring(std::move(members));
  } catch (const std::invalid_argument& e) {
    throw EncodingError(e.what());
  }
}

// ---- signatures ----

Bytes RingSignature::encode() const {
  ByteWriter w;
  w.header('S').field(view(challenge.bytes())).u32(static_cast<std::uint32_t>(responses.size()));
  for (const auto& s : responses) w.field(view(s.bytes()));
  w.field(view(key_image.point.bytes()));
  return w.take();
}

RingSignature RingSignature::decode(ByteView b) {
  ByteReader r(b);
  r.header('S');
  RingSignature sig;
  auto c = Scalar::from_bytes(r.field());
  if (!c) throw EncodingError("non-canonical challenge");
  sig.challenge = *c;
  std::uint32_t n = r.u32();
  if (n > 4096) throw EncodingError("too many responses");
  for (std::uint32_t i = 0; i < n; ++i) {
    auto s = Scalar::from_bytes(r.field());
    if (!s) throw EncodingError("non-canonical response");
    sig.responses.push_back(*s);
  }
  auto img = Point::from_bytes(r.field());
  if (!img) throw EncodingError("invalid key image encoding");
  sig.key_image.point = *img;
  r.finish();
  return sig;
}

namespace {

Scalar challenge(ByteView message, ByteView ring_bytes, const Point& l, const Point& r) {
  std::array<std::uint8_t, 64> wide;
  std::uint8_t mlen[8];
  for (int i = 0; i < 8; ++i) mlen[i] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(message.size()) >> (8 * i));
  hash_into(wide, kChallengeDomain, {ByteView(mlen, 8), message, ring_bytes, view(l.bytes()), view(r.bytes())});
  return Scalar::from_wide(wide);
}

}  // namespace

RingSignature ring_sign(ByteView message, const Ring& ring, const KeyPair& signer, Entropy& entropy) {
  auto idx = ring.index_of(signer.public_key);
  if (!idx) throw std::invalid_argument("signer is not a ring member");
  if (Point::base_mul(signer.secret) != signer.public_key) throw std::invalid_argument("inconsistent key pair");
  const std::size_t n = ring.size();
  const std::size_t pi = *idx;
  const Bytes ring_bytes = ring.encode();
  const Point image = signer.secret * ring.hashed(pi);

  RingSignature sig;
  sig.key_image.point = image;
  sig.responses.resize(n);
  std::vector<Scalar> c(n);

  const Scalar alpha = entropy.scalar();
  std::size_t i = (pi + 1) % n;
  c[i] = challenge(message, ring_bytes, Point::base_mul(alpha), alpha * ring.hashed(pi));
  while (i != pi) {
    sig.responses[i] = entropy.scalar();
    const Point l = Point::base_mul(sig.responses[i]) + c[i] * ring.members()[i];
    const Point r = sig.responses[i] * ring.hashed(i) + c[i] * image;
    const std::size_t next = (i + 1) % n;
    c[next] = challenge(message, ring_bytes, l, r);
    i = next;
  }
  sig.responses[pi] = alpha - c[pi] * signer.secret;
  sig.challenge = c[0];
  return sig;
}

bool ring_verify(ByteView message, const Ring& ring, const RingSignature& sig) {
  if (sig.responses.size() != ring.size()) return false;
  if (sig.key_image.point.is_identity()) return false;
  const Bytes ring_bytes = ring.encode();
  Scalar c = sig.challenge;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Point l = Point::base_mul(sig.responses[i]) + c * ring.members()[i];
    const Point r = sig.responses[i] * ring.hashed(i) + c * sig.key_image.point;
    c = challenge(message, ring_bytes, l, r);
  }
  return c == sig.challenge;
}

bool ring_verify_encoded(ByteView message, const Ring& ring, ByteView encoded_sig) {
  try {
    return ring_verify(message, ring, RingSignature::decode(encoded_sig));
  } catch (const EncodingError&) {
    return false;
  }
}

bool linked(const RingSignature& a, const RingSignature& b) { return a.key_image == b.key_image; }

// ---- encryption ----

namespace {

struct SessionKeys {
  std::array<std::uint8_t, crypto_aead_xchacha20poly1305_ietf_KEYBYTES> key;
  std::array<std::uint8_t, crypto_aead_xchacha20poly1305_ietf_NPUBBYTES> nonce;
};

SessionKeys session(const Point& shared, const Point& ephemeral, const Point& recipient) {
  SessionKeys k;
  hash_into(k.key, kKdfDomain, {view(shared.bytes()), view(ephemeral.bytes()), view(recipient.bytes())});
  hash_into(k.nonce, kNonceDomain, {view(ephemeral.bytes()), view(recipient.bytes())});
  return k;
}

Bytes associated_data(const Point& ephemeral, const Point& recipient) {
  Bytes ad(ephemeral.bytes().begin(), ephemeral.bytes().end());
  ad.insert(ad.end(), recipient.bytes().begin(), recipient.bytes().end());
  return ad;
}

}  // namespace

Bytes Envelope::encode() const {
  ByteWriter w;
  w.header('E').field(view(ephemeral.bytes())).field(ciphertext).field(ByteView(tag.data(), tag.size()));
  return w.take();
}

Envelope Envelope::decode(ByteView b) {
  ByteReader r(b);
  r.header('E');
  Envelope env;
  auto eph = Point::from_bytes(r.field());
  if (!eph || eph->is_identity()) throw EncodingError("invalid ephemeral key");
  env.ephemeral = *eph;
  auto ct = r.field();
  env.ciphertext.assign(ct.begin(), ct.end());
  auto tag = r.field();
  if (tag.size() != env.tag.size()) throw EncodingError("bad tag length");
  std::copy(tag.begin(), tag.end(), env.tag.begin());
  r.finish();
  return env;
}

Envelope encrypt(const Point& to, ByteView payload, Entropy& entropy) {
  if (payload.empty()) throw std::invalid_argument("payload must be non-empty");
  if (to.is_identity()) throw std::invalid_argument("recipient key is the identity");
  const Scalar r = entropy.scalar();
  Envelope env;
  env.ephemeral = Point::base_mul(r);
  const SessionKeys k = session(r * to, env.ephemeral, to);
  const Bytes ad = associated_data(env.ephemeral, to);
  env.ciphertext.resize(payload.size());
  unsigned long long tag_len = 0;
  crypto_aead_xchacha20poly1305_ietf_encrypt_detached(env.ciphertext.data(), env.tag.data(), &tag_len, payload.data(),
                                                      payload.size(), ad.data(), ad.size(), nullptr, k.nonce.data(),
                                                      k.key.data());
  return env;
}

Bytes decrypt(const Scalar& secret, const Envelope& env) {
  if (env.ephemeral.is_identity()) throw EncodingError("invalid ephemeral key");
  const Point recipient = Point::base_mul(secret);
  const SessionKeys k = session(secret * env.ephemeral, env.ephemeral, recipient);
  const Bytes ad = associated_data(env.ephemeral, recipient);
  Bytes out(env.ciphertext.size());
  if (crypto_aead_xchacha20poly1305_ietf_decrypt_detached(out.data(), nullptr, env.ciphertext.data(),
                                                          env.ciphertext.size(), env.tag.data(), ad.data(), ad.size(),
                                                          k.nonce.data(), k.key.data()) != 0)
    throw IntegrityError("envelope authentication failed");
  return out;
}

// ---- test vectors ----

std::string TestVector::to_json() const {
  nlohmann::json j;
  j["message_hex"] = to_hex(message);
  j["ring_hex"] = nlohmann::json::array();
  for (const auto& m : ring) j["ring_hex"].push_back(to_hex(m));
  j["signer_index"] = signer_index;
  j["signature_hex"] = to_hex(signature);
  j["valid"] = valid;
  return j.dump();
}

TestVector TestVector::from_json(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw EncodingError(e.what());
  }
  TestVector v;
  try {
    v.message = from_hex(j.at("message_hex").get<std::string>());
    for (const auto& m : j.at("ring_hex")) v.ring.push_back(from_hex(m.get<std::string>()));
    v.signer_index = j.at("signer_index").get<std::size_t>();
    v.signature = from_hex(j.at("signature_hex").get<std::string>());
    v.valid = j.at("valid").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw EncodingError(e.what());
  }
  return v;
}

bool TestVector::verifies() const {
  std::vector<Point> members;
  for (const auto& m : ring) {
    auto p = Point::from_bytes(m);
    if (!p) return false;
    members.push_back(*p);
  }
  try {
    Ring r(std::move(members));
    return ring_verify_encoded(message, r, signature);
  } catch (const std::invalid_argument&) {
    return false;
  }
}

}  // namespace antico::crypto
