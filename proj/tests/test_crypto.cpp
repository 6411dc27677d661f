#include <doctest.h>
#include <sodium.h>

#include <chrono>
#include <cstring>
#include <fstream>
#include <set>
#include <string>

#include "antico/crypto.hpp"

using namespace antico;
using namespace antico::crypto;

namespace {

Bytes seed_bytes(std::uint64_t i) {
  Bytes b(32, 0);
  for (int k = 0; k < 8; ++k) b[k] = static_cast<std::uint8_t>(i >> (8 * k));
  b[31] = 0x5a;
  return b;
}

std::vector<KeyPair> keys(std::size_t n, std::uint64_t offset = 0) {
  std::vector<KeyPair> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(keygen(seed_bytes(offset + i)));
  return out;
}

Ring ring_of(const std::vector<KeyPair>& ks) {
  std::vector<Point> pks;
  for (auto& k : ks) pks.push_back(k.public_key);
  return Ring(pks);
}

// Independent verifier written straight against libsodium and the documented
// wire layout of challenge hashing.
void oracle_hash(unsigned char* out, std::size_t outlen, const std::string& domain,
                 const std::vector<std::pair<const unsigned char*, std::size_t>>& parts) {
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, outlen);
  unsigned char len = static_cast<unsigned char>(domain.size());
  crypto_generichash_update(&st, &len, 1);
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(domain.data()), domain.size());
  for (auto& [p, n] : parts) crypto_generichash_update(&st, p, n);
  crypto_generichash_final(&st, out, outlen);
}

void oracle_mul(unsigned char* out, const unsigned char* s, const unsigned char* p) {
  if (crypto_scalarmult_ristretto255(out, s, p) != 0) std::memset(out, 0, 32);
}

void oracle_add(unsigned char* out, const unsigned char* a, const unsigned char* b) {
  static const unsigned char zero[32] = {0};
  if (!std::memcmp(a, zero, 32)) return (void)std::memcpy(out, b, 32);
  if (!std::memcmp(b, zero, 32)) return (void)std::memcpy(out, a, 32);
  crypto_core_ristretto255_add(out, a, b);
}

bool oracle_verify(const Bytes& msg, const std::vector<KeyPair>& ks, const RingSignature& sig) {
  const std::size_t n = ks.size();
  // ring encoding: version, 'R', u32 count, then u32-length-prefixed members
  Bytes ring{1, 'R', static_cast<unsigned char>(n), 0, 0, 0};
  for (auto& k : ks) {
    ring.insert(ring.end(), {32, 0, 0, 0});
    ring.insert(ring.end(), k.public_key.bytes().begin(), k.public_key.bytes().end());
  }
  unsigned char mlen[8] = {0};
  for (int i = 0; i < 8; ++i) mlen[i] = static_cast<unsigned char>(msg.size() >> (8 * i));
  unsigned char c[32];
  std::memcpy(c, sig.challenge.bytes().data(), 32);
  const unsigned char* img = sig.key_image.point.bytes().data();
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char wide[64], hp[32], a[32], b[32], l[32], r[32];
    oracle_hash(wide, 64, "antico/v1/hash-to-point", {{ks[i].public_key.bytes().data(), 32}});
    crypto_core_ristretto255_from_hash(hp, wide);
    const unsigned char* s = sig.responses[i].bytes().data();
    if (crypto_scalarmult_ristretto255_base(a, s) != 0) std::memset(a, 0, 32);
    oracle_mul(b, c, ks[i].public_key.bytes().data());
    oracle_add(l, a, b);
    oracle_mul(a, s, hp);
    oracle_mul(b, c, img);
    oracle_add(r, a, b);
    oracle_hash(wide, 64, "antico/v1/challenge",
                {{mlen, 8}, {msg.data(), msg.size()}, {ring.data(), ring.size()}, {l, 32}, {r, 32}});
    crypto_core_ristretto255_scalar_reduce(c, wide);
  }
  return std::memcmp(c, sig.challenge.bytes().data(), 32) == 0;
}

}  // namespace

TEST_CASE("keygen") {
  auto a = keygen(seed_bytes(1));
  auto b = keygen(seed_bytes(1));
  auto c = keygen(seed_bytes(2));
  CHECK(a.public_key == Point::base_mul(a.secret));
  CHECK(a.secret == b.secret);
  CHECK(a.public_key == b.public_key);
  CHECK_FALSE(a.secret == c.secret);
  CHECK_THROWS_AS(keygen(Bytes(31, 1)), std::invalid_argument);

  std::set<Point> seen;
  for (auto& k : keys(500)) seen.insert(k.public_key);
  CHECK(seen.size() == 500);
}

TEST_CASE("group encodings") {
  Entropy e(7);
  Scalar s = e.scalar();
  auto back = Scalar::from_bytes(s.bytes());
  REQUIRE(back);
  CHECK(*back == s);
  // l itself is non-canonical
  Bytes l = from_hex("edd3f55c1a631258d69cf7a2def9de1400000000000000000000000000000010");
  CHECK_FALSE(Scalar::from_bytes(l));
  Point p = Point::base_mul(s);
  auto pb = Point::from_bytes(p.bytes());
  REQUIRE(pb);
  CHECK(*pb == p);
  CHECK_FALSE(Point::from_bytes(Bytes(32, 0xff)));
  CHECK_FALSE(Point::from_bytes(Bytes(31, 0)));
  Bytes high(p.bytes().begin(), p.bytes().end());
  high[31] |= 0x80;
  CHECK_FALSE(Point::from_bytes(high));
  Bytes high_identity(32, 0);
  high_identity[31] = 0x80;
  CHECK_FALSE(Point::from_bytes(high_identity));
  CHECK((s - s).is_zero());
  CHECK(Point::base_mul(s + s) == p + p);
}

TEST_CASE("key images") {
  auto ks = keys(200);
  CHECK(key_image(ks[0]) == key_image(ks[0]));
  std::set<Point> imgs;
  for (auto& k : ks) {
    auto img = key_image(k);
    CHECK_FALSE(img.point.is_identity());
    imgs.insert(img.point);
  }
  CHECK(imgs.size() == ks.size());
}

TEST_CASE("ring construction") {
  auto ks = keys(3);
  CHECK_THROWS_AS(Ring({ks[0].public_key}), std::invalid_argument);
  CHECK_THROWS_AS(Ring({ks[0].public_key, ks[0].public_key}), std::invalid_argument);
  CHECK_THROWS_AS(Ring({ks[0].public_key, Point::identity()}), std::invalid_argument);
  Ring r = ring_of(ks);
  CHECK(Ring::decode(r.encode()) == r);
  Bytes enc = r.encode();
  enc.push_back(0);
  CHECK_THROWS_AS(Ring::decode(enc), EncodingError);
}

TEST_CASE("sign and verify: completeness and oracle agreement") {
  Entropy e(99);
  for (std::size_t n : {2u, 3u, 5u, 10u}) {
    auto ks = keys(n, n * 100);
    Ring ring = ring_of(ks);
    for (std::size_t i = 0; i < n; ++i) {
      Bytes msg = e.bytes(1 + i);
      auto sig = ring_sign(msg, ring, ks[i], e);
      CHECK(ring_verify(msg, ring, sig));
      CHECK(oracle_verify(msg, ks, sig));
      CHECK(sig.key_image == key_image(ks[i]));
      auto round = RingSignature::decode(sig.encode());
      CHECK(round.encode() == sig.encode());
    }
  }
}

TEST_CASE("structural anonymity: encoding length does not depend on signer index") {
  Entropy e(5);
  auto ks = keys(10, 40);
  Ring ring = ring_of(ks);
  Bytes msg = e.bytes(48);
  std::set<std::size_t> lengths;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    auto sig = ring_sign(msg, ring, ks[i], e);
    CHECK(ring_verify(msg, ring, sig));
    lengths.insert(sig.encode().size());
  }
  CHECK(lengths.size() == 1);
}

TEST_CASE("rejections") {
  Entropy e(8);
  auto ks = keys(4, 7);
  Ring ring = ring_of(ks);
  Bytes msg = e.bytes(32);
  auto sig = ring_sign(msg, ring, ks[2], e);

  SUBCASE("signer not in ring") {
    auto outsider = keygen(seed_bytes(999));
    CHECK_THROWS_AS(ring_sign(msg, ring, outsider, e), std::invalid_argument);
  }
  SUBCASE("reordered ring") {
    Ring swapped({ks[1].public_key, ks[0].public_key, ks[2].public_key, ks[3].public_key});
    CHECK_FALSE(ring_verify(msg, swapped, sig));
  }
  SUBCASE("every single-bit flip of the message") {
    for (std::size_t bit = 0; bit < msg.size() * 8; ++bit) {
      Bytes m = msg;
      m[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      CHECK_FALSE(ring_verify(m, ring, sig));
    }
  }
  SUBCASE("malformed signature bytes reject without throwing") {
    Bytes enc = sig.encode();
    CHECK(ring_verify_encoded(msg, ring, enc));
    CHECK_FALSE(ring_verify_encoded(msg, ring, Bytes(enc.begin(), enc.end() - 1)));
    CHECK_FALSE(ring_verify_encoded(msg, ring, Bytes{}));
    Bytes bad = enc;
    bad[0] = 9;
    CHECK_FALSE(ring_verify_encoded(msg, ring, bad));
  }
  SUBCASE("identity key image") {
    auto s2 = sig;
    s2.key_image.point = Point::identity();
    CHECK_FALSE(ring_verify(msg, ring, s2));
  }
  SUBCASE("wrong response count") {
    auto s2 = sig;
    s2.responses.pop_back();
    CHECK_FALSE(ring_verify(msg, ring, s2));
  }
}

TEST_CASE("linkability") {
  Entropy e(77);
  auto ks = keys(5, 300);
  Ring ring = ring_of(ks);
  auto a = ring_sign(as_bytes("first"), ring, ks[1], e);
  auto b = ring_sign(as_bytes("second"), ring, ks[1], e);
  auto c = ring_sign(as_bytes("first"), ring, ks[2], e);
  CHECK(linked(a, b));
  CHECK_FALSE(linked(a, c));
  Ring other({ks[1].public_key, keygen(seed_bytes(5000)).public_key});
  auto d = ring_sign(as_bytes("third"), other, ks[1], e);
  CHECK(ring_verify(as_bytes("third"), other, d));
  CHECK(linked(a, d));
}

TEST_CASE("encryption") {
  Entropy e(3);
  auto mgr = keygen(seed_bytes(4242));
  Bytes payload = e.bytes(100);
  auto env = encrypt(mgr.public_key, payload, e);
  CHECK(decrypt(mgr.secret, env) == payload);
  auto round = Envelope::decode(env.encode());
  CHECK(decrypt(mgr.secret, round) == payload);

  CHECK_THROWS_AS(encrypt(mgr.public_key, Bytes{}, e), std::invalid_argument);
  auto other = keygen(seed_bytes(4243));
  CHECK_THROWS_AS(decrypt(other.secret, env), IntegrityError);

  Bytes enc = env.encode();
  int integrity = 0, malformed = 0;
  for (std::size_t bit = 0; bit < enc.size() * 8; ++bit) {
    Bytes m = enc;
    m[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    try {
      auto out = decrypt(mgr.secret, Envelope::decode(m));
      FAIL("tampered envelope decrypted");
    } catch (const IntegrityError&) {
      ++integrity;
    } catch (const EncodingError&) {
      ++malformed;
    }
  }
  CHECK(integrity > 0);
  CHECK(malformed > 0);
  CHECK(integrity + malformed == static_cast<int>(enc.size() * 8));
}

TEST_CASE("anonymous addresses") {
  Entropy e(1234);
  auto registered = keys(50);
  std::set<Point> pks;
  for (auto& k : registered) pks.insert(k.public_key);
  std::set<Point> seen;
  for (int i = 0; i < 300; ++i) {
    auto a = anon_address(e);
    CHECK(a.address == Point::base_mul(a.secret));
    CHECK(pks.count(a.address) == 0);
    seen.insert(a.address);
  }
  CHECK(seen.size() == 300);
}

TEST_CASE("entropy is deterministic per seed") {
  Entropy a(5), b(5), c(6);
  CHECK(a.bytes(64) == b.bytes(64));
  CHECK(a.bytes(64) != c.bytes(64));
}

TEST_CASE("checked-in vectors") {
  std::ifstream in(std::string(ANTICO_TEST_DATA) + "/ring_vectors.jsonl");
  REQUIRE(in.good());
  std::string line;
  int count = 0, valid = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto v = TestVector::from_json(line);
    CHECK(v.verifies() == v.valid);
    CHECK(TestVector::from_json(v.to_json()).to_json() == v.to_json());
    ++count;
    valid += v.valid;
  }
  CHECK(count >= 6);
  CHECK(valid >= 3);
}

TEST_CASE("sign+verify timing at ring size 10") {
  Entropy e(2);
  auto ks = keys(10, 900);
  Ring ring = ring_of(ks);
  Bytes msg = e.bytes(32);
  auto t0 = std::chrono::steady_clock::now();
  auto sig = ring_sign(msg, ring, ks[0], e);
  bool ok = ring_verify(msg, ring, sig);
  auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  CHECK(ok);
  MESSAGE("sign+verify ring=10: " << ms << " ms");
}
