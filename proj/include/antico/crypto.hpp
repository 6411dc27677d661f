#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "antico/encoding.hpp"

namespace antico::crypto {

// ristretto255: prime-order group with canonical 32-byte encodings.
inline constexpr std::size_t kPointBytes = 32;
inline constexpr std::size_t kScalarBytes = 32;

class Scalar {
 public:
  Scalar() { bytes_.fill(0); }
  static std::optional<Scalar> from_bytes(ByteView b);  // canonical only
  static Scalar from_wide(ByteView b64);                // reduce 64 bytes mod l
  static Scalar hash(std::string_view domain, ByteView data);

  const std::array<std::uint8_t, kScalarBytes>& bytes() const { return bytes_; }
  bool is_zero() const;

  friend Scalar operator+(const Scalar& a, const Scalar& b);
  friend Scalar operator-(const Scalar& a, const Scalar& b);
  friend Scalar operator*(const Scalar& a, const Scalar& b);
  friend bool operator==(const Scalar& a, const Scalar& b) { return a.bytes_ == b.bytes_; }

 private:
  std::array<std::uint8_t, kScalarBytes> bytes_;
};

class Point {
 public:
  Point() { bytes_.fill(0); }  // identity
  static std::optional<Point> from_bytes(ByteView b);  // canonical group element
  static Point base_mul(const Scalar& s);
  static Point hash(std::string_view domain, ByteView data);
  static Point identity() { return Point(); }

  const std::array<std::uint8_t, kPointBytes>& bytes() const { return bytes_; }
  bool is_identity() const;

  friend Point operator+(const Point& a, const Point& b);
  friend Point operator*(const Scalar& s, const Point& p);
  friend bool operator==(const Point& a, const Point& b) { return a.bytes_ == b.bytes_; }
  friend bool operator<(const Point& a, const Point& b) { return a.bytes_ < b.bytes_; }

 private:
  std::array<std::uint8_t, kPointBytes> bytes_;
};

// Deterministic byte stream for tests and replayable simulations; from_os()
// draws the key from the system CSPRNG.
class Entropy {
 public:
  explicit Entropy(ByteView seed);
  explicit Entropy(std::uint64_t seed);
  static Entropy from_os();

  void fill(std::span<std::uint8_t> out);
  Bytes bytes(std::size_t n);
  Scalar scalar();  // uniform nonzero

 private:
  std::array<std::uint8_t, 32> key_;
  std::uint64_t counter_ = 0;
};

struct KeyPair {
  Scalar secret;
  Point public_key;
};

KeyPair keygen(ByteView seed);  // seed must be >= 32 bytes

struct KeyImage {
  Point point;
  friend bool operator==(const KeyImage& a, const KeyImage& b) { return a.point == b.point; }
  friend bool operator<(const KeyImage& a, const KeyImage& b) { return a.point < b.point; }
};

// Hash-to-group used for key images.
Point hash_to_point(const Point& pk);
KeyImage key_image(const KeyPair& kp);

class Ring {
 public:
  // Throws std::invalid_argument on fewer than 2 members, duplicates, or an
  // identity key.
  explicit Ring(std::vector<Point> members);

  std::size_t size() const { return members_.size(); }
  const std::vector<Point>& members() const { return members_; }
  const Point& hashed(std::size_t i) const { return hashed_[i]; }
  std::optional<std::size_t> index_of(const Point& pk) const;

  Bytes encode() const;
  static Ring decode(ByteView b);  // throws EncodingError

  friend bool operator==(const Ring& a, const Ring& b) { return a.members_ == b.members_; }

 private:
  std::vector<Point> members_;
  std::vector<Point> hashed_;
};

struct RingSignature {
  Scalar challenge;
  std::vector<Scalar> responses;
  KeyImage key_image;

  Bytes encode() const;
  static RingSignature decode(ByteView b);  // throws EncodingError
};

RingSignature ring_sign(ByteView message, const Ring& ring, const KeyPair& signer, Entropy& entropy);
bool ring_verify(ByteView message, const Ring& ring, const RingSignature& sig);
// Parses then verifies; malformed input rejects.
bool ring_verify_encoded(ByteView message, const Ring& ring, ByteView encoded_sig);
bool linked(const RingSignature& a, const RingSignature& b);

struct Envelope {
  Point ephemeral;
  Bytes ciphertext;
  std::array<std::uint8_t, 16> tag{};

  Bytes encode() const;
  static Envelope decode(ByteView b);  // throws EncodingError
};

// Authentication failure on decrypt.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Envelope encrypt(const Point& to, ByteView payload, Entropy& entropy);
Bytes decrypt(const Scalar& secret, const Envelope& env);  // IntegrityError / EncodingError

struct AnonAddress {
  Scalar secret;
  Point address;
};

AnonAddress anon_address(Entropy& entropy);

// Generic 32-byte domain-separated digest.
std::array<std::uint8_t, 32> digest(std::string_view domain, ByteView data);

struct TestVector {
  Bytes message;
  std::vector<Bytes> ring;  // raw member encodings
  std::size_t signer_index = 0;
  Bytes signature;
  bool valid = true;

  std::string to_json() const;
  static TestVector from_json(const std::string& line);
  // Decodes the ring and signature and verifies; any parse failure rejects.
  bool verifies() const;
};

}  // namespace antico::crypto
