#include "antico/encoding.hpp"

namespace antico {

ByteWriter& ByteWriter::u8(std::uint8_t v) {
  out_.push_back(v);
  return *this;
}

ByteWriter& ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return *this;
}

ByteWriter& ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return *this;
}

ByteWriter& ByteWriter::field(ByteView b) {
  u32(static_cast<std::uint32_t>(b.size()));
  return raw(b);
}

ByteWriter& ByteWriter::raw(ByteView b) {
  out_.insert(out_.end(), b.begin(), b.end());
  return *this;
}

std::uint8_t ByteReader::u8() { return raw(1)[0]; }

std::uint32_t ByteReader::u32() {
  auto b = raw(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  auto b = raw(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

ByteView ByteReader::field() {
  std::uint32_t n = u32();
  return raw(n);
}

ByteView ByteReader::raw(std::size_t n) {
  if (n > remaining()) throw EncodingError("truncated input");
  ByteView out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::header(char tag) {
  if (u8() != kEncodingVersion) throw EncodingError("unsupported encoding version");
  if (u8() != static_cast<std::uint8_t>(tag)) throw EncodingError("unexpected record tag");
}

void ByteReader::finish() const {
  if (remaining() != 0) throw EncodingError("trailing bytes");
}

std::string to_hex(ByteView b) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(b.size() * 2);
  for (auto c : b) {
    s.push_back(digits[c >> 4]);
    s.push_back(digits[c & 15]);
  }
  return s;
}

static int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

Bytes from_hex(std::string_view s) {
  if (s.size() % 2) throw EncodingError("odd hex length");
  Bytes out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_digit(s[2 * i]), lo = hex_digit(s[2 * i + 1]);
    if (hi < 0 || lo < 0) throw EncodingError("bad hex digit");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

}  // namespace antico
