// Emits deterministic ring-signature test vectors as JSON lines.
#include <iostream>

#include "antico/crypto.hpp"

using namespace antico;
using namespace antico::crypto;

int main() {
  Entropy e(20240601);
  for (std::size_t n : {2u, 3u, 4u}) {
    std::vector<KeyPair> ks;
    std::vector<Point> pks;
    for (std::size_t i = 0; i < n; ++i) {
      ks.push_back(keygen(e.bytes(32)));
      pks.push_back(ks.back().public_key);
    }
    Ring ring(pks);
    Bytes msg = e.bytes(32);
    std::size_t signer = n - 1;
    auto sig = ring_sign(msg, ring, ks[signer], e);

    TestVector v;
    v.message = msg;
    for (auto& p : pks) v.ring.emplace_back(p.bytes().begin(), p.bytes().end());
    v.signer_index = signer;
    v.signature = sig.encode();
    v.valid = true;
    std::cout << v.to_json() << "\n";

    TestVector bad = v;
    bad.message.back() ^= 1;
    bad.valid = false;
    std::cout << bad.to_json() << "\n";
  }
}
