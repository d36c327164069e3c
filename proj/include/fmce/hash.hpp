#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace fmce {

// Incremental FNV-1a 64-bit. Non-cryptographic; used for dataset
// checksums and content digests.
class Fnv1a64 {
  public:
    void update(const void* data, size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < len; ++i) {
            hash_ ^= p[i];
            hash_ *= 0x100000001B3ULL;
        }
    }

    uint64_t value() const { return hash_; }

    std::string hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out(16, '0');
        uint64_t v = hash_;
        for (int i = 15; i >= 0; --i) {
            out[static_cast<size_t>(i)] = digits[v & 0xF];
            v >>= 4;
        }
        return out;
    }

  private:
    uint64_t hash_ = 0xCBF29CE484222325ULL;
};

inline uint64_t fnv1a64(const void* data, size_t len) {
    Fnv1a64 h;
    h.update(data, len);
    return h.value();
}

}  // namespace fmce
