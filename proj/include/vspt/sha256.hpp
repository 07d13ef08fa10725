#pragma once
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace vspt {

// Incremental SHA-256, used for parameter digests and config digests.
class Sha256 {
public:
    Sha256();
    void update(const void* data, size_t len);
    void update(const std::string& s) { update(s.data(), s.size()); }
    void update_f64(const double* values, size_t count);
    void update_u64(uint64_t v);
    // finalizes and returns lowercase hex; the object must not be reused
    std::string hex_digest();

private:
    void process_block(const uint8_t* block);
    uint32_t state_[8];
    uint64_t bit_count_ = 0;
    uint8_t buffer_[64];
    size_t buffer_len_ = 0;
};

std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& s);

} // namespace vspt
