#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace fblearn {

// Malformed file content (bad magic, truncation, checksum mismatch).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem-level read/write failure.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Streaming FNV-1a (64-bit); used as the trailing file checksum.
class Fnv1a64 {
public:
    void update(const void* data, std::size_t size) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            hash_ ^= p[i];
            hash_ *= 0x100000001B3ULL;
        }
    }

    std::uint64_t digest() const { return hash_; }

private:
    std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

inline std::uint64_t fnv1a64(const void* data, std::size_t size) {
    Fnv1a64 h;
    h.update(data, size);
    return h.digest();
}

// Little-endian append helpers for binary file layouts.
void append_u32le(std::string& buf, std::uint32_t v);
void append_u64le(std::string& buf, std::uint64_t v);
void append_f32le(std::string& buf, float v);

// Bounds-checked little-endian readers; advance `pos`, throw FormatError
// on truncation.
std::uint32_t read_u32le(const std::string& buf, std::size_t& pos);
std::uint64_t read_u64le(const std::string& buf, std::size_t& pos);
float read_f32le(const std::string& buf, std::size_t& pos);

// Nearest float32 value of v, returned as a double. Grids quantized this
// way survive the 32-bit file planes bit-exactly.
inline double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

// Shortest round-trip decimal form (std::to_chars); reruns produce
// byte-identical CSV/JSON payloads.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace fblearn
