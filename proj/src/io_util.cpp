#include "fblearn/io_util.hpp"

#include <bit>
#include <charconv>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace fblearn {

void append_u32le(std::string& buf, std::uint32_t v) {
    buf.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void append_u64le(std::string& buf, std::uint64_t v) {
    buf.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void append_f32le(std::string& buf, float v) {
    buf.append(reinterpret_cast<const char*>(&v), sizeof v);
}

namespace {

void require_bytes(const std::string& buf, std::size_t pos, std::size_t count) {
    if (pos + count > buf.size()) throw FormatError("truncated file");
}

}  // namespace

std::uint32_t read_u32le(const std::string& buf, std::size_t& pos) {
    require_bytes(buf, pos, 4);
    std::uint32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
}

std::uint64_t read_u64le(const std::string& buf, std::size_t& pos) {
    require_bytes(buf, pos, 8);
    std::uint64_t v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
}

float read_f32le(const std::string& buf, std::size_t& pos) {
    require_bytes(buf, pos, 4);
    float v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::string contents((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return contents;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace fblearn
