#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pegfit {

// Little-endian binary writer/reader. All persisted containers go through
// these so file bytes are platform- and run-independent.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open for write: " + path);
    }
    void u8(std::uint8_t v) { put(&v, 1); }
    void u32(std::uint32_t v) {
        std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                             static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
        put(b, 4);
    }
    void u64(std::uint64_t v) {
        u32(static_cast<std::uint32_t>(v));
        u32(static_cast<std::uint32_t>(v >> 32));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void magic(const char tag[5]) { put(tag, 4); }
    void bytes(const void* p, std::size_t n) { put(p, n); }

private:
    void put(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw std::runtime_error("cannot open for read: " + path);
    }
    std::uint8_t u8() {
        std::uint8_t v;
        get(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint8_t b[4];
        get(b, 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    std::uint64_t u64() {
        std::uint64_t lo = u32();
        std::uint64_t hi = u32();
        return lo | (hi << 32);
    }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    void expect_magic(const char tag[5]) {
        char b[4];
        get(b, 4);
        if (std::memcmp(b, tag, 4) != 0)
            throw std::runtime_error(path_ + ": bad magic, expected " + std::string(tag, 4));
    }

private:
    void get(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!in_) throw std::runtime_error(path_ + ": truncated file");
    }
    std::ifstream in_;
    std::string path_;
};

// FNV-1a over file bytes; used for artifact provenance stamps.
std::uint64_t fnv1a_file(const std::string& path);
std::string hash_hex(std::uint64_t h);

// Deterministic float formatting for CSV (shortest round-trip).
std::string fmt_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace pegfit
