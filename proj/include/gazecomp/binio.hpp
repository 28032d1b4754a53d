#pragma once

#include <cstdint>
#include <string>

#include "gazecomp/common.hpp"

namespace gazecomp {

// Little-endian byte-level serialization helpers shared by the session and
// checkpoint file formats. Everything is buffered in memory and flushed with
// an atomic temp-file + rename so readers never observe partial writes.

class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(uint32_t v);
    void u64(uint64_t v);
    void f32(float v);
    void f64(double v);
    void str(const std::string& s);  // u32 length prefix + raw bytes
    void raw(const void* data, size_t n);

    const std::string& bytes() const { return buf_; }
    size_t size() const { return buf_.size(); }

private:
    std::string buf_;
};

class ByteReader {
public:
    explicit ByteReader(const std::string& buf) : buf_(buf) {}

    uint8_t u8();
    uint32_t u32();
    uint64_t u64();
    float f32();
    double f64();
    std::string str();
    void raw(void* out, size_t n);

    size_t offset() const { return pos_; }
    size_t remaining() const { return buf_.size() - pos_; }
    bool exhausted() const { return pos_ == buf_.size(); }

private:
    void need(size_t n);
    const std::string& buf_;
    size_t pos_ = 0;
};

uint32_t crc32(const void* data, size_t n);
inline uint32_t crc32(const std::string& s) { return crc32(s.data(), s.size()); }

// Writes to `<path>.tmp` then renames over `path`.
void atomic_write_file(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

}  // namespace gazecomp
