#pragma once

// Little-endian byte packing shared by the model and SVM file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ip2cp/error.hpp"

namespace ip2cp::detail {

inline std::size_t checked_mul(std::initializer_list<std::size_t> factors) {
    std::size_t out = 1;
    for (std::size_t f : factors) {
        if (f != 0 && out > std::numeric_limits<std::size_t>::max() / f)
            throw FormatError("declared parameter count overflows");
        out *= f;
    }
    return out;
}

class ByteWriter {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void floats(std::span<const float> v) {
        for (float f : v) f32(f);
    }
    std::vector<std::uint8_t> take() && { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> data, std::string what) : data_(data), what_(std::move(what)) {}

    void need(std::size_t n) const {
        if (n > data_.size() - pos_)
            throw TruncatedFileError("truncated " + what_ + ": expected at least " + std::to_string(pos_ + n) +
                                         " bytes, found " + std::to_string(data_.size()),
                                     pos_ + n, data_.size());
    }
    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::vector<float> floats(std::size_t n) {
        if (n > (data_.size() - pos_) / 4) need(checked_mul({n, 4}));
        std::vector<float> out(n);
        for (auto& f : out) f = f32();
        return out;
    }
    void expect_end() const {
        if (pos_ != data_.size())
            throw FormatError(what_ + " has " + std::to_string(data_.size() - pos_) + " unexpected trailing bytes");
    }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    std::string what_;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) throw IoError("cannot write " + path.string());
}

}  // namespace ip2cp::detail
