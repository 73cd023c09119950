// Copyright 2026 drift authors. Apache 2.0 License.
//
// Flat binary checkpoint: a version header, an embedded config blob, then an
// ordered list of (name, shape, float32 little-endian values) records.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "drift/common.hpp"
#include "drift/numcore/tensor.hpp"

namespace drift::numcore {

struct CheckpointRecord {
    std::string name;
    std::vector<int> shape;
    std::vector<float> values;
};

struct Checkpoint {
    std::uint32_t version = 1;
    std::string config_json;
    std::vector<CheckpointRecord> records;

    const CheckpointRecord* find(const std::string& name) const {
        for (const auto& r : records)
            if (r.name == name) return &r;
        return nullptr;
    }
};

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("checkpoint: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline constexpr char kMagic[8] = {'D', 'R', 'I', 'F', 'T', 'C', 'K', '1'};

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("checkpoint: cannot open for write: " + path);
    os.write(detail::kMagic, 8);
    detail::write_u32(os, ck.version);
    detail::write_u32(os, static_cast<std::uint32_t>(ck.config_json.size()));
    os.write(ck.config_json.data(), static_cast<std::streamsize>(ck.config_json.size()));
    detail::write_u32(os, static_cast<std::uint32_t>(ck.records.size()));
    for (const auto& r : ck.records) {
        detail::write_u32(os, static_cast<std::uint32_t>(r.name.size()));
        os.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
        detail::write_u32(os, static_cast<std::uint32_t>(r.shape.size()));
        std::size_t count = 1;
        for (int d : r.shape) {
            detail::write_u32(os, static_cast<std::uint32_t>(d));
            count *= static_cast<std::size_t>(d);
        }
        if (count != r.values.size())
            throw std::invalid_argument("checkpoint: record '" + r.name + "' shape/value mismatch");
        static_assert(sizeof(float) == 4);
        os.write(reinterpret_cast<const char*>(r.values.data()),
                 static_cast<std::streamsize>(4 * r.values.size()));
    }
    if (!os) throw IoError("checkpoint: write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, detail::kMagic, 8) != 0)
        throw std::invalid_argument("checkpoint: bad magic in " + path);
    Checkpoint ck;
    ck.version = detail::read_u32(is);
    std::uint32_t cfg_len = detail::read_u32(is);
    ck.config_json.resize(cfg_len);
    is.read(ck.config_json.data(), cfg_len);
    std::uint32_t n = detail::read_u32(is);
    ck.records.resize(n);
    for (auto& r : ck.records) {
        std::uint32_t name_len = detail::read_u32(is);
        r.name.resize(name_len);
        is.read(r.name.data(), name_len);
        std::uint32_t ndim = detail::read_u32(is);
        r.shape.resize(ndim);
        std::size_t count = 1;
        for (auto& d : r.shape) {
            d = static_cast<int>(detail::read_u32(is));
            count *= static_cast<std::size_t>(d);
        }
        r.values.resize(count);
        is.read(reinterpret_cast<char*>(r.values.data()), static_cast<std::streamsize>(4 * count));
        if (!is) throw IoError("checkpoint: truncated record in " + path);
    }
    return ck;
}

template <class S>
CheckpointRecord to_record(const std::string& name, const Tensor<S>& t) {
    CheckpointRecord r;
    r.name = name;
    r.shape = t.shape();
    r.values.reserve(t.data.size());
    for (S v : t.data) r.values.push_back(static_cast<float>(v));
    return r;
}

/// Copies a record into an existing tensor; rejects name absence upstream and
/// shape mismatch here.
template <class S>
void load_record_into(const CheckpointRecord& r, Tensor<S>& t) {
    if (r.shape != t.shape())
        throw std::invalid_argument("checkpoint: shape mismatch for record '" + r.name + "'");
    for (std::size_t i = 0; i < r.values.size(); ++i) t.data[i] = static_cast<S>(r.values[i]);
}

}  // namespace drift::numcore
