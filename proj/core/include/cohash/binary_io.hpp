#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "cohash/error.hpp"

namespace cohash::io {

// All on-disk formats are little-endian; raw reads/writes below rely on it.
static_assert(std::endian::native == std::endian::little,
              "on-disk formats require a little-endian host");

template <typename T>
inline void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
inline void write_array(std::ostream& os, const T* data, std::size_t count) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
inline T read_pod(std::istream& is, const char* what) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error(std::string(what) + ": truncated file");
    return v;
}

template <typename T>
inline void read_array(std::istream& is, T* data, std::size_t count, const char* what) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
    if (!is) throw Error(std::string(what) + ": truncated file");
}

inline void expect_magic(std::istream& is, const char magic[4], const char* what) {
    char got[4] = {0, 0, 0, 0};
    is.read(got, 4);
    if (!is || std::memcmp(got, magic, 4) != 0)
        throw Error(std::string(what) + ": bad magic");
}

/// Fails if the stream holds anything beyond what was parsed.
inline void expect_eof(std::istream& is, const char* what) {
    is.peek();
    if (!is.eof()) throw Error(std::string(what) + ": trailing data after payload");
}

/// Writes through a temporary sibling file and renames into place, so a
/// failure never leaves a partial file at the destination. `fn(os)` does the
/// actual writing.
template <typename Fn>
inline void atomic_write(const std::string& path, const char* what, bool binary, Fn&& fn) {
    const std::string tmp = path + ".tmp";
    {
        auto mode = std::ios::trunc | (binary ? std::ios::binary : std::ios::openmode{});
        std::ofstream os(tmp, mode);
        if (!os) throw Error(std::string(what) + ": cannot open '" + tmp + "' for writing");
        fn(os);
        os.flush();
        if (!os) {
            std::remove(tmp.c_str());
            throw Error(std::string(what) + ": write failed for '" + path + "'");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw Error(std::string(what) + ": cannot move temporary file into place at '" + path +
                    "'");
    }
}

}  // namespace cohash::io
