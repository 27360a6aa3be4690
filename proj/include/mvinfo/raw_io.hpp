#pragma once

#include <bit>
#include <filesystem>
#include <fstream>

#include "mvinfo/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "raw array files are little-endian");

namespace mvinfo {

inline void write_raw(const std::filesystem::path& path, const void* data, std::size_t bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) throw io_error("short write to " + path.string());
}

inline void read_raw(const std::filesystem::path& path, void* data, std::size_t bytes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
    if (in.gcount() != static_cast<std::streamsize>(bytes)) {
        throw io_error("short read from " + path.string());
    }
}

} // namespace mvinfo
