#ifndef FGSAN_SRC_BINARY_IO_HPP
#define FGSAN_SRC_BINARY_IO_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <istream>
#include <ostream>

namespace fgsan::detail {

template <typename T>
T to_little(T value) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return value;
}

template <typename T>
void write_le(std::ostream& out, T value) {
    const T le = to_little(value);
    out.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

/// Reads one little-endian value; throws `Error` on a short read.
template <typename T, typename Error>
T read_le(std::istream& in, const char* what) {
    T raw{};
    in.read(reinterpret_cast<char*>(&raw), sizeof(T));
    if (!in) {
        throw Error(what);
    }
    return to_little(raw);
}

}  // namespace fgsan::detail

#endif  // FGSAN_SRC_BINARY_IO_HPP
