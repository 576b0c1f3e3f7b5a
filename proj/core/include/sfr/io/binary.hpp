#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "sfr/errors.hpp"

namespace sfr::io {

// Little-endian primitive encoding shared by the dataset and checkpoint formats.
class LeWriter {
public:
    explicit LeWriter(std::ostream& os) : os_(os) {}

    template <typename T>
        requires std::is_unsigned_v<T>
    void put(T v) {
        char buf[sizeof(T)];
        for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
        os_.write(buf, sizeof(T));
    }
    void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
    void put_bytes(std::string_view s) { os_.write(s.data(), static_cast<std::streamsize>(s.size())); }

private:
    std::ostream& os_;
};

class LeReader {
public:
    LeReader(std::istream& is, std::string context) : is_(is), context_(std::move(context)) {}

    template <typename T>
        requires std::is_unsigned_v<T>
    T get() {
        unsigned char buf[sizeof(T)];
        read(reinterpret_cast<char*>(buf), sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
        return v;
    }
    double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    std::string get_bytes(std::size_t n) {
        std::string s(n, '\0');
        read(s.data(), n);
        return s;
    }

private:
    void read(char* dst, std::size_t n) {
        is_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is_.gcount()) != n) throw FormatError(context_ + ": unexpected end of file");
    }

    std::istream& is_;
    std::string context_;
};

}  // namespace sfr::io
