#pragma once

#include "esn/common.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

// Little-endian primitives shared by the FEAT1, ESNM1 and WAV readers/writers.

namespace esn::detail {

static_assert(std::endian::native == std::endian::little,
              "binary containers are written little-endian; big-endian hosts are unsupported");

template <typename T>
void write_raw(std::ostream& out, const T& value)
{
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

inline void write_u8(std::ostream& out, std::uint8_t v) { write_raw(out, v); }
inline void write_u16(std::ostream& out, std::uint16_t v) { write_raw(out, v); }
inline void write_u32(std::ostream& out, std::uint32_t v) { write_raw(out, v); }
inline void write_u64(std::ostream& out, std::uint64_t v) { write_raw(out, v); }
inline void write_f32(std::ostream& out, float v) { write_raw(out, v); }
inline void write_f64(std::ostream& out, double v) { write_raw(out, v); }

template <typename T>
T read_raw(std::istream& in, const std::string& what)
{
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw io_error("truncated stream while reading " + what);
    return value;
}

inline std::uint8_t read_u8(std::istream& in, const std::string& what)
{
    return read_raw<std::uint8_t>(in, what);
}
inline std::uint16_t read_u16(std::istream& in, const std::string& what)
{
    return read_raw<std::uint16_t>(in, what);
}
inline std::uint32_t read_u32(std::istream& in, const std::string& what)
{
    return read_raw<std::uint32_t>(in, what);
}
inline std::uint64_t read_u64(std::istream& in, const std::string& what)
{
    return read_raw<std::uint64_t>(in, what);
}
inline float read_f32(std::istream& in, const std::string& what)
{
    return read_raw<float>(in, what);
}
inline double read_f64(std::istream& in, const std::string& what)
{
    return read_raw<double>(in, what);
}

}  // namespace esn::detail
