#pragma once

// Binary array file, all integers little-endian:
//
//   offset  size  field
//        0     8  magic "WAKEARR1"
//        8     2  format version (1)
//       10     1  kind: 0 general, 1 modified
//       11     1  source: 0 lazy (seeded), 1 explicit
//       12     4  n
//       16     4  b
//       20     8  c numerator
//       28     8  c denominator
//       36     8  length (positions per station and channel)
//       44     8  lazy: seed / explicit: payload byte count
//       52     -  explicit only: ceil(n*b*length / 8) payload bytes, bits in
//                 (station, channel, position) order, least significant bit first
//
// Nothing may follow the payload.

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "wakeup/error.hpp"
#include "wakeup/schedules.hpp"

namespace wakeup {

inline constexpr std::array<char, 8> kArrayMagic = {'W', 'A', 'K', 'E', 'A', 'R', 'R', '1'};
inline constexpr std::uint16_t kArrayFormatVersion = 1;
inline constexpr std::size_t kArrayHeaderSize = 52;

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
  }
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  template <typename T>
  T get(const char* field) {
    if (data_.size() - pos_ < sizeof(T)) {
      throw FormatError(std::string("truncated header reading ") + field, pos_);
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::span<const std::uint8_t> rest() const { return data_.subspan(pos_); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_array(const TransmissionArray& array) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kArrayMagic.begin(), kArrayMagic.end());
  detail::put_le<std::uint16_t>(out, kArrayFormatVersion);
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(array.kind()));
  detail::put_le<std::uint8_t>(out, array.is_lazy() ? 0 : 1);
  detail::put_le<std::uint32_t>(out, array.n());
  detail::put_le<std::uint32_t>(out, array.b());
  detail::put_le<std::uint64_t>(out, array.schedule().c().num);
  detail::put_le<std::uint64_t>(out, array.schedule().c().den);
  detail::put_le<std::uint64_t>(out, array.length());
  if (array.is_lazy()) {
    detail::put_le<std::uint64_t>(out, array.seed());
  } else {
    const auto& payload = array.payload();
    detail::put_le<std::uint64_t>(out, payload.size());
    out.insert(out.end(), payload.begin(), payload.end());
  }
  return out;
}

inline TransmissionArray decode_array(std::span<const std::uint8_t> data) {
  detail::ByteReader in(data);
  if (data.size() < kArrayMagic.size() ||
      std::memcmp(data.data(), kArrayMagic.data(), kArrayMagic.size()) != 0) {
    throw FormatError("bad magic, not an array file", 0);
  }
  for (std::size_t i = 0; i < kArrayMagic.size(); ++i) in.get<std::uint8_t>("magic");

  const auto version = in.get<std::uint16_t>("version");
  if (version != kArrayFormatVersion) {
    throw FormatError("unsupported format version " + std::to_string(version), 8);
  }
  const auto kind_byte = in.get<std::uint8_t>("kind");
  if (kind_byte > 1) throw FormatError("unknown array kind", 10);
  const auto source = in.get<std::uint8_t>("source");
  if (source > 1) throw FormatError("unknown source flag", 11);
  const auto n = in.get<std::uint32_t>("n");
  const auto b = in.get<std::uint32_t>("b");
  const auto c_num = in.get<std::uint64_t>("c numerator");
  const auto c_den = in.get<std::uint64_t>("c denominator");
  const auto length = in.get<std::uint64_t>("length");
  const auto tail = in.get<std::uint64_t>(source == 0 ? "seed" : "payload size");

  auto schedule = [&] {
    try {
      return SectionSchedule::make(static_cast<ArrayKind>(kind_byte), n, b, Rational{c_num, c_den});
    } catch (const InvalidInput& e) {
      throw FormatError(std::string("invalid schedule parameters: ") + e.what(), 12);
    }
  }();

  if (source == 0) {
    if (length != schedule.length()) {
      throw FormatError("lazy array length disagrees with its schedule", 36);
    }
    if (in.remaining() != 0) throw FormatError("trailing bytes after header", in.pos());
    return TransmissionArray::sampled(schedule, tail);
  }

  if (length > schedule.length()) {
    throw FormatError("array length exceeds schedule length", 36);
  }
  const std::uint64_t expected = (std::uint64_t{n} * b * length + 7) / 8;
  if (tail != expected) {
    throw FormatError("declared payload size " + std::to_string(tail) +
                          " disagrees with n*b*length (expected " + std::to_string(expected) + ")",
                      44);
  }
  if (in.remaining() < expected) throw FormatError("truncated payload", data.size());
  if (in.remaining() > expected) {
    throw FormatError("trailing bytes after payload", in.pos() + expected);
  }
  auto rest = in.rest();
  return TransmissionArray::from_payload(schedule, length,
                                         std::vector<std::uint8_t>(rest.begin(), rest.end()));
}

inline void save_array(const TransmissionArray& array, const std::string& path) {
  const auto bytes = encode_array(array);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path);
}

inline TransmissionArray load_array(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_array(bytes);
}

}  // namespace wakeup
