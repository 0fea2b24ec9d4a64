#include "hqrc/binary_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hqrc/errors.hpp"

namespace hqrc::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
    std::reverse(raw.begin(), raw.end());
    return std::bit_cast<T>(raw);
  }
  return v;
}

template <typename T>
void append(std::vector<std::uint8_t>& out, T v) {
  v = to_little(v);
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

}  // namespace

void ByteWriter::put_u32(std::uint32_t v) { append(bytes_, v); }
void ByteWriter::put_u64(std::uint64_t v) { append(bytes_, v); }
void ByteWriter::put_f32(float v) { append(bytes_, v); }
void ByteWriter::put_f64(double v) { append(bytes_, v); }
void ByteWriter::put_bytes(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
void ByteWriter::put_f64s(std::span<const double> v) {
  bytes_.reserve(bytes_.size() + v.size() * sizeof(double));
  for (double x : v) put_f64(x);
}

void ByteReader::need(std::size_t n, std::string_view field) const {
  if (bytes_.size() - pos_ < n) {
    throw ParseError("truncated input while reading '" + std::string(field) + "'", pos_);
  }
}

namespace {
template <typename T>
T take(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return to_little(v);
}
}  // namespace

std::uint8_t ByteReader::u8(std::string_view field) {
  need(1, field);
  return bytes_[pos_++];
}
std::uint32_t ByteReader::u32(std::string_view field) {
  need(4, field);
  return take<std::uint32_t>(bytes_, pos_);
}
std::uint64_t ByteReader::u64(std::string_view field) {
  need(8, field);
  return take<std::uint64_t>(bytes_, pos_);
}
float ByteReader::f32(std::string_view field) {
  need(4, field);
  return take<float>(bytes_, pos_);
}
double ByteReader::f64(std::string_view field) {
  need(8, field);
  return take<double>(bytes_, pos_);
}
std::string ByteReader::bytes(std::size_t n, std::string_view field) {
  need(n, field);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}
void ByteReader::f64s(std::span<double> out, std::string_view field) {
  need(out.size() * sizeof(double), field);
  for (double& x : out) x = take<double>(bytes_, pos_);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace hqrc::io
