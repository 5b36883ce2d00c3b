#pragma once

// Binary model container:
//   4 bytes magic ("SPCA" sparse PCA, "PCAM" PCA)
//   u32 format version (1), u32 p, u32 dim
//   p doubles (mean), p*dim doubles (loadings, column-major)
// All integers and IEEE-754 doubles are little-endian.

#include "spca/admm.hpp"
#include "spca/core.hpp"
#include "spca/pca.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spca::io {

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::string_view kSparsePcaMagic = "SPCA";
inline constexpr std::string_view kPcaMagic = "PCAM";

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

inline void put_f64(std::vector<unsigned char>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
}

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_ + b]) << (8 * b);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_ + b]) << (8 * b);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  std::string_view magic() {
    need(4);
    std::string_view m(reinterpret_cast<const char*>(bytes_.data()) + pos_, 4);
    pos_ += 4;
    return m;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ModelFormatError("model file is truncated");
  }
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

inline std::vector<unsigned char> encode(std::string_view magic, const Vector& mu, const Matrix& cols) {
  if (mu.size() != cols.rows()) throw ShapeMismatch("model mean and loadings disagree on p");
  if (mu.size() > std::numeric_limits<std::uint32_t>::max() ||
      cols.cols() > std::numeric_limits<std::uint32_t>::max())
    throw ShapeMismatch("model too large for the container");
  std::vector<unsigned char> out(magic.begin(), magic.end());
  put_u32(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(mu.size()));
  put_u32(out, static_cast<std::uint32_t>(cols.cols()));
  for (Index i = 0; i < mu.size(); ++i) put_f64(out, mu(i));
  for (Index j = 0; j < cols.cols(); ++j)
    for (Index i = 0; i < cols.rows(); ++i) put_f64(out, cols(i, j));
  return out;
}

inline std::pair<Vector, Matrix> decode(std::string_view magic, std::span<const unsigned char> bytes) {
  Reader r(bytes);
  const auto m = r.magic();
  if (m != magic)
    throw ModelFormatError("bad magic '" + std::string(m) + "', expected '" + std::string(magic) + "'");
  const auto version = r.u32();
  if (version != kModelFormatVersion)
    throw ModelFormatError("unsupported model format version " + std::to_string(version));
  const Index p = r.u32();
  const Index dim = r.u32();
  if (bytes.size() != 16 + 8 * static_cast<std::size_t>(p) * (1 + static_cast<std::size_t>(dim)))
    throw ModelFormatError("model size does not match header (p = " + std::to_string(p) +
                           ", dim = " + std::to_string(dim) + ")");
  Vector mu(p);
  for (Index i = 0; i < p; ++i) mu(i) = r.f64();
  Matrix cols(p, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < p; ++i) cols(i, j) = r.f64();
  return {std::move(mu), std::move(cols)};
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline std::vector<unsigned char> encode_model(const SparsePcaModel& m) {
  return detail::encode(kSparsePcaMagic, m.mu, m.loadings);
}

inline std::vector<unsigned char> encode_model(const PcaModel& m) {
  return detail::encode(kPcaMagic, m.mu, m.components);
}

inline SparsePcaModel decode_sparse_pca(std::span<const unsigned char> bytes) {
  auto [mu, cols] = detail::decode(kSparsePcaMagic, bytes);
  return {std::move(mu), std::move(cols)};
}

/// Explained variances are not stored; the decoded model has none.
inline PcaModel decode_pca(std::span<const unsigned char> bytes) {
  auto [mu, cols] = detail::decode(kPcaMagic, bytes);
  return {std::move(mu), std::move(cols), Vector()};
}

template <class Model>
void save_model(const std::filesystem::path& path, const Model& model) {
  detail::write_file(path, encode_model(model));
}

inline SparsePcaModel load_sparse_pca(const std::filesystem::path& path) {
  return decode_sparse_pca(detail::read_file(path));
}

inline PcaModel load_pca(const std::filesystem::path& path) { return decode_pca(detail::read_file(path)); }

/// Magic of a model file, for dispatching on its kind.
inline std::string peek_magic(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 4> m{};
  if (!in.read(m.data(), 4)) throw ModelFormatError("model file is truncated");
  return std::string(m.data(), 4);
}

}  // namespace spca::io
