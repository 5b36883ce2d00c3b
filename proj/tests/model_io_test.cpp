#include "spca/model_io.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <limits>
#include <random>

using namespace spca;

namespace {

SparsePcaModel sample_model() {
  std::mt19937_64 gen(1);
  SparsePcaModel m{oracle::random_vector(3, gen), oracle::random_matrix(3, 2, gen)};
  m.mu(1) = -0.0;
  m.loadings(2, 1) = std::numeric_limits<double>::denorm_min();
  return m;
}

}  // namespace

TEST(ModelIo, LayoutIsLittleEndian) {
  SparsePcaModel m{(Vector(2) << 1.0, -2.0).finished(), (Matrix(2, 1) << 0.5, 0.25).finished()};
  const auto bytes = io::encode_model(m);
  ASSERT_EQ(bytes.size(), 16u + 8u * 4u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SPCA");
  const unsigned char header[12] = {1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0};
  EXPECT_EQ(std::memcmp(bytes.data() + 4, header, 12), 0);
  // 1.0 = 0x3FF0000000000000, low byte first
  const unsigned char one[8] = {0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
  EXPECT_EQ(std::memcmp(bytes.data() + 16, one, 8), 0);
  // loadings follow the mean: 0.5 = 0x3FE0000000000000
  EXPECT_EQ(bytes[16 + 16 + 7], 0x3F);
  EXPECT_EQ(bytes[16 + 16 + 6], 0xE0);
}

TEST(ModelIo, LoadingsAreColumnMajor) {
  SparsePcaModel m{Vector::Zero(2), (Matrix(2, 2) << 1, 2, 3, 4).finished()};
  const auto bytes = io::encode_model(m);
  io::detail::Reader r(std::span<const unsigned char>(bytes).subspan(32));
  EXPECT_EQ(r.f64(), 1.0);
  EXPECT_EQ(r.f64(), 3.0);
  EXPECT_EQ(r.f64(), 2.0);
  EXPECT_EQ(r.f64(), 4.0);
}

TEST(ModelIo, SparseRoundTripIsBitExact) {
  const SparsePcaModel m = sample_model();
  const SparsePcaModel back = io::decode_sparse_pca(io::encode_model(m));
  EXPECT_EQ(std::memcmp(back.mu.data(), m.mu.data(), sizeof(double) * 3), 0);
  EXPECT_EQ(std::memcmp(back.loadings.data(), m.loadings.data(), sizeof(double) * 6), 0);
  EXPECT_EQ(io::encode_model(back), io::encode_model(m));
}

TEST(ModelIo, PcaRoundTripThroughFile) {
  testutil::TempDir dir;
  std::mt19937_64 gen(2);
  const PcaModel m{oracle::random_vector(4, gen), oracle::random_matrix(4, 3, gen), Vector::Ones(3)};
  io::save_model(dir / "m.bin", m);
  EXPECT_EQ(io::peek_magic(dir / "m.bin"), "PCAM");
  const PcaModel back = io::load_pca(dir / "m.bin");
  EXPECT_EQ(back.mu, m.mu);
  EXPECT_EQ(back.components, m.components);
  EXPECT_THROW(io::load_sparse_pca(dir / "m.bin"), ModelFormatError);
}

TEST(ModelIo, RejectsDamagedFiles) {
  auto bytes = io::encode_model(sample_model());
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(io::decode_sparse_pca(truncated), ModelFormatError);
  auto longer = bytes;
  longer.push_back(0);
  EXPECT_THROW(io::decode_sparse_pca(longer), ModelFormatError);
  auto version = bytes;
  version[4] = 2;
  EXPECT_THROW(io::decode_sparse_pca(version), ModelFormatError);
  EXPECT_THROW(io::decode_sparse_pca(std::vector<unsigned char>{'S', 'P'}), ModelFormatError);
}

TEST(ModelIo, MissingFile) {
  testutil::TempDir dir;
  EXPECT_THROW(io::load_sparse_pca(dir / "absent.bin"), IoError);
  EXPECT_THROW(io::peek_magic(dir / "absent.bin"), IoError);
}

TEST(ModelIo, InconsistentModel) {
  const SparsePcaModel m{Vector::Zero(3), Matrix::Zero(2, 1)};
  EXPECT_THROW(io::encode_model(m), ShapeMismatch);
}
