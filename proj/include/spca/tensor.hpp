#pragma once

// Three-mode image tensors and the mode-n unfold/refold, slice/merge and
// image flattening operations.
//
// A Tensor3 of dims (n1, n2, n3) is a stack of n3 images of n1 rows by n2
// columns. Storage is row-major per image with images contiguous, so entry
// (i1, i2, i3) lives at i3*n1*n2 + i1*n2 + i2.
//
// Unfolding row order (earlier modes vary fastest):
//   mode 1: (n2*n3) x n1, row = i3*n2 + i2, column = i1
//   mode 2: (n1*n3) x n2, row = i3*n1 + i1, column = i2
//   mode 3: (n1*n2) x n3, row = i2*n1 + i1, column = i3

#include "spca/core.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace spca {

struct Dims3 {
  Index n1 = 0;
  Index n2 = 0;
  Index n3 = 0;
  friend bool operator==(const Dims3&, const Dims3&) = default;
  Index size() const { return n1 * n2 * n3; }
  Index operator[](int mode) const { return mode == 1 ? n1 : mode == 2 ? n2 : n3; }
};

inline std::string to_string(const Dims3& d) {
  return std::to_string(d.n1) + "x" + std::to_string(d.n2) + "x" + std::to_string(d.n3);
}

class Tensor3 {
 public:
  Tensor3() = default;

  explicit Tensor3(Dims3 dims, double fill = 0.0) : dims_(dims) {
    if (dims.n1 < 1 || dims.n2 < 1 || dims.n3 < 1)
      throw ShapeMismatch("tensor dimensions must be positive, got " + to_string(dims));
    data_.assign(static_cast<std::size_t>(dims.size()), fill);
  }

  Tensor3(Dims3 dims, std::vector<double> data) : dims_(dims), data_(std::move(data)) {
    if (dims.n1 < 1 || dims.n2 < 1 || dims.n3 < 1)
      throw ShapeMismatch("tensor dimensions must be positive, got " + to_string(dims));
    if (static_cast<Index>(data_.size()) != dims.size())
      throw ShapeMismatch("tensor " + to_string(dims) + " needs " + std::to_string(dims.size()) +
                          " entries, got " + std::to_string(data_.size()));
  }

  const Dims3& dims() const { return dims_; }
  Index n1() const { return dims_.n1; }
  Index n2() const { return dims_.n2; }
  Index n3() const { return dims_.n3; }

  double& operator()(Index i1, Index i2, Index i3) { return data_[offset(i1, i2, i3)]; }
  double operator()(Index i1, Index i2, Index i3) const { return data_[offset(i1, i2, i3)]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  /// Image i3 as an n1 x n2 matrix.
  Matrix slab(Index i3) const {
    Matrix m(dims_.n1, dims_.n2);
    for (Index r = 0; r < dims_.n1; ++r)
      for (Index c = 0; c < dims_.n2; ++c) m(r, c) = (*this)(r, c, i3);
    return m;
  }

  void set_slab(Index i3, const Matrix& img) {
    if (img.rows() != dims_.n1 || img.cols() != dims_.n2)
      throw ShapeMismatch("slab must be " + std::to_string(dims_.n1) + "x" +
                          std::to_string(dims_.n2));
    for (Index r = 0; r < dims_.n1; ++r)
      for (Index c = 0; c < dims_.n2; ++c) (*this)(r, c, i3) = img(r, c);
  }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t offset(Index i1, Index i2, Index i3) const {
    return static_cast<std::size_t>((i3 * dims_.n1 + i1) * dims_.n2 + i2);
  }

  Dims3 dims_;
  std::vector<double> data_;
};

/// Images per person along mode 3.
class PersonPartition {
 public:
  PersonPartition() = default;
  explicit PersonPartition(std::vector<Index> counts) : counts_(std::move(counts)) {
    if (counts_.empty()) throw InvalidArgument("partition needs at least one person");
    for (Index c : counts_)
      if (c < 1) throw InvalidArgument("partition counts must be >= 1");
  }

  /// `persons` blocks of `per_person` images each.
  static PersonPartition uniform(Index persons, Index per_person) {
    return PersonPartition(std::vector<Index>(static_cast<std::size_t>(persons), per_person));
  }

  const std::vector<Index>& counts() const { return counts_; }
  std::size_t size() const { return counts_.size(); }
  Index total() const {
    Index t = 0;
    for (Index c : counts_) t += c;
    return t;
  }
  Index min_count() const {
    Index m = counts_.empty() ? 0 : counts_.front();
    for (Index c : counts_) m = std::min(m, c);
    return m;
  }

  friend bool operator==(const PersonPartition&, const PersonPartition&) = default;

 private:
  std::vector<Index> counts_;
};

inline void check_mode(int mode) {
  if (mode < 1 || mode > 3) throw InvalidArgument("mode must be 1, 2 or 3");
}

/// Shape (rows, cols) of the mode-`mode` unfolding of a tensor with `dims`.
inline std::pair<Index, Index> unfolding_shape(const Dims3& dims, int mode) {
  check_mode(mode);
  switch (mode) {
    case 1: return {dims.n2 * dims.n3, dims.n1};
    case 2: return {dims.n1 * dims.n3, dims.n2};
    default: return {dims.n1 * dims.n2, dims.n3};
  }
}

namespace detail {
// Row index of entry (i1, i2, i3) in the mode-`mode` unfolding.
inline Index unfold_row(const Dims3& d, int mode, Index i1, Index i2, Index i3) {
  switch (mode) {
    case 1: return i3 * d.n2 + i2;
    case 2: return i3 * d.n1 + i1;
    default: return i2 * d.n1 + i1;
  }
}
inline Index unfold_col(int mode, Index i1, Index i2, Index i3) {
  return mode == 1 ? i1 : mode == 2 ? i2 : i3;
}
}  // namespace detail

inline Matrix unfold(const Tensor3& t, int mode) {
  const auto [rows, cols] = unfolding_shape(t.dims(), mode);
  Matrix m(rows, cols);
  const Dims3& d = t.dims();
  for (Index i3 = 0; i3 < d.n3; ++i3)
    for (Index i1 = 0; i1 < d.n1; ++i1)
      for (Index i2 = 0; i2 < d.n2; ++i2)
        m(detail::unfold_row(d, mode, i1, i2, i3), detail::unfold_col(mode, i1, i2, i3)) =
            t(i1, i2, i3);
  return m;
}

inline Tensor3 refold(const Matrix& m, int mode, const Dims3& dims) {
  const auto [rows, cols] = unfolding_shape(dims, mode);
  if (m.rows() != rows || m.cols() != cols)
    throw ShapeMismatch("cannot refold " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + " matrix along mode " + std::to_string(mode) +
                        " into " + to_string(dims));
  Tensor3 t(dims);
  for (Index i3 = 0; i3 < dims.n3; ++i3)
    for (Index i1 = 0; i1 < dims.n1; ++i1)
      for (Index i2 = 0; i2 < dims.n2; ++i2)
        t(i1, i2, i3) =
            m(detail::unfold_row(dims, mode, i1, i2, i3), detail::unfold_col(mode, i1, i2, i3));
  return t;
}

inline std::vector<Tensor3> slice_mode3(const Tensor3& t, const PersonPartition& part) {
  if (part.total() != t.n3())
    throw ShapeMismatch("partition covers " + std::to_string(part.total()) +
                        " images but tensor has " + std::to_string(t.n3()));
  std::vector<Tensor3> out;
  out.reserve(part.size());
  const auto slab_size = static_cast<std::ptrdiff_t>(t.n1() * t.n2());
  auto src = t.data().begin();
  for (Index count : part.counts()) {
    std::vector<double> chunk(src, src + slab_size * count);
    src += slab_size * count;
    out.emplace_back(Dims3{t.n1(), t.n2(), count}, std::move(chunk));
  }
  return out;
}

inline Tensor3 merge_mode3(std::span<const Tensor3> parts) {
  if (parts.empty()) throw ShapeMismatch("merge_mode3 needs at least one part");
  const Index n1 = parts.front().n1();
  const Index n2 = parts.front().n2();
  Index n3 = 0;
  for (const auto& p : parts) {
    if (p.n1() != n1 || p.n2() != n2)
      throw ShapeMismatch("cannot merge " + to_string(p.dims()) + " with images of " +
                          std::to_string(n1) + "x" + std::to_string(n2));
    n3 += p.n3();
  }
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(n1 * n2 * n3));
  for (const auto& p : parts) data.insert(data.end(), p.data().begin(), p.data().end());
  return Tensor3(Dims3{n1, n2, n3}, std::move(data));
}

/// Row-major concatenation of an image into a 1 x (rows*cols) row vector.
inline Matrix flatten_image(const Matrix& img) {
  Matrix row(1, img.size());
  for (Index r = 0; r < img.rows(); ++r)
    for (Index c = 0; c < img.cols(); ++c) row(0, r * img.cols() + c) = img(r, c);
  return row;
}

/// One flattened image per row, in mode-3 order.
inline Matrix flatten_slabs(const Tensor3& t) {
  const Index len = t.n1() * t.n2();
  Matrix rows(t.n3(), len);
  auto data = t.data();
  for (Index i3 = 0; i3 < t.n3(); ++i3)
    for (Index k = 0; k < len; ++k) rows(i3, k) = data[static_cast<std::size_t>(i3 * len + k)];
  return rows;
}

}  // namespace spca
