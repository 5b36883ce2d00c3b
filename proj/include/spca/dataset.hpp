#pragma once

// Labeled image datasets: CSV and binary-PGM ingestion, writers that
// round-trip them, and a seeded synthetic generator.
//
// CSV: one image per line, "label,v_0,...,v_{h*w-1}" with pixels in
// row-major order. Labels must form non-decreasing contiguous blocks.
//
// PGM directory: binary "P5" images (maxval <= 255) plus a labels file with
// one "<filename> <label>" pair per line ('#' starts a comment). Images are
// ordered by (label, filename).

#include "spca/core.hpp"
#include "spca/tensor.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace spca {

struct Dataset {
  Tensor3 tensor;
  std::vector<int> labels;  // aligned with mode 3
  PersonPartition partition;
  std::vector<std::string> names;  // source file names for PGM datasets, else empty

  int n_classes() const { return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1; }
  Index height() const { return tensor.n1(); }
  Index width() const { return tensor.n2(); }
  Index size() const { return tensor.n3(); }
};

/// Partition of contiguous label blocks; throws NonContiguousLabels unless
/// labels are non-decreasing.
inline PersonPartition partition_from_labels(const std::vector<int>& labels) {
  if (labels.empty()) throw InvalidArgument("dataset has no images");
  std::vector<Index> counts{1};
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] < labels[i - 1])
      throw NonContiguousLabels("label " + std::to_string(labels[i]) + " at image " + std::to_string(i) +
                                " follows label " + std::to_string(labels[i - 1]) +
                                "; labels must form non-decreasing blocks");
    if (labels[i] == labels[i - 1])
      ++counts.back();
    else
      counts.push_back(1);
  }
  return PersonPartition(std::move(counts));
}

inline Dataset make_dataset(Tensor3 tensor, std::vector<int> labels, std::vector<std::string> names = {}) {
  if (static_cast<Index>(labels.size()) != tensor.n3())
    throw ShapeMismatch("labels length does not match image count");
  for (int l : labels)
    if (l < 0) throw InvalidArgument("labels must be non-negative");
  PersonPartition part = partition_from_labels(labels);
  return Dataset{std::move(tensor), std::move(labels), std::move(part), std::move(names)};
}

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw IoError("number formatting failed");
  return std::string(buf, end);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace detail

inline Dataset parse_csv_dataset(std::istream& in, Index height, Index width) {
  if (height < 1 || width < 1) throw InvalidArgument("image height and width must be >= 1");
  const Index pixels = height * width;
  std::vector<double> data;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = detail::trim(line);
    if (rest.empty()) continue;
    const auto where = " on line " + std::to_string(line_no);
    Index fields = 0;
    bool first = true;
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view field = rest.substr(0, comma);
      if (first) {
        int label = 0;
        if (!detail::parse_number(field, label) || label < 0)
          throw ParseError("bad label '" + std::string(field) + "'" + where);
        labels.push_back(label);
        first = false;
      } else {
        double v = 0.0;
        if (!detail::parse_number(field, v) || !std::isfinite(v))
          throw ParseError("bad pixel value '" + std::string(field) + "'" + where);
        data.push_back(v);
        ++fields;
      }
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields != pixels)
      throw BadPixelCount("expected " + std::to_string(pixels) + " pixels, found " + std::to_string(fields) + where);
  }
  if (labels.empty()) throw ParseError("dataset file has no images");
  // CSV pixels are row-major per image, which is the tensor's storage order.
  Tensor3 t(Dims3{height, width, static_cast<Index>(labels.size())}, std::move(data));
  return make_dataset(std::move(t), std::move(labels));
}

inline Dataset load_csv_dataset(const std::filesystem::path& path, Index height, Index width) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return parse_csv_dataset(in, height, width);
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

inline void write_csv_rows(std::ostream& out, const Matrix& rows, const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != rows.rows()) throw ShapeMismatch("labels length does not match rows");
  for (Index i = 0; i < rows.rows(); ++i) {
    out << labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < rows.cols(); ++j) out << ',' << format_double(rows(i, j));
    out << '\n';
  }
}

inline void save_csv_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv_rows(out, flatten_slabs(ds.tensor), ds.labels);
  if (!out) throw IoError("write failed for " + path.string());
}

/// Labeled feature rows from a CSV whose width is whatever each line holds
/// (all lines must agree). Used for already-reduced feature files.
inline std::pair<Matrix, std::vector<int>> load_csv_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  Index width = -1;
  std::vector<double> data;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = detail::trim(line);
    if (rest.empty()) continue;
    const auto where = path.string() + " line " + std::to_string(line_no);
    auto comma = rest.find(',');
    int label = 0;
    if (!detail::parse_number(rest.substr(0, comma), label) || label < 0)
      throw ParseError("bad label in " + where);
    labels.push_back(label);
    Index fields = 0;
    while (comma != std::string_view::npos) {
      rest.remove_prefix(comma + 1);
      comma = rest.find(',');
      double v = 0.0;
      if (!detail::parse_number(rest.substr(0, comma), v) || !std::isfinite(v))
        throw ParseError("bad value in " + where);
      data.push_back(v);
      ++fields;
    }
    if (width < 0) width = fields;
    if (fields != width || fields == 0)
      throw BadPixelCount("expected " + std::to_string(width) + " values, found " + std::to_string(fields) +
                          " in " + where);
  }
  if (labels.empty()) throw ParseError(path.string() + " has no rows");
  Matrix m(static_cast<Index>(labels.size()), width);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < width; ++j) m(i, j) = data[static_cast<std::size_t>(i * width + j)];
  return {std::move(m), std::move(labels)};
}

// --- PGM ---------------------------------------------------------------

struct PgmImage {
  Matrix pixels;  // scaled to [0, 1]
  int maxval = 255;
};

inline PgmImage parse_pgm(std::string_view bytes, const std::string& name) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) -> PgmFormatError { return PgmFormatError(name + ": " + what); };
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') ++pos;
    int v = 0;
    if (start == pos || !detail::parse_number(bytes.substr(start, pos - start), v))
      throw fail(std::string("missing ") + what);
    return v;
  };
  if (bytes.size() < 2 || bytes.substr(0, 2) != "P5") throw fail("not a binary PGM (expected P5 magic)");
  pos = 2;
  const int width = read_int("width");
  const int height = read_int("height");
  const int maxval = read_int("maxval");
  if (width < 1 || height < 1) throw fail("image dimensions must be positive");
  if (maxval < 1 || maxval > 255) throw fail("maxval must lie in [1, 255]");
  if (pos >= bytes.size() || !(bytes[pos] == ' ' || bytes[pos] == '\n' || bytes[pos] == '\r' || bytes[pos] == '\t'))
    throw fail("missing whitespace after header");
  ++pos;
  const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < count) throw fail("pixel data is truncated");
  PgmImage img;
  img.maxval = maxval;
  img.pixels.resize(height, width);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const auto v = static_cast<unsigned char>(bytes[pos++]);
      if (v > maxval) throw fail("pixel exceeds maxval");
      img.pixels(r, c) = static_cast<double>(v) / maxval;
    }
  return img;
}

inline PgmImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pgm(ss.str(), path.string());
}

inline std::string encode_pgm(const Matrix& pixels, int maxval = 255) {
  if (maxval < 1 || maxval > 255) throw InvalidArgument("maxval must lie in [1, 255]");
  std::string out = "P5\n" + std::to_string(pixels.cols()) + " " + std::to_string(pixels.rows()) + "\n" +
                    std::to_string(maxval) + "\n";
  for (Index r = 0; r < pixels.rows(); ++r)
    for (Index c = 0; c < pixels.cols(); ++c) {
      const double v = std::clamp(std::round(pixels(r, c) * maxval), 0.0, static_cast<double>(maxval));
      out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
    }
  return out;
}

inline void save_pgm(const std::filesystem::path& path, const Matrix& pixels, int maxval = 255) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const std::string bytes = encode_pgm(pixels, maxval);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::map<std::string, int> read_labels_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels file " + path.string());
  std::map<std::string, int> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::string name, label_text;
    if (!(fields >> name)) continue;
    int label = 0;
    if (!(fields >> label_text) || !detail::parse_number(label_text, label) || label < 0)
      throw ParseError(path.string() + " line " + std::to_string(line_no) + ": expected '<file> <label>'");
    out[name] = label;
  }
  return out;
}

inline Dataset load_pgm_dir(const std::filesystem::path& dir, const std::filesystem::path& labels_file) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  const auto label_of = read_labels_file(labels_file);
  std::vector<std::pair<int, std::string>> entries;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".pgm") continue;
    const std::string name = entry.path().filename().string();
    const auto it = label_of.find(name);
    if (it == label_of.end()) throw MissingLabel("no label for " + name + " in " + labels_file.string());
    entries.emplace_back(it->second, name);
  }
  for (const auto& [name, label] : label_of)
    if (!fs::exists(dir / name)) throw MissingLabel("labels file names " + name + " but it is not in " + dir.string());
  if (entries.empty()) throw IoError("no .pgm files in " + dir.string());
  std::sort(entries.begin(), entries.end());

  std::vector<Matrix> images;
  std::vector<int> labels;
  std::vector<std::string> names;
  for (const auto& [label, name] : entries) {
    PgmImage img = load_pgm(dir / name);
    if (!images.empty() && (img.pixels.rows() != images.front().rows() || img.pixels.cols() != images.front().cols()))
      throw InconsistentDimensions(name + " is " + std::to_string(img.pixels.rows()) + "x" +
                                   std::to_string(img.pixels.cols()) + ", expected " +
                                   std::to_string(images.front().rows()) + "x" +
                                   std::to_string(images.front().cols()));
    images.push_back(std::move(img.pixels));
    labels.push_back(label);
    names.push_back(name);
  }
  Tensor3 t(Dims3{images.front().rows(), images.front().cols(), static_cast<Index>(images.size())});
  for (std::size_t i = 0; i < images.size(); ++i) t.set_slab(static_cast<Index>(i), images[i]);
  return make_dataset(std::move(t), std::move(labels), std::move(names));
}

/// Writes every slab as a PGM plus `labels.txt`. Uses the dataset's source
/// names when present, otherwise img_00000.pgm, img_00001.pgm, ...
inline void save_pgm_dir(const std::filesystem::path& dir, const Dataset& ds, int maxval = 255) {
  std::filesystem::create_directories(dir);
  std::ofstream labels(dir / "labels.txt", std::ios::trunc);
  if (!labels) throw IoError("cannot write labels file in " + dir.string());
  for (Index i = 0; i < ds.size(); ++i) {
    std::string name;
    if (!ds.names.empty()) {
      name = ds.names[static_cast<std::size_t>(i)];
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "img_%05lld.pgm", static_cast<long long>(i));
      name = buf;
    }
    save_pgm(dir / name, ds.tensor.slab(i), maxval);
    labels << name << ' ' << ds.labels[static_cast<std::size_t>(i)] << '\n';
  }
}

// --- synthetic data ----------------------------------------------------

struct SynthSpec {
  int n_classes = 15;
  int train_per_class = 8;
  int test_per_class = 3;
  Index height = 32;
  Index width = 32;
  double separation = 1.0;
  double noise = 0.5;
  std::uint64_t seed = 0;
};

/// Per class a mean image with N(0, separation^2) entries; samples add
/// independent N(0, noise^2) pixel noise. Deterministic in the seed.
inline std::pair<Dataset, Dataset> synth_blobs(const SynthSpec& s) {
  if (s.n_classes < 1 || s.train_per_class < 1 || s.test_per_class < 1 || s.height < 1 || s.width < 1)
    throw InvalidArgument("synth_blobs counts must be >= 1");
  if (!(s.separation > 0.0) || !(s.noise >= 0.0))
    throw InvalidArgument("synth_blobs needs separation > 0 and noise >= 0");
  std::mt19937_64 gen(s.seed);
  std::normal_distribution<double> normal;
  const Index pixels = s.height * s.width;
  std::vector<Vector> means;
  for (int c = 0; c < s.n_classes; ++c) {
    Vector m(pixels);
    for (Index k = 0; k < pixels; ++k) m(k) = s.separation * normal(gen);
    means.push_back(std::move(m));
  }
  auto make = [&](int per_class) {
    const Index n3 = static_cast<Index>(s.n_classes) * per_class;
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(pixels * n3));
    std::vector<int> labels;
    for (int c = 0; c < s.n_classes; ++c)
      for (int k = 0; k < per_class; ++k) {
        for (Index j = 0; j < pixels; ++j) data.push_back(means[static_cast<std::size_t>(c)](j) + s.noise * normal(gen));
        labels.push_back(c);
      }
    return make_dataset(Tensor3(Dims3{s.height, s.width, n3}, std::move(data)), std::move(labels));
  };
  Dataset train = make(s.train_per_class);
  Dataset test = make(s.test_per_class);
  return {std::move(train), std::move(test)};
}

}  // namespace spca
