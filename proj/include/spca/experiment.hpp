#pragma once

// Experiment orchestration: every (feature variant, classifier) pair is
// evaluated on a train/test split and reported as one results row.

#include "spca/admm.hpp"
#include "spca/classifiers.hpp"
#include "spca/dataset.hpp"
#include "spca/metrics.hpp"
#include "spca/pca.hpp"
#include "spca/tensor_pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace spca {

struct Variant {
  enum class Kind { Raw, Pca, SparsePca, TensorSparsePca };
  Kind kind = Kind::Raw;
  Index dim = 0;           // Pca / SparsePca
  TensorPcaConfig tensor;  // TensorSparsePca; its admm field is taken from the experiment

  static Variant raw() { return {}; }
  static Variant pca(Index d) { return {Kind::Pca, d, {}}; }
  static Variant sparse_pca(Index d) { return {Kind::SparsePca, d, {}}; }
  static Variant tensor_sparse_pca(TensorPcaConfig cfg) { return {Kind::TensorSparsePca, 0, std::move(cfg)}; }

  std::string name() const {
    switch (kind) {
      case Kind::Raw: return "raw";
      case Kind::Pca: return "pca(d=" + std::to_string(dim) + ")";
      case Kind::SparsePca: return "spca(d=" + std::to_string(dim) + ")";
      case Kind::TensorSparsePca: {
        std::string n = "tensor-spca(" + std::to_string(tensor.dim1) + "x" + std::to_string(tensor.dim2);
        if (tensor.fixed_dim3) n += "x" + std::to_string(*tensor.fixed_dim3);
        if (tensor.application == ApplicationMode::FitTransform) n += ",fit-transform";
        return n + ")";
      }
    }
    return "?";
  }
};

struct ClassifierSpec {
  enum class Kind { NearestNeighbor, Krr };
  Kind kind = Kind::NearestNeighbor;
  KrrParams krr;

  std::string name() const { return kind == Kind::NearestNeighbor ? "nn" : "krr"; }
};

struct CsvSource {
  std::filesystem::path train;
  std::filesystem::path test;
  Index height = 0;
  Index width = 0;
};

struct PgmSource {
  std::filesystem::path train_dir;
  std::filesystem::path train_labels;
  std::filesystem::path test_dir;
  std::filesystem::path test_labels;
};

using DataSource = std::variant<SynthSpec, CsvSource, PgmSource>;

struct ExperimentConfig {
  DataSource source;
  std::vector<Variant> variants;
  std::vector<ClassifierSpec> classifiers;
  AdmmParams admm;
  std::uint64_t seed = 0;
  std::filesystem::path output;  // empty: do not write
  bool timing = true;            // false writes 0 seconds, making output files reproducible byte for byte

  void validate() const {
    if (variants.empty()) throw InvalidArgument("experiment needs at least one variant");
    if (classifiers.empty()) throw InvalidArgument("experiment needs at least one classifier");
    for (const auto& v : variants)
      if ((v.kind == Variant::Kind::Pca || v.kind == Variant::Kind::SparsePca) && v.dim < 1)
        throw InvalidArgument("variant " + v.name() + " needs d >= 1");
    admm.validate();
    for (const auto& c : classifiers) c.krr.validate();
  }
};

struct ResultRow {
  std::string variant;
  std::string classifier;
  Index feature_dim = 0;
  EvalReport report;
  double seconds = 0.0;
};

struct ExperimentResults {
  std::vector<ResultRow> rows;
};

inline std::pair<Dataset, Dataset> load_source(const DataSource& source) {
  if (const auto* s = std::get_if<SynthSpec>(&source)) return synth_blobs(*s);
  if (const auto* c = std::get_if<CsvSource>(&source))
    return {load_csv_dataset(c->train, c->height, c->width), load_csv_dataset(c->test, c->height, c->width)};
  const auto& p = std::get<PgmSource>(source);
  return {load_pgm_dir(p.train_dir, p.train_labels), load_pgm_dir(p.test_dir, p.test_labels)};
}

namespace detail {

struct FeaturePair {
  Matrix train;
  Matrix test;
  std::vector<int> train_labels;
  std::vector<int> test_labels;
  double seconds = 0.0;
};

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// PCA and sparse PCA fits of the largest requested d, shared by all smaller
// d: component i depends only on components 0..i-1, so the leading columns
// of a larger fit equal a smaller fit exactly.
class FeatureBuilder {
 public:
  FeatureBuilder(const Dataset& train, const Dataset& test, const ExperimentConfig& cfg)
      : train_(train), test_(test), cfg_(cfg), train_rows_(flatten_slabs(train.tensor)),
        test_rows_(flatten_slabs(test.tensor)) {
    for (const auto& v : cfg.variants) {
      if (v.kind == Variant::Kind::Pca) max_pca_ = std::max(max_pca_, v.dim);
      if (v.kind == Variant::Kind::SparsePca) max_spca_ = std::max(max_spca_, v.dim);
    }
  }

  FeaturePair build(const Variant& v) {
    const auto start = Clock::now();
    FeaturePair out;
    out.train_labels = train_.labels;
    out.test_labels = test_.labels;
    double reused_fit_seconds = 0.0;  // shared fit done for an earlier variant
    switch (v.kind) {
      case Variant::Kind::Raw:
        out.train = train_rows_;
        out.test = test_rows_;
        break;
      case Variant::Kind::Pca: {
        if (pca_) {
          reused_fit_seconds = pca_seconds_;
        } else {
          pca_ = pca_fit(train_rows_, max_pca_);
          pca_seconds_ = seconds_since(start);
        }
        PcaModel m{pca_->mu, pca_->components.leftCols(v.dim), pca_->explained_variance.head(v.dim)};
        out.train = pca_transform(m, train_rows_);
        out.test = pca_transform(m, test_rows_);
        break;
      }
      case Variant::Kind::SparsePca: {
        if (spca_) {
          reused_fit_seconds = spca_seconds_;
        } else {
          AdmmParams admm = cfg_.admm;
          admm.seed = cfg_.seed;
          spca_ = fit(train_rows_, max_spca_, admm);
          spca_seconds_ = seconds_since(start);
        }
        SparsePcaModel m{spca_->mu, spca_->loadings.leftCols(v.dim)};
        out.train = transform(m, train_rows_);
        out.test = transform(m, test_rows_);
        break;
      }
      case Variant::Kind::TensorSparsePca: {
        TensorPcaConfig tc = v.tensor;
        tc.admm = cfg_.admm;
        tc.admm.seed = cfg_.seed;
        TensorPcaFit fitted = tensor_sparse_pca_fit(train_.tensor, train_.partition, tc);
        Tensor3 test_out = tc.application == ApplicationMode::PerSplit
                               ? tensor_sparse_pca(test_.tensor, test_.partition, tc)
                               : tensor_sparse_pca_apply(fitted, test_.tensor, test_.partition, tc);
        out.train = flatten_slabs(fitted.output);
        out.test = flatten_slabs(test_out);
        out.train_labels = output_labels(train_.labels, train_.partition, tc.fixed_dim3);
        out.test_labels = output_labels(test_.labels, test_.partition, tc.fixed_dim3);
        break;
      }
    }
    out.seconds = seconds_since(start) + reused_fit_seconds;
    return out;
  }

 private:
  const Dataset& train_;
  const Dataset& test_;
  const ExperimentConfig& cfg_;
  Matrix train_rows_;
  Matrix test_rows_;
  Index max_pca_ = 0;
  Index max_spca_ = 0;
  std::optional<PcaModel> pca_;
  std::optional<SparsePcaModel> spca_;
  double pca_seconds_ = 0.0;
  double spca_seconds_ = 0.0;
};

}  // namespace detail

inline std::vector<int> classify(const ClassifierSpec& spec, const LabeledFeatures& train, const Matrix& test) {
  if (spec.kind == ClassifierSpec::Kind::NearestNeighbor) return nn_classify_all(train, test);
  return krr_predict_all(krr_fit(train, spec.krr), test);
}

inline ExperimentResults run_experiment(const ExperimentConfig& cfg, const Dataset& train, const Dataset& test) {
  cfg.validate();
  if (train.height() != test.height() || train.width() != test.width())
    throw ShapeMismatch("train images are " + std::to_string(train.height()) + "x" + std::to_string(train.width()) +
                        " but test images are " + std::to_string(test.height()) + "x" +
                        std::to_string(test.width()));
  const int n_classes = std::max(train.n_classes(), test.n_classes());
  ExperimentResults results;
  detail::FeatureBuilder builder(train, test, cfg);
  for (const auto& variant : cfg.variants) {
    detail::FeaturePair features;
    try {
      features = builder.build(variant);
    } catch (const Error& e) {
      rethrow_with_context(e, "variant " + variant.name());
    }
    const LabeledFeatures labeled{features.train, features.train_labels, n_classes};
    for (const auto& clf : cfg.classifiers) {
      const auto start = detail::Clock::now();
      std::vector<int> predicted;
      try {
        predicted = classify(clf, labeled, features.test);
      } catch (const Error& e) {
        rethrow_with_context(e, "variant " + variant.name() + ", classifier " + clf.name());
      }
      ResultRow row;
      row.variant = variant.name();
      row.classifier = clf.name();
      row.feature_dim = features.train.cols();
      row.report = evaluate(predicted, features.test_labels, n_classes);
      row.seconds = cfg.timing ? features.seconds + detail::seconds_since(start) : 0.0;
      results.rows.push_back(std::move(row));
    }
  }
  return results;
}

inline ExperimentResults run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  auto [train, test] = load_source(cfg.source);
  return run_experiment(cfg, train, test);
}

inline constexpr std::string_view kResultsHeader = "variant\tclassifier\taccuracy\tq_accuracy\tseconds";

inline void write_results_tsv(std::ostream& out, const ExperimentResults& results) {
  out << kResultsHeader << '\n';
  for (const auto& r : results.rows)
    out << r.variant << '\t' << r.classifier << '\t' << format_double(r.report.plain_accuracy) << '\t'
        << format_double(r.report.q_accuracy) << '\t' << format_double(r.seconds) << '\n';
}

inline void write_results_tsv(const std::filesystem::path& path, const ExperimentResults& results) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_results_tsv(out, results);
}

// --- JSON configuration --------------------------------------------------

namespace detail {

inline Index json_dim(const nlohmann::json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() < 1)
    throw InvalidArgument(std::string(what) + " must be a positive integer");
  return j.get<Index>();
}

inline std::optional<double> json_auto_or_number(const nlohmann::json& obj, const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  const auto& v = obj[key];
  if (v.is_string() && v.get<std::string>() == "auto") return std::nullopt;
  if (!v.is_number()) throw InvalidArgument(std::string(key) + " must be a number or \"auto\"");
  return v.get<double>();
}

inline TensorPcaConfig parse_tensor_config(const nlohmann::json& j) {
  TensorPcaConfig cfg;
  if (j.is_null() || (j.is_boolean() && j.get<bool>())) return cfg;
  if (!j.is_object()) throw InvalidArgument("tensor_spca must be an object");
  if (j.contains("dim1")) cfg.dim1 = json_dim(j["dim1"], "dim1");
  if (j.contains("dim2")) cfg.dim2 = json_dim(j["dim2"], "dim2");
  if (j.contains("mode3")) {
    const auto& m = j["mode3"];
    if (m.is_string() && m.get<std::string>() == "keep")
      cfg.fixed_dim3.reset();
    else
      cfg.fixed_dim3 = json_dim(m, "mode3");
  }
  if (j.contains("apply")) {
    const auto a = j["apply"].get<std::string>();
    if (a == "per-split") cfg.application = ApplicationMode::PerSplit;
    else if (a == "fit-transform") cfg.application = ApplicationMode::FitTransform;
    else throw InvalidArgument("apply must be \"per-split\" or \"fit-transform\"");
  }
  return cfg;
}

inline void append_dims(std::vector<Variant>& out, const nlohmann::json& j, Variant (*make)(Index)) {
  if (j.is_array())
    for (const auto& d : j) out.push_back(make(json_dim(d, "d")));
  else
    out.push_back(make(json_dim(j, "d")));
}

}  // namespace detail

inline AdmmParams parse_admm_params(const nlohmann::json& j) {
  AdmmParams p;
  if (j.is_null()) return p;
  p.rho = detail::json_auto_or_number(j, "rho");
  p.lambda = detail::json_auto_or_number(j, "lambda");
  if (j.contains("lambda_ratio")) p.lambda_ratio = j["lambda_ratio"].get<double>();
  if (j.contains("tol")) p.tol = j["tol"].get<double>();
  if (j.contains("max_iter")) p.max_iter = j["max_iter"].get<int>();
  p.validate();
  return p;
}

/// Parses an experiment configuration. Relative paths resolve against `base_dir`.
inline ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  using nlohmann::json;
  auto path_of = [&](const json& obj, const char* key) {
    if (!obj.contains(key)) throw InvalidArgument(std::string("missing data field '") + key + "'");
    std::filesystem::path p = obj[key].get<std::string>();
    return p.is_relative() ? base_dir / p : p;
  };
  try {
    ExperimentConfig cfg;
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.timing = j.value("timing", true);
    if (j.contains("output")) cfg.output = path_of(j, "output");

    if (!j.contains("data")) throw InvalidArgument("config needs a 'data' section");
    const json& data = j["data"];
    if (data.contains("synth")) {
      const json& s = data["synth"];
      SynthSpec spec;
      spec.n_classes = s.value("classes", spec.n_classes);
      spec.train_per_class = s.value("train_per_class", spec.train_per_class);
      spec.test_per_class = s.value("test_per_class", spec.test_per_class);
      spec.height = s.value("height", spec.height);
      spec.width = s.value("width", spec.width);
      spec.separation = s.value("separation", spec.separation);
      spec.noise = s.value("noise", spec.noise);
      spec.seed = s.value("seed", cfg.seed);
      cfg.source = spec;
    } else if (data.contains("csv")) {
      const json& c = data["csv"];
      cfg.source = CsvSource{path_of(c, "train"), path_of(c, "test"), detail::json_dim(c.at("height"), "height"),
                             detail::json_dim(c.at("width"), "width")};
    } else if (data.contains("pgm")) {
      const json& p = data["pgm"];
      cfg.source = PgmSource{path_of(p, "train_dir"), path_of(p, "train_labels"), path_of(p, "test_dir"),
                             path_of(p, "test_labels")};
    } else {
      throw InvalidArgument("data must contain one of 'synth', 'csv', 'pgm'");
    }

    for (const json& v : j.at("variants")) {
      if (v.is_string()) {
        const auto name = v.get<std::string>();
        if (name == "raw") cfg.variants.push_back(Variant::raw());
        else if (name == "tensor_spca") cfg.variants.push_back(Variant::tensor_sparse_pca({}));
        else throw InvalidArgument("unknown variant '" + name + "'");
        continue;
      }
      if (!v.is_object() || v.size() != 1) throw InvalidArgument("each variant must be a string or a one-key object");
      const auto& [key, value] = *v.items().begin();
      if (key == "pca") detail::append_dims(cfg.variants, value, &Variant::pca);
      else if (key == "spca") detail::append_dims(cfg.variants, value, &Variant::sparse_pca);
      else if (key == "tensor_spca") cfg.variants.push_back(Variant::tensor_sparse_pca(detail::parse_tensor_config(value)));
      else throw InvalidArgument("unknown variant '" + key + "'");
    }

    for (const json& c : j.at("classifiers")) {
      ClassifierSpec spec;
      if (c.is_string()) {
        const auto name = c.get<std::string>();
        if (name == "nn") spec.kind = ClassifierSpec::Kind::NearestNeighbor;
        else if (name == "krr") spec.kind = ClassifierSpec::Kind::Krr;
        else throw InvalidArgument("unknown classifier '" + name + "'");
      } else if (c.is_object() && c.contains("krr")) {
        spec.kind = ClassifierSpec::Kind::Krr;
        const json& k = c["krr"];
        spec.krr.sigma = detail::json_auto_or_number(k, "sigma");
        if (k.contains("c")) spec.krr.c = k["c"].get<double>();
      } else {
        throw InvalidArgument("each classifier must be \"nn\", \"krr\" or {\"krr\": {...}}");
      }
      cfg.classifiers.push_back(spec);
    }

    if (j.contains("admm")) cfg.admm = parse_admm_params(j["admm"]);
    cfg.admm.seed = cfg.seed;
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_experiment_config(j, path.parent_path());
}

}  // namespace spca
