// Command-line front end: model fitting and projection, tensor reduction,
// classification, synthetic data and full experiment grids.

#include "spca/admm.hpp"
#include "spca/classifiers.hpp"
#include "spca/dataset.hpp"
#include "spca/experiment.hpp"
#include "spca/metrics.hpp"
#include "spca/model_io.hpp"
#include "spca/pca.hpp"
#include "spca/tensor_pipeline.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace spca;

std::optional<double> parse_auto(const std::string& text, const char* what) {
  if (text == "auto") return std::nullopt;
  double v = 0.0;
  if (!detail::parse_number(text, v)) throw InvalidArgument(std::string(what) + " must be a number or 'auto'");
  return v;
}

void write_rows(const std::filesystem::path& path, const Matrix& rows, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv_rows(out, rows, labels);
  if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json report_json(const EvalReport& r, const std::vector<int>& predicted) {
  nlohmann::json confusion = nlohmann::json::array();
  for (std::size_t c = 0; c < r.confusion.size(); ++c) {
    const auto& k = r.confusion[c];
    confusion.push_back({{"class", c}, {"tp", k.tp}, {"tn", k.tn}, {"fp", k.fp}, {"fn", k.fn}});
  }
  return {{"n_test", r.n_test},
          {"n_classes", r.n_classes},
          {"accuracy", r.plain_accuracy},
          {"q_accuracy", r.q_accuracy},
          {"confusion", confusion},
          {"predicted", predicted}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse PCA, tensor sparse PCA and face-recognition experiments"};
  app.require_subcommand(1);

  // fit
  std::string fit_input, fit_method = "spca", fit_out, fit_rho = "auto";
  Index fit_dim = 0;
  std::optional<double> fit_lambda;
  double fit_lambda_ratio = 0.01, fit_tol = 1e-10;
  int fit_max_iter = 10000;
  std::uint64_t fit_seed = 0;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a PCA or sparse PCA model on CSV feature rows");
  fit_cmd->add_option("--input", fit_input, "CSV rows: label,value,...")->required();
  fit_cmd->add_option("--method", fit_method)->check(CLI::IsMember({"pca", "spca"}));
  fit_cmd->add_option("--dim", fit_dim)->required();
  fit_cmd->add_option("--lambda", fit_lambda, "absolute l1 weight (default lambda-ratio * rho)");
  fit_cmd->add_option("--lambda-ratio", fit_lambda_ratio);
  fit_cmd->add_option("--rho", fit_rho, "penalty parameter or 'auto'");
  fit_cmd->add_option("--tol", fit_tol);
  fit_cmd->add_option("--max-iter", fit_max_iter);
  fit_cmd->add_option("--seed", fit_seed);
  fit_cmd->add_option("--out", fit_out)->required();

  // transform
  std::string tr_model, tr_input, tr_out;
  auto* tr_cmd = app.add_subcommand("transform", "Project CSV feature rows with a saved model");
  tr_cmd->add_option("--model", tr_model)->required();
  tr_cmd->add_option("--input", tr_input)->required();
  tr_cmd->add_option("--out", tr_out)->required();

  // tensor-reduce
  std::string tz_train, tz_test, tz_mode3 = "keep", tz_apply = "per-split", tz_prefix;
  Index tz_height = 0, tz_width = 0, tz_dim1 = 25, tz_dim2 = 25;
  double tz_lambda_ratio = 0.01, tz_tol = 1e-10;
  std::optional<double> tz_lambda;
  std::string tz_rho = "auto";
  int tz_max_iter = 10000;
  std::uint64_t tz_seed = 0;
  auto* tz_cmd = app.add_subcommand("tensor-reduce", "Tensor sparse PCA of image datasets");
  tz_cmd->add_option("--train", tz_train)->required();
  tz_cmd->add_option("--test", tz_test);
  tz_cmd->add_option("--height", tz_height)->required();
  tz_cmd->add_option("--width", tz_width)->required();
  tz_cmd->add_option("--dim1", tz_dim1);
  tz_cmd->add_option("--dim2", tz_dim2);
  tz_cmd->add_option("--mode3", tz_mode3, "'keep' or a fixed per-person dimension");
  tz_cmd->add_option("--apply", tz_apply)->check(CLI::IsMember({"per-split", "fit-transform"}));
  tz_cmd->add_option("--lambda", tz_lambda);
  tz_cmd->add_option("--lambda-ratio", tz_lambda_ratio);
  tz_cmd->add_option("--rho", tz_rho);
  tz_cmd->add_option("--tol", tz_tol);
  tz_cmd->add_option("--max-iter", tz_max_iter);
  tz_cmd->add_option("--seed", tz_seed);
  tz_cmd->add_option("--out-prefix", tz_prefix)->required();

  // classify
  std::string cl_train, cl_test, cl_classifier = "nn", cl_sigma = "auto", cl_out;
  double cl_c = 1e-3;
  auto* cl_cmd = app.add_subcommand("classify", "Classify CSV feature rows and report accuracy");
  cl_cmd->add_option("--train", cl_train)->required();
  cl_cmd->add_option("--test", cl_test)->required();
  cl_cmd->add_option("--classifier", cl_classifier)->check(CLI::IsMember({"nn", "krr"}));
  cl_cmd->add_option("--sigma", cl_sigma);
  cl_cmd->add_option("--c", cl_c);
  cl_cmd->add_option("--out", cl_out)->required();

  // experiment
  std::string ex_config;
  auto* ex_cmd = app.add_subcommand("experiment", "Run a variant x classifier grid from a JSON config");
  ex_cmd->add_option("--config", ex_config)->required();

  // synth
  SynthSpec sy;
  std::string sy_prefix;
  auto* sy_cmd = app.add_subcommand("synth", "Write a seeded synthetic train/test dataset pair");
  sy_cmd->add_option("--classes", sy.n_classes);
  sy_cmd->add_option("--train-per-class", sy.train_per_class);
  sy_cmd->add_option("--test-per-class", sy.test_per_class);
  sy_cmd->add_option("--height", sy.height);
  sy_cmd->add_option("--width", sy.width);
  sy_cmd->add_option("--separation", sy.separation);
  sy_cmd->add_option("--noise", sy.noise);
  sy_cmd->add_option("--seed", sy.seed);
  sy_cmd->add_option("--out-prefix", sy_prefix)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_cmd) {
      auto [rows, labels] = load_csv_rows(fit_input);
      if (fit_method == "pca") {
        io::save_model(fit_out, pca_fit(rows, fit_dim));
      } else {
        AdmmParams p;
        p.rho = parse_auto(fit_rho, "--rho");
        p.lambda = fit_lambda;
        p.lambda_ratio = fit_lambda_ratio;
        p.tol = fit_tol;
        p.max_iter = fit_max_iter;
        p.seed = fit_seed;
        io::save_model(fit_out, fit(rows, fit_dim, p));
      }
    } else if (*tr_cmd) {
      auto [rows, labels] = load_csv_rows(tr_input);
      const std::string magic = io::peek_magic(tr_model);
      Matrix projected;
      if (magic == io::kPcaMagic) projected = pca_transform(io::load_pca(tr_model), rows);
      else projected = transform(io::load_sparse_pca(tr_model), rows);
      write_rows(tr_out, projected, labels);
    } else if (*tz_cmd) {
      TensorPcaConfig cfg;
      cfg.dim1 = tz_dim1;
      cfg.dim2 = tz_dim2;
      if (tz_mode3 != "keep") {
        Index d3 = 0;
        if (!detail::parse_number(tz_mode3, d3)) throw InvalidArgument("--mode3 must be 'keep' or an integer");
        cfg.fixed_dim3 = d3;
      }
      cfg.application = tz_apply == "fit-transform" ? ApplicationMode::FitTransform : ApplicationMode::PerSplit;
      cfg.admm.rho = parse_auto(tz_rho, "--rho");
      cfg.admm.lambda = tz_lambda;
      cfg.admm.lambda_ratio = tz_lambda_ratio;
      cfg.admm.tol = tz_tol;
      cfg.admm.max_iter = tz_max_iter;
      cfg.admm.seed = tz_seed;
      const Dataset train = load_csv_dataset(tz_train, tz_height, tz_width);
      const TensorPcaFit fitted = tensor_sparse_pca_fit(train.tensor, train.partition, cfg);
      write_rows(tz_prefix + "train.csv", flatten_slabs(fitted.output),
                 output_labels(train.labels, train.partition, cfg.fixed_dim3));
      if (!tz_test.empty()) {
        const Dataset test = load_csv_dataset(tz_test, tz_height, tz_width);
        const Tensor3 out = cfg.application == ApplicationMode::PerSplit
                                ? tensor_sparse_pca(test.tensor, test.partition, cfg)
                                : tensor_sparse_pca_apply(fitted, test.tensor, test.partition, cfg);
        write_rows(tz_prefix + "test.csv", flatten_slabs(out), output_labels(test.labels, test.partition, cfg.fixed_dim3));
      }
    } else if (*cl_cmd) {
      auto [train_rows, train_labels] = load_csv_rows(cl_train);
      auto [test_rows, test_labels] = load_csv_rows(cl_test);
      const int n_classes = std::max(*std::max_element(train_labels.begin(), train_labels.end()),
                                     *std::max_element(test_labels.begin(), test_labels.end())) + 1;
      ClassifierSpec spec;
      if (cl_classifier == "krr") {
        spec.kind = ClassifierSpec::Kind::Krr;
        spec.krr.sigma = parse_auto(cl_sigma, "--sigma");
        spec.krr.c = cl_c;
      }
      const LabeledFeatures train{std::move(train_rows), std::move(train_labels), n_classes};
      train.validate();
      const auto predicted = classify(spec, train, test_rows);
      const EvalReport report = evaluate(predicted, test_labels, n_classes);
      std::ofstream out(cl_out, std::ios::trunc);
      if (!out) throw IoError("cannot write " + cl_out);
      out << report_json(report, predicted).dump(2) << '\n';
    } else if (*ex_cmd) {
      const ExperimentConfig cfg = load_experiment_config(ex_config);
      const ExperimentResults results = run_experiment(cfg);
      if (!cfg.output.empty()) write_results_tsv(cfg.output, results);
      write_results_tsv(std::cout, results);
    } else if (*sy_cmd) {
      auto [train, test] = synth_blobs(sy);
      save_csv_dataset(sy_prefix + "train.csv", train);
      save_csv_dataset(sy_prefix + "test.csv", test);
    }
  } catch (const spca::Error& e) {
    std::cerr << nlohmann::json{{"error", std::string(e.kind())}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "InternalError"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
