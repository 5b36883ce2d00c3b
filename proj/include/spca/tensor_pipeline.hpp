#pragma once

// Tensor sparse PCA: sparse-PCA reduction of mode 1 and then mode 2 of an
// image tensor, followed by a per-person sparse PCA along mode 3 and a merge.

#include "spca/admm.hpp"
#include "spca/tensor.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spca {

enum class ApplicationMode {
  PerSplit,      // fit and apply independently on every dataset
  FitTransform,  // reuse the training mode-1/mode-2 loadings on other datasets
};

struct TensorPcaConfig {
  Index dim1 = 25;
  Index dim2 = 25;
  std::optional<Index> fixed_dim3;  // unset keeps each person's image count
  AdmmParams admm;
  ApplicationMode application = ApplicationMode::PerSplit;

  void validate(const Dims3& dims, const PersonPartition& part) const {
    if (dim1 < 1 || dim1 > dims.n1)
      throw InvalidArgument("dim1 must lie in [1, " + std::to_string(dims.n1) + "]");
    if (dim2 < 1 || dim2 > dims.n2)
      throw InvalidArgument("dim2 must lie in [1, " + std::to_string(dims.n2) + "]");
    if (fixed_dim3 && (*fixed_dim3 < 1 || *fixed_dim3 > part.min_count()))
      throw InvalidArgument("fixed mode-3 dim must lie in [1, " + std::to_string(part.min_count()) + "]");
    admm.validate();
  }
};

struct ModeReduction {
  Tensor3 tensor;
  SparsePcaModel model;
};

/// Replaces dimension `mode` of `dims` with `dim`.
inline Dims3 with_mode_dim(Dims3 dims, int mode, Index dim) {
  check_mode(mode);
  (mode == 1 ? dims.n1 : mode == 2 ? dims.n2 : dims.n3) = dim;
  return dims;
}

/// Projects the mode-`mode` fibers of `t` with an already fitted model.
inline Tensor3 apply_mode(const Tensor3& t, int mode, const SparsePcaModel& model) {
  Matrix unfolded = unfold(t, mode);
  if (unfolded.cols() != model.features())
    throw ShapeMismatch("mode-" + std::to_string(mode) + " model expects " +
                        std::to_string(model.features()) + " features, tensor has " +
                        std::to_string(unfolded.cols()));
  return refold(transform(model, unfolded), mode, with_mode_dim(t.dims(), mode, model.dim()));
}

inline ModeReduction reduce_mode(const Tensor3& t, int mode, Index dim, const AdmmParams& admm,
                                 FitTrace* trace = nullptr) {
  check_mode(mode);
  if (dim < 1 || dim > t.dims()[mode])
    throw InvalidArgument("mode-" + std::to_string(mode) + " dim must lie in [1, " +
                          std::to_string(t.dims()[mode]) + "]");
  const Matrix unfolded = unfold(t, mode);
  SparsePcaModel model;
  try {
    model = fit(unfolded, dim, admm, trace);
  } catch (const Error& e) {
    rethrow_with_context(e, "mode " + std::to_string(mode));
  }
  Tensor3 reduced = refold(transform(model, unfolded), mode, with_mode_dim(t.dims(), mode, dim));
  return {std::move(reduced), std::move(model)};
}

inline Tensor3 per_person_mode3(const Tensor3& t, const PersonPartition& part,
                                std::optional<Index> fixed_dim3, const AdmmParams& admm,
                                FitTrace* trace = nullptr) {
  std::vector<Tensor3> parts = slice_mode3(t, part);
  if (fixed_dim3 && (*fixed_dim3 < 1 || *fixed_dim3 > part.min_count()))
    throw InvalidArgument("fixed mode-3 dim must lie in [1, " + std::to_string(part.min_count()) + "]");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Index dim3 = fixed_dim3 ? *fixed_dim3 : parts[i].n3();
    try {
      parts[i] = reduce_mode(parts[i], 3, dim3, admm, trace).tensor;
    } catch (const Error& e) {
      rethrow_with_context(e, "person " + std::to_string(i));
    }
  }
  return merge_mode3(parts);
}

/// Labels of the merged output slabs: each person's label once per output
/// slab of that person.
inline std::vector<int> output_labels(const std::vector<int>& labels, const PersonPartition& part,
                                      std::optional<Index> fixed_dim3) {
  if (static_cast<Index>(labels.size()) != part.total())
    throw ShapeMismatch("partition covers " + std::to_string(part.total()) + " images but there are " +
                        std::to_string(labels.size()) + " labels");
  std::vector<int> out;
  std::size_t start = 0;
  for (Index count : part.counts()) {
    out.insert(out.end(), static_cast<std::size_t>(fixed_dim3 ? *fixed_dim3 : count), labels[start]);
    start += static_cast<std::size_t>(count);
  }
  return out;
}

struct TensorPcaFit {
  Tensor3 output;
  SparsePcaModel mode1;
  SparsePcaModel mode2;
};

inline TensorPcaFit tensor_sparse_pca_fit(const Tensor3& t, const PersonPartition& part,
                                          const TensorPcaConfig& cfg, FitTrace* trace = nullptr) {
  cfg.validate(t.dims(), part);
  if (part.total() != t.n3())
    throw ShapeMismatch("partition covers " + std::to_string(part.total()) +
                        " images but tensor has " + std::to_string(t.n3()));
  AdmmParams admm = cfg.admm;
  ModeReduction first = reduce_mode(t, 1, cfg.dim1, admm, trace);
  admm.seed = component_seed(cfg.admm.seed, 1000);
  ModeReduction second = reduce_mode(first.tensor, 2, cfg.dim2, admm, trace);
  admm.seed = component_seed(cfg.admm.seed, 2000);
  Tensor3 out = per_person_mode3(second.tensor, part, cfg.fixed_dim3, admm, trace);
  return {std::move(out), std::move(first.model), std::move(second.model)};
}

inline Tensor3 tensor_sparse_pca(const Tensor3& t, const PersonPartition& part,
                                 const TensorPcaConfig& cfg, FitTrace* trace = nullptr) {
  return tensor_sparse_pca_fit(t, part, cfg, trace).output;
}

/// Applies a training fit to another dataset. Mode-3 features are the
/// images of one person, so the mode-3 step is always fitted on `t` itself.
inline Tensor3 tensor_sparse_pca_apply(const TensorPcaFit& fitted, const Tensor3& t,
                                       const PersonPartition& part, const TensorPcaConfig& cfg,
                                       FitTrace* trace = nullptr) {
  cfg.validate(t.dims(), part);
  Tensor3 reduced = apply_mode(apply_mode(t, 1, fitted.mode1), 2, fitted.mode2);
  AdmmParams admm = cfg.admm;
  admm.seed = component_seed(cfg.admm.seed, 2000);
  return per_person_mode3(reduced, part, cfg.fixed_dim3, admm, trace);
}

}  // namespace spca
