#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fedcs/random.hpp"

namespace fedcs::learning {

/// Labelled samples stored row-major.
struct Dataset {
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<double> features;  // size() * n_features
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * n_features, n_features};
  }
};

/// Balanced synthetic classification set: class centres drawn from N(0, separation^2) per
/// dimension, samples = centre + N(0, 1). Label of sample i is i % n_classes.
Dataset make_gaussian_blobs(std::size_t n_samples, std::size_t n_features, std::size_t n_classes,
                            double separation, RngStream& rng);

/// Train and held-out test sets drawn around the same class centres.
struct BlobSplit {
  Dataset train;
  Dataset test;
};
BlobSplit make_gaussian_blob_split(std::size_t n_train, std::size_t n_test, std::size_t n_features,
                                   std::size_t n_classes, double separation, RngStream& rng);

/// Loads an external dataset described by a JSON sidecar at `<path>.json`:
///   {"n_samples": N, "n_features": F, "n_classes": C, "format": "binary" | "csv"}
/// CSV rows are `label,f1,...,fF`. Binary records are a little-endian int32 label followed by
/// F little-endian IEEE-754 float32 features, with no header and no padding.
/// `format` defaults to "csv" for a .csv extension and "binary" otherwise.
Dataset load_dataset(const std::filesystem::path& path);

/// Writes `data` plus its sidecar in the given format. Binary output narrows to float32.
void save_dataset(const Dataset& data, const std::filesystem::path& path, bool binary);

}  // namespace fedcs::learning
