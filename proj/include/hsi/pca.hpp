#pragma once

#include "hsi/types.hpp"

namespace hsi {

struct PcaResult {
  Mat components;   // cols x k, orthonormal columns, descending eigenvalue
  Vec mean;         // per-feature mean of the input samples
  Vec eigenvalues;  // descending, one per component
};

/// Principal directions of mean-centered samples (rows = observations).
/// Works on the feature-by-feature covariance, which is cheap for
/// tall-skinny data. Each component's largest-magnitude coordinate is made
/// positive so the sign is reproducible.
///
/// Requires k <= min(rows, cols) and rows >= 2; throws DataError when the
/// covariance rank is below k (the message reports the achievable rank).
PcaResult pca_components(const Mat& samples, Index k);

/// Project rows of `samples` onto the fitted components: (X - mean) * C.
Mat pca_project(const Mat& samples, const PcaResult& pca);

}  // namespace hsi
