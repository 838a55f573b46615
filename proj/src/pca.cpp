#include "hsi/pca.hpp"

#include <Eigen/Eigenvalues>

#include <string>

namespace hsi {

PcaResult pca_components(const Mat& samples, Index k) {
  const Index n = samples.rows();
  const Index d = samples.cols();
  if (n < 2) {
    throw DataError("pca_components: need at least 2 samples, got " +
                    std::to_string(n));
  }
  if (k < 1 || k > std::min(n, d)) {
    throw DimensionError("pca_components: k=" + std::to_string(k) +
                         " out of range for " + shape_str(n, d) + " samples");
  }

  PcaResult out;
  out.mean = samples.colwise().mean();
  Mat centered = samples.rowwise() - out.mean.transpose();
  Mat cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Mat> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw NumericError("pca_components: eigendecomposition failed");
  }

  // Eigen returns ascending eigenvalues; reverse to descending.
  Vec evals = solver.eigenvalues().reverse();
  Mat evecs = solver.eigenvectors().rowwise().reverse();

  const double scale = std::max(evals(0), 0.0);
  Index rank = 0;
  for (Index i = 0; i < evals.size(); ++i) {
    if (evals(i) > scale * 1e-10 && evals(i) > 0.0) ++rank;
  }
  if (rank < k) {
    throw DataError("pca_components: covariance rank " + std::to_string(rank) +
                    " is below requested k=" + std::to_string(k));
  }

  out.components = evecs.leftCols(k);
  out.eigenvalues = evals.head(k);

  // Sign convention: largest-magnitude coordinate of each component positive.
  for (Index j = 0; j < k; ++j) {
    Index arg = 0;
    out.components.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.components(arg, j) < 0.0) out.components.col(j) = -out.components.col(j);
  }
  return out;
}

Mat pca_project(const Mat& samples, const PcaResult& pca) {
  if (samples.cols() != pca.components.rows()) {
    throw DimensionError("pca_project: samples have " +
                         std::to_string(samples.cols()) +
                         " features, components expect " +
                         std::to_string(pca.components.rows()));
  }
  return (samples.rowwise() - pca.mean.transpose()) * pca.components;
}

}  // namespace hsi
