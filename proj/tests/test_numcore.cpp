#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hsi/linalg.hpp"
#include "hsi/pca.hpp"
#include "hsi/rng.hpp"

#include <cmath>

using namespace hsi;

namespace {

// Naive triple loop with left-to-right accumulation, the reference the
// library product is checked against.
Mat matmul_naive(const Mat& a, const Mat& b) {
  Mat c = Mat::Zero(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (Index k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

}  // namespace

TEST_CASE("matmul: identity") {
  Rng rng(7);
  const Mat m = rng.uniform_matrix(3, 4, -2.0, 2.0);
  const Mat i3 = Mat::Identity(3, 3);
  CHECK((matmul(i3, m) - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matmul: hand-computed 2x2 by 2x1") {
  Mat a(2, 2);
  a << 1, 2, 3, 4;
  Mat b(2, 1);
  b << 0, 1;
  const Mat c = matmul(a, b);
  CHECK(c(0, 0) == doctest::Approx(2.0));
  CHECK(c(1, 0) == doctest::Approx(4.0));
}

TEST_CASE("matmul: random 5x7 by 7x3 matches the naive oracle") {
  Rng rng(11);
  const Mat a = rng.uniform_matrix(5, 7, -1.0, 1.0);
  const Mat b = rng.uniform_matrix(7, 3, -1.0, 1.0);
  CHECK((matmul(a, b) - matmul_naive(a, b)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("matmul: dimension mismatch names both shapes") {
  const Mat a = Mat::Zero(2, 3);
  const Mat b = Mat::Zero(4, 2);
  CHECK_THROWS_WITH_AS(matmul(a, b),
                       "matmul: incompatible shapes 2x3 * 4x2",
                       DimensionError);
}

TEST_CASE("matmul: associativity on random conformable triples") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Index m = 2 + static_cast<Index>(rng.below(6));
    const Index n = 2 + static_cast<Index>(rng.below(6));
    const Index p = 2 + static_cast<Index>(rng.below(6));
    const Index q = 2 + static_cast<Index>(rng.below(6));
    const Mat a = rng.uniform_matrix(m, n, -1.0, 1.0);
    const Mat b = rng.uniform_matrix(n, p, -1.0, 1.0);
    const Mat c = rng.uniform_matrix(p, q, -1.0, 1.0);
    const Mat left = matmul(matmul(a, b), c);
    const Mat right = matmul(a, matmul(b, c));
    const double scale = std::max(left.norm(), right.norm());
    CHECK((left - right).norm() <= 1e-9 * std::max(scale, 1.0));
  }
}

TEST_CASE("sigmoid: midpoint and symmetry") {
  CHECK(sigmoid(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  for (double x : {0.1, 0.7, 3.0, 17.5, 140.0, 700.0}) {
    CHECK(std::abs(sigmoid(x) + sigmoid(-x) - 1.0) <= 1e-15);
  }
}

TEST_CASE("sigmoid: clamp keeps extreme arguments inside (0,1)") {
  const double top = sigmoid(700.0);
  CHECK(std::isfinite(top));
  CHECK(top < 1.0);
  CHECK(top > 1.0 - 1e-12);
  const double bottom = sigmoid(-700.0);
  CHECK(bottom > 0.0);
  CHECK(bottom < 1e-12);
}

TEST_CASE("sigmoid: monotone nondecreasing on a sorted grid") {
  double prev = sigmoid(-600.0);
  for (double x = -600.0; x <= 600.0; x += 3.7) {
    const double s = sigmoid(x);
    CHECK(s >= prev);
    prev = s;
  }
}

TEST_CASE("pca: rank-1 data recovers the line direction") {
  Rng rng(5);
  Vec direction(2);
  direction << 3.0, 4.0;
  direction.normalize();
  Mat samples(40, 2);
  for (Index i = 0; i < samples.rows(); ++i) {
    samples.row(i) = rng.uniform(-5.0, 5.0) * direction.transpose();
  }
  const PcaResult pca = pca_components(samples, 1);
  // No absolute value: the sign convention orients the component along
  // the direction whose largest-magnitude coordinate is positive.
  CHECK(pca.components.col(0).dot(direction) >= 1.0 - 1e-9);
}

TEST_CASE("pca: isotropic Gaussian splits variance evenly") {
  Rng rng(17);
  Mat samples(10000, 2);
  for (Index i = 0; i < samples.rows(); ++i) {
    samples(i, 0) = rng.normal();
    samples(i, 1) = rng.normal();
  }
  const PcaResult pca = pca_components(samples, 2);
  const double total = pca.eigenvalues.sum();
  CHECK(pca.eigenvalues(0) / total == doctest::Approx(0.5).epsilon(0.1));
  CHECK(pca.eigenvalues(1) / total == doctest::Approx(0.5).epsilon(0.1));
  CHECK(std::abs(pca.eigenvalues(0) / total - 0.5) <= 0.05);
}

TEST_CASE("pca: full-rank projection reconstructs the data") {
  Rng rng(23);
  const Mat samples = rng.uniform_matrix(50, 3, -1.0, 1.0);
  const PcaResult pca = pca_components(samples, 3);
  const Mat projected = pca_project(samples, pca);
  const Mat reconstructed =
      (projected * pca.components.transpose()).rowwise() +
      pca.mean.transpose();
  CHECK((reconstructed - samples).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("pca: components orthonormal") {
  Rng rng(29);
  const Mat samples = rng.uniform_matrix(120, 6, -1.0, 1.0);
  const PcaResult pca = pca_components(samples, 4);
  for (Index i = 0; i < 4; ++i) {
    CHECK(std::abs(pca.components.col(i).norm() - 1.0) <= 1e-10);
    for (Index j = i + 1; j < 4; ++j) {
      CHECK(std::abs(pca.components.col(i).dot(pca.components.col(j))) <= 1e-10);
    }
  }
}

TEST_CASE("pca: degenerate covariance reports achievable rank") {
  Rng rng(31);
  Mat samples(30, 3);
  for (Index i = 0; i < samples.rows(); ++i) {
    const double t = rng.uniform(-1.0, 1.0);
    samples.row(i) << t, 2.0 * t, -t;  // rank 1
  }
  CHECK_THROWS_WITH_AS(pca_components(samples, 2),
                       "pca_components: covariance rank 1 is below requested k=2",
                       DataError);
}

TEST_CASE("rng: identical seeds give bit-identical streams") {
  Rng a(99), b(99);
  for (int i = 0; i < 1000; ++i) CHECK(a.u64() == b.u64());
  Rng c(99), d(99);
  for (int i = 0; i < 100; ++i) {
    CHECK(c.uniform01() == d.uniform01());
    CHECK(c.normal() == d.normal());
  }
}

TEST_CASE("rng: documented mt19937_64 reference value") {
  // The 10000th output of mt19937_64 seeded with 5489 is pinned by the
  // C++ standard.
  std::mt19937_64 reference(5489);
  Rng rng(5489);
  std::uint64_t last = 0;
  for (int i = 0; i < 10000; ++i) last = rng.u64();
  std::uint64_t expected = 0;
  for (int i = 0; i < 10000; ++i) expected = reference();
  CHECK(last == expected);
  CHECK(expected == 9981545732273789042ULL);
}

TEST_CASE("rng: child streams differ from the parent and each other") {
  Rng root(42);
  Rng a = root.child(1);
  Rng b = root.child(2);
  CHECK(a.u64() != b.u64());
  Rng a2 = Rng(42).child(1);
  CHECK(Rng(42).child(1).u64() == Rng(42).child(1).u64());
  (void)a2;
}

TEST_CASE("rng: sample returns distinct indices") {
  Rng rng(3);
  const std::vector<int> picks = rng.sample(50, 20);
  CHECK(picks.size() == 20);
  std::set<int> unique(picks.begin(), picks.end());
  CHECK(unique.size() == 20);
  for (int p : picks) {
    CHECK(p >= 0);
    CHECK(p < 50);
  }
}
