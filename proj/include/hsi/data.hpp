#pragma once

#include "hsi/rng.hpp"
#include "hsi/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace hsi {

/// Raster of per-pixel spectra. Rows of `raw` are pixels (index y*W + x),
/// columns are bands, in the units the file stores. Per-band minima and
/// maxima are recorded at load so `scaled()` can serve the [0, 1] view the
/// pipeline consumes while the raw values stay recoverable for saving.
struct HyperCube {
  int height = 0;
  int width = 0;
  int bands = 0;
  Mat raw;  // (H*W) x B

  int pixel_count() const { return height * width; }

  /// Per-band min-max scaling to [0, 1]; constant bands map to 0.
  Mat scaled() const;
  Vec band_min() const { return raw.colwise().minCoeff(); }
  Vec band_max() const { return raw.colwise().maxCoeff(); }
};

/// Per-pixel class ids, row-major; 0 means unlabeled, classes are 1..C.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint16_t> labels;

  int class_count() const;
  std::uint16_t at(int pixel) const {
    return labels[static_cast<std::size_t>(pixel)];
  }
};

enum class Domain : std::uint8_t { source = 0, target = 1 };

/// Parallel arrays of feature rows, 0-based labels (-1 = unlabeled), pixel
/// ids, and domain tags. Pixel ids are unique within a domain.
struct SampleSet {
  Mat features;
  std::vector<int> labels;
  std::vector<int> pixels;
  std::vector<Domain> domains;

  Index size() const { return features.rows(); }
  bool empty() const { return size() == 0; }

  void append_row(const Vec& row, int label, int pixel, Domain domain);
  void append(const SampleSet& other);
  SampleSet take(const std::vector<int>& rows) const;
  void remove(const std::vector<int>& rows);
  void validate() const;
};

struct SplitSpec {
  int train_per_class = 50;
  double candidate_ratio = 0.20;
};

struct Split {
  SampleSet train;
  SampleSet candidate;  // labels withheld (-1); groundtruth stays with the map
  SampleSet test;
};

/// Stratified split: per class, `train_per_class` rows for training, then
/// candidate_ratio of the remainder as the candidate pool, rest for test.
/// `features` rows must be indexed by pixel. Throws DataError naming the
/// class when one has fewer than train_per_class + 1 labeled pixels.
Split split_samples(const Mat& features, const LabelMap& labels,
                    const SplitSpec& spec, Rng& rng,
                    Domain domain = Domain::source);

struct SynthConfig {
  int classes = 5;
  int bands = 30;
  int size = 64;        // square scene, size x size
  double shift = 0.0;   // per-class mean displacement between domains
  double noise = 0.05;  // per-band Gaussian noise sigma
  int blobs = 24;       // Voronoi cells carving the scene into regions
};

struct SynthBenchmark {
  HyperCube source_cube;
  LabelMap source_labels;
  HyperCube target_cube;
  LabelMap target_labels;
  Mat source_means;  // classes x bands
  Mat target_means;
};

/// Paired source/target scenes: smooth per-class spectral signatures laid
/// out in Voronoi blobs, i.i.d. Gaussian band noise, and target signatures
/// displaced by `shift` along a fixed per-class direction.
SynthBenchmark synth_benchmark(const SynthConfig& cfg, Rng& rng);

struct Metrics {
  double oa = 0.0;
  double aa = 0.0;
  double kappa = 0.0;
  Eigen::MatrixXi confusion;  // truth x predicted
};

/// OA, average per-class recall over classes present in truth, and Cohen's
/// kappa. By convention kappa is 1 when chance agreement is 1 (single-class
/// degenerate case). Labels are 0-based.
Metrics compute_metrics(const std::vector<int>& predicted,
                        const std::vector<int>& truth, int class_count);

/// Keep only the first `bands` bands (cross-sensor band alignment).
HyperCube truncate_bands(const HyperCube& cube, int bands);

// Binary formats, all little-endian. Errors report the byte offset.
//   cube:    "HCUB" u16 version, u32 H W B, f32 values band-sequential
//   labels:  "HLBL" u32 H W, u16 class per pixel row-major
//   matrix:  "FMAT" u32 rows cols, f64 row-major
//   samples: "HSMP" u32 count dim, per sample u32 pixel, u16 label+1
//            (0 = unlabeled), u8 domain, f64 features
HyperCube load_cube(const std::filesystem::path& path);
void save_cube(const std::filesystem::path& path, const HyperCube& cube);
LabelMap load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const LabelMap& map);
Mat load_feature_matrix(const std::filesystem::path& path);
void save_feature_matrix(const std::filesystem::path& path, const Mat& m);
SampleSet load_samples(const std::filesystem::path& path);
void save_samples(const std::filesystem::path& path, const SampleSet& set);

}  // namespace hsi
