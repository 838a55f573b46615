#include "hsi/data.hpp"

#include "binio.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <map>
#include <set>
#include <string>

namespace hsi {

Mat HyperCube::scaled() const {
  const Vec lo = band_min();
  const Vec hi = band_max();
  Mat out(raw.rows(), raw.cols());
  for (Index b = 0; b < raw.cols(); ++b) {
    const double range = hi(b) - lo(b);
    if (range > 0.0) {
      out.col(b) = (raw.col(b).array() - lo(b)) / range;
    } else {
      out.col(b).setZero();
    }
  }
  return out;
}

int LabelMap::class_count() const {
  std::uint16_t max_class = 0;
  for (std::uint16_t v : labels) max_class = std::max(max_class, v);
  return static_cast<int>(max_class);
}

void SampleSet::append_row(const Vec& row, int label, int pixel,
                           Domain domain) {
  if (features.rows() == 0) {
    features.resize(1, row.size());
    features.row(0) = row.transpose();
  } else {
    if (row.size() != features.cols()) {
      throw DimensionError("SampleSet: row has " + std::to_string(row.size()) +
                           " features, set has " +
                           std::to_string(features.cols()));
    }
    features.conservativeResize(features.rows() + 1, Eigen::NoChange);
    features.row(features.rows() - 1) = row.transpose();
  }
  labels.push_back(label);
  pixels.push_back(pixel);
  domains.push_back(domain);
}

void SampleSet::append(const SampleSet& other) {
  if (other.empty()) return;
  if (empty()) {
    *this = other;
    return;
  }
  if (other.features.cols() != features.cols()) {
    throw DimensionError("SampleSet::append: feature dims differ: " +
                         std::to_string(features.cols()) + " vs " +
                         std::to_string(other.features.cols()));
  }
  const Index old_rows = features.rows();
  features.conservativeResize(old_rows + other.features.rows(),
                              Eigen::NoChange);
  features.bottomRows(other.features.rows()) = other.features;
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  pixels.insert(pixels.end(), other.pixels.begin(), other.pixels.end());
  domains.insert(domains.end(), other.domains.begin(), other.domains.end());
}

SampleSet SampleSet::take(const std::vector<int>& rows) const {
  SampleSet out;
  out.features.resize(static_cast<Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  out.pixels.reserve(rows.size());
  out.domains.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<std::size_t>(rows[i]);
    out.features.row(static_cast<Index>(i)) = features.row(rows[i]);
    out.labels.push_back(labels[r]);
    out.pixels.push_back(pixels[r]);
    out.domains.push_back(domains[r]);
  }
  return out;
}

void SampleSet::remove(const std::vector<int>& rows) {
  if (rows.empty()) return;
  std::set<int> drop(rows.begin(), rows.end());
  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(size()));
  for (Index i = 0; i < size(); ++i) {
    if (!drop.count(static_cast<int>(i))) keep.push_back(static_cast<int>(i));
  }
  *this = take(keep);
}

void SampleSet::validate() const {
  const auto n = static_cast<std::size_t>(size());
  if (labels.size() != n || pixels.size() != n || domains.size() != n) {
    throw DataError("SampleSet: parallel arrays out of sync");
  }
  std::set<std::pair<Domain, int>> seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen.insert({domains[i], pixels[i]}).second) {
      throw DataError("SampleSet: duplicate pixel " +
                      std::to_string(pixels[i]) + " within a domain");
    }
  }
}

Split split_samples(const Mat& features, const LabelMap& labels,
                    const SplitSpec& spec, Rng& rng, Domain domain) {
  if (features.rows() != static_cast<Index>(labels.labels.size())) {
    throw DimensionError("split_samples: " + std::to_string(features.rows()) +
                         " feature rows for " +
                         std::to_string(labels.labels.size()) + " pixels");
  }
  const int class_count = labels.class_count();
  if (class_count < 1) throw DataError("split_samples: no labeled pixels");

  std::map<int, std::vector<int>> by_class;
  for (int p = 0; p < static_cast<int>(labels.labels.size()); ++p) {
    const int c = labels.at(p);
    if (c > 0) by_class[c - 1].push_back(p);
  }

  Split out;
  for (int c = 0; c < class_count; ++c) {
    auto& pool = by_class[c];
    const int available = static_cast<int>(pool.size());
    if (available < spec.train_per_class + 1) {
      throw DataError("split_samples: class " + std::to_string(c + 1) +
                      " has " + std::to_string(available) +
                      " labeled pixels; needs at least " +
                      std::to_string(spec.train_per_class + 1));
    }
    rng.shuffle(pool);
    const int remaining = available - spec.train_per_class;
    const int candidate_count = static_cast<int>(
        std::lround(spec.candidate_ratio * static_cast<double>(remaining)));

    for (int i = 0; i < available; ++i) {
      const int pixel = pool[static_cast<std::size_t>(i)];
      const Vec row = features.row(pixel).transpose();
      if (i < spec.train_per_class) {
        out.train.append_row(row, c, pixel, domain);
      } else if (i < spec.train_per_class + candidate_count) {
        out.candidate.append_row(row, -1, pixel, domain);
      } else {
        out.test.append_row(row, c, pixel, domain);
      }
    }
  }
  return out;
}

namespace {

Mat class_means(const SynthConfig& cfg, Rng& rng) {
  Mat means(cfg.classes, cfg.bands);
  for (int c = 0; c < cfg.classes; ++c) {
    const double base = rng.uniform(0.30, 0.70);
    const double amplitude = rng.uniform(0.08, 0.22);
    const double cycles = 1.0 + rng.below(3);
    const double phase = rng.uniform(0.0, 1.0);
    for (int b = 0; b < cfg.bands; ++b) {
      means(c, b) = base + amplitude * std::sin(2.0 * M_PI *
                                                (cycles * b / cfg.bands + phase));
    }
  }
  return means;
}

struct BlobLayout {
  std::vector<int> cell_class;  // per blob
  std::vector<int> seed_x, seed_y;
};

BlobLayout make_blobs(const SynthConfig& cfg, Rng& rng) {
  BlobLayout layout;
  for (int i = 0; i < cfg.blobs; ++i) {
    layout.seed_x.push_back(static_cast<int>(rng.below(cfg.size)));
    layout.seed_y.push_back(static_cast<int>(rng.below(cfg.size)));
    // First pass guarantees every class appears at least once.
    layout.cell_class.push_back(i < cfg.classes
                                    ? i
                                    : static_cast<int>(rng.below(cfg.classes)));
  }
  return layout;
}

void fill_domain(const SynthConfig& cfg, const Mat& means,
                 const BlobLayout& layout, Rng& rng, HyperCube& cube,
                 LabelMap& labels) {
  cube.height = cfg.size;
  cube.width = cfg.size;
  cube.bands = cfg.bands;
  cube.raw.resize(cfg.size * cfg.size, cfg.bands);
  labels.height = cfg.size;
  labels.width = cfg.size;
  labels.labels.assign(static_cast<std::size_t>(cfg.size * cfg.size), 0);

  for (int y = 0; y < cfg.size; ++y) {
    for (int x = 0; x < cfg.size; ++x) {
      int best = 0;
      long best_d = LONG_MAX;
      for (int i = 0; i < cfg.blobs; ++i) {
        const long dx = x - layout.seed_x[static_cast<std::size_t>(i)];
        const long dy = y - layout.seed_y[static_cast<std::size_t>(i)];
        const long d = dx * dx + dy * dy;
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      const int c = layout.cell_class[static_cast<std::size_t>(best)];
      const int pixel = y * cfg.size + x;
      labels.labels[static_cast<std::size_t>(pixel)] =
          static_cast<std::uint16_t>(c + 1);
      for (int b = 0; b < cfg.bands; ++b) {
        cube.raw(pixel, b) = means(c, b) + cfg.noise * rng.normal();
      }
    }
  }
}

}  // namespace

SynthBenchmark synth_benchmark(const SynthConfig& cfg, Rng& rng) {
  if (cfg.classes < 2 || cfg.bands < 1 || cfg.size < 4 ||
      cfg.blobs < cfg.classes) {
    throw ConfigError("synth_benchmark: invalid configuration");
  }
  SynthBenchmark out;
  out.source_means = class_means(cfg, rng);

  // Fixed per-class displacement directions; a zero shift keeps the
  // signatures identical between domains.
  out.target_means = out.source_means;
  for (int c = 0; c < cfg.classes; ++c) {
    Vec direction(cfg.bands);
    for (int b = 0; b < cfg.bands; ++b) direction(b) = rng.normal();
    direction.normalize();
    out.target_means.row(c) += cfg.shift * direction.transpose();
  }

  const BlobLayout source_layout = make_blobs(cfg, rng);
  const BlobLayout target_layout = make_blobs(cfg, rng);
  fill_domain(cfg, out.source_means, source_layout, rng, out.source_cube,
              out.source_labels);
  fill_domain(cfg, out.target_means, target_layout, rng, out.target_cube,
              out.target_labels);
  return out;
}

Metrics compute_metrics(const std::vector<int>& predicted,
                        const std::vector<int>& truth, int class_count) {
  if (predicted.empty() || predicted.size() != truth.size()) {
    throw DataError("compute_metrics: need equal-length nonempty inputs");
  }
  Metrics m;
  m.confusion = Eigen::MatrixXi::Zero(class_count, class_count);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= class_count || predicted[i] < 0 ||
        predicted[i] >= class_count) {
      throw DataError("compute_metrics: label outside [0, " +
                      std::to_string(class_count) + ") at row " +
                      std::to_string(i));
    }
    m.confusion(truth[i], predicted[i]) += 1;
  }
  const double total = static_cast<double>(truth.size());
  m.oa = static_cast<double>(m.confusion.trace()) / total;

  double recall_sum = 0.0;
  int present = 0;
  double pe = 0.0;
  for (int c = 0; c < class_count; ++c) {
    const double row = m.confusion.row(c).sum();
    const double col = m.confusion.col(c).sum();
    pe += (row / total) * (col / total);
    if (row > 0) {
      recall_sum += m.confusion(c, c) / row;
      ++present;
    }
  }
  m.aa = present > 0 ? recall_sum / present : 0.0;
  m.kappa = pe >= 1.0 ? 1.0 : (m.oa - pe) / (1.0 - pe);
  return m;
}

HyperCube truncate_bands(const HyperCube& cube, int bands) {
  if (bands < 1 || bands > cube.bands) {
    throw DimensionError("truncate_bands: cannot keep " +
                         std::to_string(bands) + " of " +
                         std::to_string(cube.bands) + " bands");
  }
  HyperCube out;
  out.height = cube.height;
  out.width = cube.width;
  out.bands = bands;
  out.raw = cube.raw.leftCols(bands);
  return out;
}

// Binary formats are little-endian regardless of host; see binio.hpp.
using binio::Reader;
using binio::Writer;

HyperCube load_cube(const std::filesystem::path& path) {
  Reader r(path, "load_cube");
  r.expect_magic("HCUB", 4);
  const std::uint16_t version = r.u16();
  if (version != 1) {
    throw DataError("load_cube: unsupported version " +
                    std::to_string(version));
  }
  HyperCube cube;
  cube.height = static_cast<int>(r.u32());
  cube.width = static_cast<int>(r.u32());
  cube.bands = static_cast<int>(r.u32());
  if (cube.height <= 0 || cube.width <= 0 || cube.bands <= 0) {
    throw DataError("load_cube: degenerate dimensions in header");
  }
  cube.raw.resize(cube.pixel_count(), cube.bands);
  for (int b = 0; b < cube.bands; ++b) {
    for (int p = 0; p < cube.pixel_count(); ++p) {
      cube.raw(p, b) = static_cast<double>(r.f32());
    }
  }
  return cube;
}

void save_cube(const std::filesystem::path& path, const HyperCube& cube) {
  Writer w(path, "save_cube");
  w.bytes("HCUB", 4);
  w.u16(1);
  w.u32(static_cast<std::uint32_t>(cube.height));
  w.u32(static_cast<std::uint32_t>(cube.width));
  w.u32(static_cast<std::uint32_t>(cube.bands));
  for (int b = 0; b < cube.bands; ++b) {
    for (int p = 0; p < cube.pixel_count(); ++p) {
      w.f32(static_cast<float>(cube.raw(p, b)));
    }
  }
}

LabelMap load_labels(const std::filesystem::path& path) {
  Reader r(path, "load_labels");
  r.expect_magic("HLBL", 4);
  LabelMap map;
  map.height = static_cast<int>(r.u32());
  map.width = static_cast<int>(r.u32());
  if (map.height <= 0 || map.width <= 0) {
    throw DataError("load_labels: degenerate dimensions in header");
  }
  map.labels.resize(static_cast<std::size_t>(map.height) * map.width);
  for (auto& v : map.labels) v = r.u16();
  return map;
}

void save_labels(const std::filesystem::path& path, const LabelMap& map) {
  Writer w(path, "save_labels");
  w.bytes("HLBL", 4);
  w.u32(static_cast<std::uint32_t>(map.height));
  w.u32(static_cast<std::uint32_t>(map.width));
  for (std::uint16_t v : map.labels) w.u16(v);
}

Mat load_feature_matrix(const std::filesystem::path& path) {
  Reader r(path, "load_feature_matrix");
  r.expect_magic("FMAT", 4);
  const auto rows = static_cast<Index>(r.u32());
  const auto cols = static_cast<Index>(r.u32());
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = r.f64();
  return m;
}

void save_feature_matrix(const std::filesystem::path& path, const Mat& m) {
  Writer w(path, "save_feature_matrix");
  w.bytes("FMAT", 4);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) w.f64(m(i, j));
}

SampleSet load_samples(const std::filesystem::path& path) {
  Reader r(path, "load_samples");
  r.expect_magic("HSMP", 4);
  const auto count = static_cast<Index>(r.u32());
  const auto dim = static_cast<Index>(r.u32());
  SampleSet set;
  set.features.resize(count, dim);
  for (Index i = 0; i < count; ++i) {
    set.pixels.push_back(static_cast<int>(r.u32()));
    set.labels.push_back(static_cast<int>(r.u16()) - 1);
    const std::uint8_t domain = r.u8();
    if (domain > 1) {
      throw DataError("load_samples: bad domain byte at sample " +
                      std::to_string(i));
    }
    set.domains.push_back(static_cast<Domain>(domain));
    for (Index j = 0; j < dim; ++j) set.features(i, j) = r.f64();
  }
  return set;
}

void save_samples(const std::filesystem::path& path, const SampleSet& set) {
  Writer w(path, "save_samples");
  w.bytes("HSMP", 4);
  w.u32(static_cast<std::uint32_t>(set.size()));
  w.u32(static_cast<std::uint32_t>(set.features.cols()));
  for (Index i = 0; i < set.size(); ++i) {
    w.u32(static_cast<std::uint32_t>(set.pixels[static_cast<std::size_t>(i)]));
    w.u16(static_cast<std::uint16_t>(set.labels[static_cast<std::size_t>(i)] + 1));
    w.u8(static_cast<std::uint8_t>(set.domains[static_cast<std::size_t>(i)]));
    for (Index j = 0; j < set.features.cols(); ++j) w.f64(set.features(i, j));
  }
}

}  // namespace hsi
