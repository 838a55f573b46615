#include "hsi/emap.hpp"

#include "hsi/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hsi {

GrayImage quantize_component(const Vec& values, int height, int width) {
  if (values.size() != static_cast<Index>(height) * width) {
    throw DimensionError("quantize_component: " + std::to_string(values.size()) +
                         " values for " + std::to_string(height) + "x" +
                         std::to_string(width) + " image");
  }
  GrayImage img;
  img.height = height;
  img.width = width;
  img.pixels.resize(static_cast<std::size_t>(values.size()));
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  const double range = hi - lo;
  for (Index p = 0; p < values.size(); ++p) {
    const double t = range > 0.0 ? (values(p) - lo) / range : 0.0;
    img.pixels[static_cast<std::size_t>(p)] =
        static_cast<std::uint8_t>(std::lround(255.0 * t));
  }
  return img;
}

GrayImage negate(const GrayImage& img) {
  GrayImage out = img;
  for (auto& v : out.pixels) v = static_cast<std::uint8_t>(255 - v);
  return out;
}

double MaxTree::stddev(int node) const {
  const auto n = static_cast<std::size_t>(node);
  const double count = static_cast<double>(area[n]);
  const double mean = value_sum[n] / count;
  const double var = value_sq_sum[n] / count - mean * mean;
  return std::sqrt(std::max(var, 0.0));
}

namespace {

int find_root(std::vector<int>& zpar, int p) {
  int r = p;
  while (zpar[static_cast<std::size_t>(r)] != r)
    r = zpar[static_cast<std::size_t>(r)];
  while (zpar[static_cast<std::size_t>(p)] != r) {
    const int next = zpar[static_cast<std::size_t>(p)];
    zpar[static_cast<std::size_t>(p)] = r;
    p = next;
  }
  return r;
}

}  // namespace

MaxTree build_max_tree(const GrayImage& img, const Vec* original_values) {
  if (img.pixel_count() == 0) throw DataError("build_max_tree: empty image");
  if (original_values && original_values->size() !=
                             static_cast<Index>(img.pixel_count())) {
    throw DimensionError("build_max_tree: value vector does not match image");
  }

  MaxTree tree;
  tree.height = img.height;
  tree.width = img.width;
  tree.level = img.pixels;
  const int n = img.pixel_count();
  tree.parent.assign(static_cast<std::size_t>(n), -1);

  // Union-find construction: pixels in descending level, ties by index.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return img.at(a) > img.at(b);
  });

  std::vector<int> zpar(static_cast<std::size_t>(n), -1);
  std::vector<char> seen(static_cast<std::size_t>(n), 0);

  const int w = img.width;
  const int h = img.height;
  for (int idx = 0; idx < n; ++idx) {
    const int p = order[static_cast<std::size_t>(idx)];
    tree.parent[static_cast<std::size_t>(p)] = p;
    zpar[static_cast<std::size_t>(p)] = p;
    seen[static_cast<std::size_t>(p)] = 1;

    const int x = p % w;
    const int y = p / w;
    const int neighbors[4] = {x > 0 ? p - 1 : -1, x + 1 < w ? p + 1 : -1,
                              y > 0 ? p - w : -1, y + 1 < h ? p + w : -1};
    for (int q : neighbors) {
      if (q < 0 || !seen[static_cast<std::size_t>(q)]) continue;
      const int r = find_root(zpar, q);
      if (r != p) {
        tree.parent[static_cast<std::size_t>(r)] = p;
        zpar[static_cast<std::size_t>(r)] = p;
      }
    }
  }
  tree.root = order.back();

  // Canonicalization: every parent link targets a canonical node.
  for (int idx = n - 1; idx >= 0; --idx) {
    const int p = order[static_cast<std::size_t>(idx)];
    const int q = tree.parent[static_cast<std::size_t>(p)];
    const int qq = tree.parent[static_cast<std::size_t>(q)];
    if (tree.level[static_cast<std::size_t>(qq)] ==
        tree.level[static_cast<std::size_t>(q)]) {
      tree.parent[static_cast<std::size_t>(p)] = qq;
    }
  }

  // Attributes: per-pixel contributions onto canonical nodes, then a
  // children-first aggregation up the canonical tree.
  tree.area.assign(static_cast<std::size_t>(n), 0);
  tree.value_sum.assign(static_cast<std::size_t>(n), 0.0);
  tree.value_sq_sum.assign(static_cast<std::size_t>(n), 0.0);
  for (int p = 0; p < n; ++p) {
    const auto c = static_cast<std::size_t>(tree.canon(p));
    const double v = original_values ? (*original_values)(p)
                                     : static_cast<double>(img.at(p));
    tree.area[c] += 1;
    tree.value_sum[c] += v;
    tree.value_sq_sum[c] += v * v;
  }

  for (int idx = 0; idx < n; ++idx) {
    const int p = order[static_cast<std::size_t>(idx)];
    if (tree.is_canonical(p)) tree.nodes.push_back(p);
  }
  for (int c : tree.nodes) {
    if (c == tree.root) continue;
    const auto parent = static_cast<std::size_t>(tree.parent[static_cast<std::size_t>(c)]);
    tree.area[parent] += tree.area[static_cast<std::size_t>(c)];
    tree.value_sum[parent] += tree.value_sum[static_cast<std::size_t>(c)];
    tree.value_sq_sum[parent] += tree.value_sq_sum[static_cast<std::size_t>(c)];
  }
  return tree;
}

GrayImage attribute_filter(const MaxTree& tree, Attribute attr,
                           double threshold, FilterRule rule) {
  const int n = tree.height * tree.width;
  std::vector<char> keep(static_cast<std::size_t>(n), 0);

  // Area is increasing, so the direct rule is exact regardless of `rule`.
  const bool use_max_rule = attr == Attribute::stddev && rule == FilterRule::max;

  // nodes is children-first, so descendant survival is known on arrival.
  std::vector<char> kept_below(static_cast<std::size_t>(n), 0);
  for (int c : tree.nodes) {
    const auto ci = static_cast<std::size_t>(c);
    const double value = attr == Attribute::area
                             ? static_cast<double>(tree.area[ci])
                             : tree.stddev(c);
    bool kept = value >= threshold;
    if (use_max_rule && kept_below[ci]) kept = true;
    keep[ci] = kept ? 1 : 0;
    if (kept && c != tree.root) {
      kept_below[static_cast<std::size_t>(tree.parent[ci])] = 1;
    }
  }

  // Top-down: removed nodes inherit the nearest kept ancestor's level, and
  // a fully removed tree flattens at the root level.
  std::vector<std::uint8_t> out_level(static_cast<std::size_t>(n), 0);
  for (auto it = tree.nodes.rbegin(); it != tree.nodes.rend(); ++it) {
    const int c = *it;
    const auto ci = static_cast<std::size_t>(c);
    if (c == tree.root) {
      out_level[ci] = tree.level[ci];
    } else {
      out_level[ci] = keep[ci]
                          ? tree.level[ci]
                          : out_level[static_cast<std::size_t>(tree.parent[ci])];
    }
  }

  GrayImage out;
  out.height = tree.height;
  out.width = tree.width;
  out.pixels.resize(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    out.pixels[static_cast<std::size_t>(p)] =
        out_level[static_cast<std::size_t>(tree.canon(p))];
  }
  return out;
}

void EmapConfig::validate() const {
  if (pc_count < 1) throw ConfigError("emap: pc_count must be >= 1");
  for (const auto* list : {&area_thresholds, &std_thresholds}) {
    for (std::size_t i = 0; i < list->size(); ++i) {
      if ((*list)[i] <= 0.0) {
        throw ConfigError("emap: thresholds must be positive");
      }
      if (i > 0 && (*list)[i] <= (*list)[i - 1]) {
        throw ConfigError("emap: thresholds must be strictly increasing");
      }
    }
  }
}

namespace {

Vec image_as_vec(const GrayImage& img) {
  Vec v(img.pixel_count());
  for (int p = 0; p < img.pixel_count(); ++p)
    v(p) = static_cast<double>(img.at(p));
  return v;
}

void minmax_scale_columns(Mat& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    const double lo = m.col(j).minCoeff();
    const double hi = m.col(j).maxCoeff();
    if (hi > lo) {
      m.col(j) = (m.col(j).array() - lo) / (hi - lo);
    } else {
      m.col(j).setZero();
    }
  }
}

}  // namespace

Mat build_emap(const HyperCube& cube, const EmapConfig& cfg) {
  cfg.validate();
  if (cfg.pc_count > cube.bands) {
    throw DimensionError("build_emap: pc_count " + std::to_string(cfg.pc_count) +
                         " exceeds " + std::to_string(cube.bands) + " bands");
  }
  const PcaResult pca = pca_components(cube.scaled(), cfg.pc_count);
  const Mat components = pca_project(cube.scaled(), pca);

  const Index per_component = cfg.features_per_component();
  Mat emap(cube.pixel_count(), cfg.pc_count * per_component);

  for (Index j = 0; j < cfg.pc_count; ++j) {
    const Vec values = components.col(j);
    const double range = values.maxCoeff() - values.minCoeff();
    const GrayImage img = quantize_component(values, cube.height, cube.width);
    const Vec neg_values = -values;
    const MaxTree max_tree = build_max_tree(img, &values);
    const MaxTree min_tree = build_max_tree(negate(img), &neg_values);

    Index col = j * per_component;
    for (auto it = cfg.std_thresholds.rbegin();
         it != cfg.std_thresholds.rend(); ++it) {
      emap.col(col++) = image_as_vec(attribute_filter(
          max_tree, Attribute::stddev, *it * range, cfg.std_rule));
    }
    for (double t : cfg.std_thresholds) {
      emap.col(col++) = 255.0 - image_as_vec(attribute_filter(
                                    min_tree, Attribute::stddev, t * range,
                                    cfg.std_rule))
                                    .array();
    }
    emap.col(col++) = values;
    for (double t : cfg.area_thresholds) {
      emap.col(col++) = image_as_vec(
          attribute_filter(max_tree, Attribute::area, t, FilterRule::direct));
    }
    for (auto it = cfg.area_thresholds.rbegin();
         it != cfg.area_thresholds.rend(); ++it) {
      emap.col(col++) = 255.0 - image_as_vec(attribute_filter(
                                    min_tree, Attribute::area, *it,
                                    FilterRule::direct))
                                    .array();
    }
  }
  minmax_scale_columns(emap);
  return emap;
}

}  // namespace hsi
