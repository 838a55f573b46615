#pragma once

#include "hsi/data.hpp"
#include "hsi/types.hpp"

#include <cstdint>
#include <vector>

namespace hsi {

/// 8-bit image. Quantization maps a component's min..max linearly onto
/// 0..255; a constant component maps to all zeros.
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(int pixel) const {
    return pixels[static_cast<std::size_t>(pixel)];
  }
  int pixel_count() const { return height * width; }
};

GrayImage quantize_component(const Vec& values, int height, int width);
GrayImage negate(const GrayImage& img);

/// Canonical max-tree over 4-connected upper level sets. `parent` holds
/// per-pixel links into canonical nodes; attributes live on canonical
/// nodes, indexed by their pixel id. Std-dev accumulators run over the
/// original (unquantized) component values.
struct MaxTree {
  int height = 0;
  int width = 0;
  std::vector<int> parent;
  std::vector<std::uint8_t> level;
  std::vector<int> nodes;  // canonical nodes, children before parents
  int root = 0;

  std::vector<std::int64_t> area;
  std::vector<double> value_sum;
  std::vector<double> value_sq_sum;

  bool is_canonical(int p) const {
    return parent[static_cast<std::size_t>(p)] == p ||
           level[static_cast<std::size_t>(parent[static_cast<std::size_t>(p)])] !=
               level[static_cast<std::size_t>(p)];
  }
  int canon(int p) const {
    return is_canonical(p) ? p : parent[static_cast<std::size_t>(p)];
  }
  double stddev(int node) const;
};

/// `original_values` supplies the real-valued samples behind the quantized
/// levels; when omitted the quantized levels themselves are accumulated.
MaxTree build_max_tree(const GrayImage& img,
                       const Vec* original_values = nullptr);

enum class Attribute { area, stddev };
enum class FilterRule { direct, max };

/// Attribute filtering on the tree. Area is increasing and always prunes
/// directly (node removed iff area < threshold). Std-dev is non-increasing;
/// with the max rule a node survives when its own attribute passes or any
/// descendant survives. Removed pixels take the nearest kept ancestor's
/// level; with everything removed the image flattens at the root level.
GrayImage attribute_filter(const MaxTree& tree, Attribute attr,
                           double threshold,
                           FilterRule rule = FilterRule::max);

struct EmapConfig {
  Index pc_count = 4;
  std::vector<double> area_thresholds{100, 500, 1000, 5000};  // pixels
  std::vector<double> std_thresholds{0.025, 0.05, 0.075, 0.10};  // of range
  FilterRule std_rule = FilterRule::max;

  Index features_per_component() const {
    return 2 * static_cast<Index>(area_thresholds.size() +
                                  std_thresholds.size()) +
           1;
  }
  void validate() const;
};

/// Morphological attribute profile features over the leading principal
/// components of the cube. Per component the columns are, in order:
/// std-dev thinnings (thresholds descending), std-dev thickenings
/// (ascending), the component itself, area openings (ascending), area
/// closings (descending). Every feature column is min-max scaled to [0, 1].
Mat build_emap(const HyperCube& cube, const EmapConfig& cfg);

}  // namespace hsi
