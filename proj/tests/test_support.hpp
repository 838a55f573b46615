#pragma once

// Shared oracles and helpers for the unit and acceptance suites. Everything
// here is deliberately independent of the library's implementation paths:
// finite differences for gradients, threshold decomposition for attribute
// filters, and exhaustive sorting for selection.

#include "hsi/autoencoder.hpp"
#include "hsi/emap.hpp"
#include "hsi/network.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace support {

struct Block {
  double* data;
  hsi::Index size;
};

inline std::vector<Block> blocks(hsi::SaeLayer& layer) {
  return {{layer.w_enc.data(), layer.w_enc.size()},
          {layer.b_enc.data(), layer.b_enc.size()},
          {layer.w_dec.data(), layer.w_dec.size()},
          {layer.b_dec.data(), layer.b_dec.size()}};
}

inline std::vector<Block> blocks(hsi::SsaeNetwork& net) {
  std::vector<Block> out;
  for (hsi::SaeLayer& layer : net.layers) {
    out.push_back({layer.w_enc.data(), layer.w_enc.size()});
    out.push_back({layer.b_enc.data(), layer.b_enc.size()});
  }
  if (net.has_head()) {
    out.push_back({net.softmax_w.data(), net.softmax_w.size()});
    out.push_back({net.softmax_b.data(), net.softmax_b.size()});
  }
  return out;
}

inline std::vector<Block> blocks(hsi::JointModel& jm) {
  std::vector<Block> out = blocks(jm.spectral);
  for (Block b : blocks(jm.spatial)) out.push_back(b);
  for (Block b : blocks(jm.fusion)) out.push_back(b);
  return out;
}

/// Central finite differences of `loss` with respect to every entry of
/// every block, in block order.
inline std::vector<std::vector<double>> finite_difference(
    const std::vector<Block>& params, const std::function<double()>& loss,
    double eps = 1e-5) {
  std::vector<std::vector<double>> grads;
  for (const Block& block : params) {
    std::vector<double> g(static_cast<std::size_t>(block.size));
    for (hsi::Index i = 0; i < block.size; ++i) {
      const double saved = block.data[i];
      block.data[i] = saved + eps;
      const double plus = loss();
      block.data[i] = saved - eps;
      const double minus = loss();
      block.data[i] = saved;
      g[static_cast<std::size_t>(i)] = (plus - minus) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

/// Relative error with a floor, so finite-difference noise on near-zero
/// entries does not dominate.
inline double rel_err(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-3});
  return std::abs(analytic - numeric) / denom;
}

inline double max_rel_err(const std::vector<double>& numeric,
                          const double* analytic) {
  double worst = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    worst = std::max(worst, rel_err(analytic[i], numeric[i]));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Brute-force attribute filter via threshold decomposition plus connected
// components, pixel-exact on small images.

struct FlatComponents {
  std::vector<int> label;  // per pixel, -1 where below threshold
  int count = 0;
};

inline FlatComponents connected_components(const hsi::GrayImage& img,
                                           int level) {
  FlatComponents cc;
  const int n = img.pixel_count();
  cc.label.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> stack;
  for (int p = 0; p < n; ++p) {
    if (img.at(p) < level || cc.label[static_cast<std::size_t>(p)] >= 0)
      continue;
    const int id = cc.count++;
    stack.push_back(p);
    cc.label[static_cast<std::size_t>(p)] = id;
    while (!stack.empty()) {
      const int q = stack.back();
      stack.pop_back();
      const int x = q % img.width;
      const int y = q / img.width;
      const int neighbors[4] = {x > 0 ? q - 1 : -1,
                                x + 1 < img.width ? q + 1 : -1,
                                y > 0 ? q - img.width : -1,
                                y + 1 < img.height ? q + img.width : -1};
      for (int r : neighbors) {
        if (r >= 0 && img.at(r) >= level &&
            cc.label[static_cast<std::size_t>(r)] < 0) {
          cc.label[static_cast<std::size_t>(r)] = id;
          stack.push_back(r);
        }
      }
    }
  }
  return cc;
}

/// Reference attribute filter. Walks levels top-down deciding kept
/// components (max rule carries descendant survival; direct rule does not),
/// then reads each pixel's highest kept level; pixels with no kept
/// component fall back to the global minimum level.
inline hsi::GrayImage brute_force_filter(const hsi::GrayImage& img,
                                         const hsi::Vec* values,
                                         hsi::Attribute attr, double threshold,
                                         hsi::FilterRule rule) {
  const int n = img.pixel_count();
  int lo = 255, hi = 0;
  for (int p = 0; p < n; ++p) {
    lo = std::min<int>(lo, img.at(p));
    hi = std::max<int>(hi, img.at(p));
  }

  std::vector<int> best(static_cast<std::size_t>(n), -1);
  std::vector<char> kept_above(static_cast<std::size_t>(n), 0);

  for (int level = hi; level >= lo; --level) {
    const FlatComponents cc = connected_components(img, level);
    if (cc.count == 0) continue;
    std::vector<double> area(static_cast<std::size_t>(cc.count), 0.0);
    std::vector<double> sum(static_cast<std::size_t>(cc.count), 0.0);
    std::vector<double> sq(static_cast<std::size_t>(cc.count), 0.0);
    std::vector<char> has_kept_desc(static_cast<std::size_t>(cc.count), 0);
    for (int p = 0; p < n; ++p) {
      const int id = cc.label[static_cast<std::size_t>(p)];
      if (id < 0) continue;
      const double v = values ? (*values)(p) : static_cast<double>(img.at(p));
      area[static_cast<std::size_t>(id)] += 1.0;
      sum[static_cast<std::size_t>(id)] += v;
      sq[static_cast<std::size_t>(id)] += v * v;
      if (kept_above[static_cast<std::size_t>(p)])
        has_kept_desc[static_cast<std::size_t>(id)] = 1;
    }
    std::vector<char> kept(static_cast<std::size_t>(cc.count), 0);
    for (int id = 0; id < cc.count; ++id) {
      double value;
      if (attr == hsi::Attribute::area) {
        value = area[static_cast<std::size_t>(id)];
      } else {
        const double mean =
            sum[static_cast<std::size_t>(id)] / area[static_cast<std::size_t>(id)];
        value = std::sqrt(std::max(
            sq[static_cast<std::size_t>(id)] / area[static_cast<std::size_t>(id)] -
                mean * mean,
            0.0));
      }
      bool keep = value >= threshold;
      if (rule == hsi::FilterRule::max && has_kept_desc[static_cast<std::size_t>(id)])
        keep = true;
      kept[static_cast<std::size_t>(id)] = keep ? 1 : 0;
    }
    for (int p = 0; p < n; ++p) {
      const int id = cc.label[static_cast<std::size_t>(p)];
      if (id < 0) continue;
      if (kept[static_cast<std::size_t>(id)]) {
        kept_above[static_cast<std::size_t>(p)] = 1;
        if (best[static_cast<std::size_t>(p)] < 0)
          best[static_cast<std::size_t>(p)] = level;
      }
    }
  }

  hsi::GrayImage out;
  out.height = img.height;
  out.width = img.width;
  out.pixels.resize(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    const int v = best[static_cast<std::size_t>(p)];
    out.pixels[static_cast<std::size_t>(p)] =
        static_cast<std::uint8_t>(v < 0 ? lo : v);
  }
  return out;
}

}  // namespace support
