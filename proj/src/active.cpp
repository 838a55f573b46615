#include "hsi/active.hpp"

#include <algorithm>
#include <numeric>

namespace hsi {

QueryKind parse_query_kind(const std::string& name) {
  if (name == "random") return QueryKind::random;
  if (name == "margin") return QueryKind::margin;
  if (name == "mclu") return QueryKind::mclu;
  throw ConfigError("unknown query strategy \"" + name + "\"");
}

double c_diff_raw(const Vec& values) {
  if (values.size() < 2) {
    throw DimensionError("c_diff: need at least 2 classes, got " +
                         std::to_string(values.size()));
  }
  double top1 = -std::numeric_limits<double>::infinity();
  double top2 = top1;
  for (Index i = 0; i < values.size(); ++i) {
    const double v = values(i);
    if (v > top1) {
      top2 = top1;
      top1 = v;
    } else if (v > top2) {
      top2 = v;
    }
  }
  return top1 - top2;
}

double c_diff(const Vec& probs) { return c_diff_raw(probs); }

QueryBatch select_lowest(const std::vector<double>& scores,
                         const std::vector<int>& pixels, int batch_size) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto sa = scores[static_cast<std::size_t>(a)];
    const auto sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa < sb;
    return pixels[static_cast<std::size_t>(a)] <
           pixels[static_cast<std::size_t>(b)];
  });
  QueryBatch batch;
  for (int i = 0; i < batch_size && i < static_cast<int>(order.size()); ++i) {
    batch.indices.push_back(order[static_cast<std::size_t>(i)]);
    batch.scores.push_back(
        scores[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
  }
  return batch;
}

LabelOracle groundtruth_oracle(const LabelMap& map) {
  return [map](int pixel) {
    if (pixel < 0 || pixel >= static_cast<int>(map.labels.size()) ||
        map.at(pixel) == 0) {
      throw DataError("label oracle: no groundtruth for pixel " +
                      std::to_string(pixel));
    }
    return static_cast<int>(map.at(pixel)) - 1;
  };
}

}  // namespace hsi
