#include "hsi/transfer.hpp"

namespace hsi {

double c_rem(const Vec& p0, const Vec& pi, int true_class) {
  if (p0.size() != pi.size()) {
    throw DimensionError("c_rem: distributions have " +
                         std::to_string(p0.size()) + " and " +
                         std::to_string(pi.size()) + " classes");
  }
  if (true_class < 0 || true_class >= p0.size()) {
    throw DataError("c_rem: class " + std::to_string(true_class) +
                    " outside [0, " + std::to_string(p0.size()) + ")");
  }
  return p0(true_class) - pi(true_class);
}

}  // namespace hsi
