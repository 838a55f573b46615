#pragma once

#include "hsi/emap.hpp"
#include "hsi/network.hpp"

#include <filesystem>
#include <variant>

namespace hsi {

/// Which per-pixel features a saved model consumes, so `classify` can
/// rebuild them for any cube.
enum class FeatureSource : std::uint8_t { spectral = 0, spatial = 1, joint = 2 };

FeatureSource parse_feature_source(const std::string& name);
std::string to_string(FeatureSource source);

/// A model plus the feature recipe it was trained with.
///
/// On disk ("SSAE1" magic, everything little-endian):
///   magic "SSAE1", u8 model kind (0 single / 1 joint), u8 feature source,
///   u8 std filter rule, u32 pc_count,
///   u32 area threshold count + f64 thresholds,
///   u32 std threshold count + f64 thresholds,
///   u32 source band count,
///   then one network record (kind 0) or three (kind 1: spectral, spatial,
///   fusion). A network record is: u32 layer count, u32 input dim, u32
///   class count, per layer u32 in/out dims followed by the raw f64 encoder
///   weight block (row-major) and bias block, and, when the class count is
///   nonzero, u32 feature dim plus the raw f64 softmax weight/bias blocks.
struct ModelFile {
  FeatureSource source = FeatureSource::joint;
  EmapConfig emap;
  int source_bands = 0;  // band count the features were derived from
  std::variant<SsaeNetwork, JointModel> model;

  int class_count() const;
};

void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace hsi
