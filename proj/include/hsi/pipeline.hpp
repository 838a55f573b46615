#pragma once

#include "hsi/config.hpp"
#include "hsi/model_io.hpp"
#include "hsi/transfer.hpp"

#include <filesystem>
#include <vector>

namespace hsi {

/// A scene with the per-pixel feature matrix the configured model consumes
/// (scaled spectra, EMAP features, or their concatenation).
struct PreparedScene {
  HyperCube cube;
  LabelMap labels;
  Mat features;
};

/// Derives the per-pixel model features for a scene. `source_bands` pins
/// the band count the model was trained on; wider cubes are truncated
/// before either branch sees them, narrower ones are an error.
PreparedScene prepare_scene(const HyperCube& cube, const LabelMap& labels,
                            FeatureSource source, const EmapConfig& emap,
                            int source_bands = 0);

struct PretrainOutput {
  ModelFile model;
  SampleSet training;  // final (post-AL) labeled set
  std::vector<AlRecord> curve;
};

/// Full source-domain pipeline: branch pretraining, head warmup, initial
/// fine-tune, then the batch-mode AL loop. Everything derives from the
/// config seed.
PretrainOutput run_pretrain(const RunConfig& cfg);

struct TransferOutput {
  ModelFile model;
  TransferReport report;
};

/// Target-domain adaptation of a saved model per the transfer settings.
TransferOutput run_transfer(const RunConfig& cfg, const ModelFile& model,
                            const SampleSet& source_training);

LabelMap run_classify(const ModelFile& model, const HyperCube& cube);

/// Compares a predicted map against groundtruth over labeled pixels;
/// predictions of 0 at labeled pixels count as errors.
Metrics run_eval(const LabelMap& predicted, const LabelMap& truth);

void write_al_csv(const std::filesystem::path& path,
                  const std::vector<AlRecord>& records);
void write_transfer_csv(const std::filesystem::path& path,
                        const TransferReport& report);
void write_metrics_csv(const std::filesystem::path& path, const Metrics& m);

}  // namespace hsi
