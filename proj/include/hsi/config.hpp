#pragma once

#include "hsi/active.hpp"
#include "hsi/data.hpp"
#include "hsi/emap.hpp"
#include "hsi/model_io.hpp"
#include "hsi/network.hpp"
#include "hsi/transfer.hpp"

#include <filesystem>
#include <optional>

namespace hsi {

struct DataPaths {
  std::filesystem::path cube;
  std::filesystem::path labels;
};

struct DataConfig {
  std::optional<DataPaths> source;
  std::optional<DataPaths> target;
  std::optional<SynthConfig> synthetic;
  int bands_limit = 0;  // >0: keep only the leading bands of loaded cubes
};

/// Supervised-phase schedules: head-only warmup, the initial full pass, and
/// the shorter per-AL-iteration refinement.
struct FinetuneConfig {
  int softmax_epochs = 200;
  int epochs = 500;
  int al_epochs = 100;
  double lr = 0.05;
  double lambda = 7e-7;
  bool refine_all_layers = true;
  Index minibatch = 1;

  FinetuneOptions initial_options() const {
    return {epochs, lr, lambda, refine_all_layers, minibatch};
  }
  FinetuneOptions softmax_options() const {
    return {softmax_epochs, lr, lambda, false, minibatch};
  }
  FinetuneOptions refine_options() const {
    return {al_epochs, lr, lambda, refine_all_layers, minibatch};
  }
};

/// One declarative document drives every subcommand; unknown keys are
/// rejected up front so typos cannot silently fall back to defaults.
struct RunConfig {
  std::uint64_t seed = 42;
  std::filesystem::path output_dir = "out";
  DataConfig data;
  SplitSpec split;
  EmapConfig emap;
  FeatureSource model_kind = FeatureSource::joint;
  BranchConfig branches;
  FinetuneConfig finetune;
  QueryStrategy strategy;
  int al_iterations = 26;
  TransferConfig transfer;
  bool transfer_reinit_head = false;

  void validate() const;
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text);

}  // namespace hsi
