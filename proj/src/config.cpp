#include "hsi/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <string>

namespace hsi {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) {
    throw ConfigError("config: \"" + where + "\" must be an object");
  }
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      const std::string path = where.empty() ? key : where + "." + key;
      throw ConfigError("config: unknown key \"" + path + "\"");
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config: bad value for \"" + std::string(key) +
                      "\": " + e.what());
  }
}

void read_hidden(const json& obj, const char* key, std::vector<Index>& out) {
  if (!obj.contains(key)) return;
  std::vector<long> raw;
  read(obj, key, raw);
  out.clear();
  for (long v : raw) {
    if (v < 1) throw ConfigError("config: hidden sizes must be >= 1");
    out.push_back(static_cast<Index>(v));
  }
}

DataPaths parse_paths(const json& obj, const std::string& where) {
  check_keys(obj, where, {"cube", "labels"});
  DataPaths paths;
  std::string cube, labels;
  read(obj, "cube", cube);
  read(obj, "labels", labels);
  if (cube.empty() || labels.empty()) {
    throw ConfigError("config: \"" + where +
                      "\" needs both \"cube\" and \"labels\"");
  }
  paths.cube = cube;
  paths.labels = labels;
  return paths;
}

void parse_sae(const json& obj, const std::string& where, SaeHyper& hyper) {
  check_keys(obj, where,
             {"rho", "beta", "lambda", "lr", "epochs", "minibatch"});
  read(obj, "rho", hyper.rho);
  read(obj, "beta", hyper.beta);
  read(obj, "lambda", hyper.lambda);
  read(obj, "lr", hyper.lr);
  read(obj, "epochs", hyper.epochs);
  long minibatch = static_cast<long>(hyper.minibatch);
  read(obj, "minibatch", minibatch);
  hyper.minibatch = static_cast<Index>(minibatch);
}

RunConfig parse(const json& root) {
  check_keys(root, "",
             {"seed", "output_dir", "data", "split", "emap", "model",
              "branches", "finetune", "active", "transfer"});
  RunConfig cfg;
  read(root, "seed", cfg.seed);
  std::string out_dir = cfg.output_dir.string();
  read(root, "output_dir", out_dir);
  cfg.output_dir = out_dir;

  if (root.contains("data")) {
    const json& data = root.at("data");
    check_keys(data, "data", {"source", "target", "synthetic", "bands_limit"});
    read(data, "bands_limit", cfg.data.bands_limit);
    if (cfg.data.bands_limit < 0) {
      throw ConfigError("config: data.bands_limit must be >= 0");
    }
    if (data.contains("source"))
      cfg.data.source = parse_paths(data.at("source"), "data.source");
    if (data.contains("target"))
      cfg.data.target = parse_paths(data.at("target"), "data.target");
    if (data.contains("synthetic")) {
      const json& synth = data.at("synthetic");
      check_keys(synth, "data.synthetic",
                 {"classes", "bands", "size", "shift", "noise", "blobs"});
      SynthConfig s;
      read(synth, "classes", s.classes);
      read(synth, "bands", s.bands);
      read(synth, "size", s.size);
      read(synth, "shift", s.shift);
      read(synth, "noise", s.noise);
      read(synth, "blobs", s.blobs);
      cfg.data.synthetic = s;
    }
  }

  if (root.contains("split")) {
    const json& split = root.at("split");
    check_keys(split, "split", {"train_per_class", "candidate_ratio"});
    read(split, "train_per_class", cfg.split.train_per_class);
    read(split, "candidate_ratio", cfg.split.candidate_ratio);
  }

  if (root.contains("emap")) {
    const json& emap = root.at("emap");
    check_keys(emap, "emap",
               {"pc_count", "area_thresholds", "std_thresholds", "std_rule"});
    long pc = static_cast<long>(cfg.emap.pc_count);
    read(emap, "pc_count", pc);
    cfg.emap.pc_count = static_cast<Index>(pc);
    read(emap, "area_thresholds", cfg.emap.area_thresholds);
    read(emap, "std_thresholds", cfg.emap.std_thresholds);
    if (emap.contains("std_rule")) {
      std::string rule;
      read(emap, "std_rule", rule);
      if (rule == "max") {
        cfg.emap.std_rule = FilterRule::max;
      } else if (rule == "direct") {
        cfg.emap.std_rule = FilterRule::direct;
      } else {
        throw ConfigError("config: emap.std_rule must be \"max\" or \"direct\"");
      }
    }
  }

  if (root.contains("model")) {
    const json& model = root.at("model");
    check_keys(model, "model", {"kind"});
    std::string kind = to_string(cfg.model_kind);
    read(model, "kind", kind);
    cfg.model_kind = parse_feature_source(kind);
  }

  if (root.contains("branches")) {
    const json& branches = root.at("branches");
    check_keys(branches, "branches",
               {"spectral_hidden", "spatial_hidden", "fusion_hidden", "sae",
                "sae_spectral", "sae_spatial", "sae_fusion"});
    read_hidden(branches, "spectral_hidden", cfg.branches.spectral_hidden);
    read_hidden(branches, "spatial_hidden", cfg.branches.spatial_hidden);
    read_hidden(branches, "fusion_hidden", cfg.branches.fusion_hidden);
    if (branches.contains("sae")) {
      parse_sae(branches.at("sae"), "branches.sae", cfg.branches.spectral_sae);
      cfg.branches.spatial_sae = cfg.branches.spectral_sae;
      cfg.branches.fusion_sae = cfg.branches.spectral_sae;
    }
    if (branches.contains("sae_spectral"))
      parse_sae(branches.at("sae_spectral"), "branches.sae_spectral",
                cfg.branches.spectral_sae);
    if (branches.contains("sae_spatial"))
      parse_sae(branches.at("sae_spatial"), "branches.sae_spatial",
                cfg.branches.spatial_sae);
    if (branches.contains("sae_fusion"))
      parse_sae(branches.at("sae_fusion"), "branches.sae_fusion",
                cfg.branches.fusion_sae);
  }

  if (root.contains("finetune")) {
    const json& ft = root.at("finetune");
    check_keys(ft, "finetune",
               {"softmax_epochs", "epochs", "al_epochs", "lr", "lambda",
                "refine_all_layers", "minibatch"});
    read(ft, "softmax_epochs", cfg.finetune.softmax_epochs);
    read(ft, "epochs", cfg.finetune.epochs);
    read(ft, "al_epochs", cfg.finetune.al_epochs);
    read(ft, "lr", cfg.finetune.lr);
    read(ft, "lambda", cfg.finetune.lambda);
    read(ft, "refine_all_layers", cfg.finetune.refine_all_layers);
    long minibatch = static_cast<long>(cfg.finetune.minibatch);
    read(ft, "minibatch", minibatch);
    cfg.finetune.minibatch = static_cast<Index>(minibatch);
  }

  if (root.contains("active")) {
    const json& active = root.at("active");
    check_keys(active, "active", {"strategy", "batch_size", "iterations"});
    if (active.contains("strategy")) {
      std::string name;
      read(active, "strategy", name);
      cfg.strategy.kind = parse_query_kind(name);
    }
    read(active, "batch_size", cfg.strategy.batch_size);
    read(active, "iterations", cfg.al_iterations);
  }

  if (root.contains("transfer")) {
    const json& transfer = root.at("transfer");
    check_keys(transfer, "transfer",
               {"t_plus", "s_minus", "epsilon", "max_iters", "reinit_head"});
    read(transfer, "t_plus", cfg.transfer.t_plus);
    read(transfer, "s_minus", cfg.transfer.s_minus);
    read(transfer, "epsilon", cfg.transfer.epsilon);
    read(transfer, "max_iters", cfg.transfer.max_iters);
    read(transfer, "reinit_head", cfg.transfer_reinit_head);
  }

  cfg.validate();
  return cfg;
}

}  // namespace

void RunConfig::validate() const {
  if (!data.source && !data.synthetic && !data.target) {
    throw ConfigError("config: \"data\" must name files or a synthetic scene");
  }
  if (split.train_per_class < 0) {
    throw ConfigError("config: split.train_per_class must be >= 0");
  }
  if (split.candidate_ratio < 0.0 || split.candidate_ratio > 1.0) {
    throw ConfigError("config: split.candidate_ratio must lie in [0, 1]");
  }
  emap.validate();
  // Branch hyperparameters; the hidden width comes from the size lists.
  const auto check_sae = [](const SaeHyper& h) {
    SaeHyper with_width = h;
    with_width.hidden = 1;
    with_width.validate();
  };
  check_sae(branches.spectral_sae);
  check_sae(branches.spatial_sae);
  check_sae(branches.fusion_sae);
  if (branches.spectral_hidden.empty() || branches.spatial_hidden.empty() ||
      branches.fusion_hidden.empty()) {
    throw ConfigError("config: branch hidden sizes must be nonempty");
  }
  if (strategy.batch_size < 1) {
    throw ConfigError("config: active.batch_size must be >= 1");
  }
  if (al_iterations < 0) {
    throw ConfigError("config: active.iterations must be >= 0");
  }
  transfer.validate();
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

RunConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse(root);
}

}  // namespace hsi
