#include "hsi/pipeline.hpp"

#include <cstdio>
#include <fstream>

namespace hsi {

namespace {

// Sub-seed streams fanned out from the root seed (see Rng::child).
enum Stream : std::uint64_t {
  kSynthStream = 1,
  kSplitStream = 2,
  kSpectralStream = 3,
  kSpatialStream = 4,
  kFusionStream = 5,
  kFinetuneStream = 6,
  kActiveStream = 7,
  kTargetSplitStream = 8,
  kTransferStream = 9,
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Features must come from the same band count the model was trained on;
// wider cubes are truncated before either branch sees them.
Mat model_features(const HyperCube& cube, FeatureSource source,
                   const EmapConfig& emap, int source_bands) {
  HyperCube aligned = cube;
  if (source_bands > 0) {
    if (cube.bands < source_bands) {
      throw DataError("prepare_scene: cube has " + std::to_string(cube.bands) +
                      " bands, model expects " + std::to_string(source_bands));
    }
    if (cube.bands > source_bands) aligned = truncate_bands(cube, source_bands);
  }
  switch (source) {
    case FeatureSource::spectral:
      return aligned.scaled();
    case FeatureSource::spatial:
      return build_emap(aligned, emap);
    case FeatureSource::joint: {
      const Mat spectral = aligned.scaled();
      const Mat spatial = build_emap(aligned, emap);
      Mat joint(spectral.rows(), spectral.cols() + spatial.cols());
      joint << spectral, spatial;
      return joint;
    }
  }
  throw ConfigError("prepare_scene: bad feature source");
}

struct SourceData {
  HyperCube cube;
  LabelMap labels;
};

// Cross-sensor band alignment: an optional limit truncates every loaded
// cube to its leading bands, so source and target can share a model.
void apply_bands_limit(const RunConfig& cfg, HyperCube& cube) {
  if (cfg.data.bands_limit > 0 && cube.bands > cfg.data.bands_limit) {
    cube = truncate_bands(cube, cfg.data.bands_limit);
  }
}

SourceData load_source(const RunConfig& cfg, Rng& rng) {
  if (cfg.data.source) {
    SourceData data;
    data.cube = load_cube(cfg.data.source->cube);
    data.labels = load_labels(cfg.data.source->labels);
    apply_bands_limit(cfg, data.cube);
    return data;
  }
  if (cfg.data.synthetic) {
    SynthBenchmark bench = synth_benchmark(*cfg.data.synthetic, rng);
    return {std::move(bench.source_cube), std::move(bench.source_labels)};
  }
  throw ConfigError("pretrain: config names no source data");
}

SourceData load_target(const RunConfig& cfg, Rng& rng) {
  if (cfg.data.target) {
    SourceData data;
    data.cube = load_cube(cfg.data.target->cube);
    data.labels = load_labels(cfg.data.target->labels);
    apply_bands_limit(cfg, data.cube);
    return data;
  }
  if (cfg.data.synthetic) {
    SynthBenchmark bench = synth_benchmark(*cfg.data.synthetic, rng);
    return {std::move(bench.target_cube), std::move(bench.target_labels)};
  }
  throw ConfigError("transfer: config names no target data");
}

SsaeNetwork pretrain_single(const Mat& train_features,
                            const std::vector<Index>& hidden,
                            const SaeHyper& hyper, int class_count,
                            const FinetuneConfig& ft, Rng pretrain_rng,
                            Rng finetune_rng,
                            const std::vector<int>& labels) {
  SsaeNetwork net = greedy_pretrain(train_features, hidden, hyper, pretrain_rng);
  attach_head(net, class_count);
  finetune(net, train_features, labels, ft.softmax_options(), finetune_rng);
  finetune(net, train_features, labels, ft.initial_options(), finetune_rng);
  return net;
}

JointModel pretrain_joint(const Mat& train_features, Index spectral_dim,
                          const RunConfig& cfg, int class_count,
                          const std::vector<int>& labels, const Rng& root) {
  const Mat spectral_in = train_features.leftCols(spectral_dim);
  const Mat spatial_in =
      train_features.rightCols(train_features.cols() - spectral_dim);

  JointModel jm;
  Rng spectral_rng = root.child(kSpectralStream);
  Rng spatial_rng = root.child(kSpatialStream);
  Rng fusion_rng = root.child(kFusionStream);

  jm.spectral = greedy_pretrain(spectral_in, cfg.branches.spectral_hidden,
                                cfg.branches.spectral_sae, spectral_rng);
  jm.spatial = greedy_pretrain(spatial_in, cfg.branches.spatial_hidden,
                               cfg.branches.spatial_sae, spatial_rng);

  // The fusion stack starts from the stacked branch features of the
  // training samples.
  const Mat hs = forward_features(jm.spectral, spectral_in);
  const Mat hp = forward_features(jm.spatial, spatial_in);
  Mat fused(hs.rows(), hs.cols() + hp.cols());
  fused << hs, hp;
  jm.fusion = greedy_pretrain(fused, cfg.branches.fusion_hidden,
                              cfg.branches.fusion_sae, fusion_rng);
  attach_head(jm.fusion, class_count);

  Rng finetune_rng = root.child(kFinetuneStream);
  finetune(jm, train_features, labels, cfg.finetune.softmax_options(),
           finetune_rng);
  finetune(jm, train_features, labels, cfg.finetune.initial_options(),
           finetune_rng);
  return jm;
}

}  // namespace

PreparedScene prepare_scene(const HyperCube& cube, const LabelMap& labels,
                            FeatureSource source, const EmapConfig& emap,
                            int source_bands) {
  if (labels.height != cube.height || labels.width != cube.width) {
    throw DataError("prepare_scene: label map " +
                    shape_str(labels.height, labels.width) +
                    " does not match cube " +
                    shape_str(cube.height, cube.width));
  }
  PreparedScene scene;
  scene.features = model_features(cube, source, emap, source_bands);
  scene.cube = cube;
  scene.labels = labels;
  return scene;
}

PretrainOutput run_pretrain(const RunConfig& cfg) {
  const Rng root(cfg.seed);
  Rng synth_rng = root.child(kSynthStream);
  const SourceData data = load_source(cfg, synth_rng);
  const PreparedScene scene =
      prepare_scene(data.cube, data.labels, cfg.model_kind, cfg.emap);

  Rng split_rng = root.child(kSplitStream);
  Split split = split_samples(scene.features, scene.labels, cfg.split,
                              split_rng, Domain::source);
  const int class_count = scene.labels.class_count();

  PretrainOutput out;
  out.model.source = cfg.model_kind;
  out.model.emap = cfg.emap;
  out.model.source_bands = data.cube.bands;

  Rng al_rng = root.child(kActiveStream);
  if (cfg.model_kind == FeatureSource::joint) {
    AlState<JointModel> state;
    state.model = pretrain_joint(split.train.features, data.cube.bands, cfg,
                                 class_count, split.train.labels, root);
    state.training = std::move(split.train);
    state.candidate = std::move(split.candidate);
    al_pretrain_loop(state, cfg.strategy, groundtruth_oracle(scene.labels),
                     cfg.al_iterations, split.test,
                     cfg.finetune.refine_options(), al_rng);
    out.model.model = std::move(state.model);
    out.training = std::move(state.training);
    out.curve = std::move(state.history);
  } else {
    const SaeHyper& hyper = cfg.model_kind == FeatureSource::spectral
                                ? cfg.branches.spectral_sae
                                : cfg.branches.spatial_sae;
    const std::vector<Index>& hidden = cfg.model_kind == FeatureSource::spectral
                                           ? cfg.branches.spectral_hidden
                                           : cfg.branches.spatial_hidden;
    AlState<SsaeNetwork> state;
    state.model = pretrain_single(
        split.train.features, hidden, hyper, class_count, cfg.finetune,
        root.child(cfg.model_kind == FeatureSource::spectral ? kSpectralStream
                                                             : kSpatialStream),
        root.child(kFinetuneStream), split.train.labels);
    state.training = std::move(split.train);
    state.candidate = std::move(split.candidate);
    al_pretrain_loop(state, cfg.strategy, groundtruth_oracle(scene.labels),
                     cfg.al_iterations, split.test,
                     cfg.finetune.refine_options(), al_rng);
    out.model.model = std::move(state.model);
    out.training = std::move(state.training);
    out.curve = std::move(state.history);
  }
  return out;
}

TransferOutput run_transfer(const RunConfig& cfg, const ModelFile& model,
                            const SampleSet& source_training) {
  const Rng root(cfg.seed);
  Rng synth_rng = root.child(kSynthStream);
  const SourceData data = load_target(cfg, synth_rng);

  const PreparedScene scene = prepare_scene(
      data.cube, data.labels, model.source, model.emap, model.source_bands);

  // Target pool: no labeled target training data up front; a slice of the
  // scene becomes the query pool and the rest is held out for testing.
  SplitSpec target_split;
  target_split.train_per_class = 0;
  target_split.candidate_ratio = cfg.split.candidate_ratio;
  Rng split_rng = root.child(kTargetSplitStream);
  Split split = split_samples(scene.features, scene.labels, target_split,
                              split_rng, Domain::target);

  const int target_classes = scene.labels.class_count();
  if (model.class_count() != target_classes && !cfg.transfer_reinit_head) {
    throw DataError("transfer: model has " + std::to_string(model.class_count()) +
                    " classes but target has " + std::to_string(target_classes) +
                    "; enable transfer.reinit_head to adapt");
  }

  SampleSet training = source_training;
  TransferOutput out;
  out.model = model;

  Rng transfer_rng = root.child(kTransferStream);
  std::visit(
      [&](auto& net) {
        if (cfg.transfer_reinit_head) {
          // Fresh head for the target taxonomy; only encoders transfer.
          // Source samples with labels outside the new taxonomy are dropped.
          std::vector<int> keep;
          for (Index i = 0; i < training.size(); ++i) {
            if (training.labels[static_cast<std::size_t>(i)] < target_classes) {
              keep.push_back(static_cast<int>(i));
            }
          }
          training = training.take(keep);
          if constexpr (std::is_same_v<std::decay_t<decltype(net)>, JointModel>) {
            attach_head(net.fusion, target_classes);
          } else {
            attach_head(net, target_classes);
          }
          if (!training.empty()) {
            Rng head_rng = root.child(kFinetuneStream);
            finetune(net, training.features, training.labels,
                     cfg.finetune.softmax_options(), head_rng);
          }
        }
        out.report = active_transfer(
            net, training, std::move(split.candidate), split.test, cfg.transfer,
            cfg.strategy, groundtruth_oracle(scene.labels),
            cfg.finetune.refine_options(), transfer_rng);
      },
      out.model.model);
  return out;
}

LabelMap run_classify(const ModelFile& model, const HyperCube& cube) {
  const Mat features =
      model_features(cube, model.source, model.emap, model.source_bands);

  const Mat probs = std::visit(
      [&](const auto& net) { return predict_probs(net, features); },
      model.model);

  LabelMap map;
  map.height = cube.height;
  map.width = cube.width;
  map.labels.resize(static_cast<std::size_t>(cube.pixel_count()));
  for (Index i = 0; i < probs.rows(); ++i) {
    Index arg = 0;
    probs.row(i).maxCoeff(&arg);
    map.labels[static_cast<std::size_t>(i)] =
        static_cast<std::uint16_t>(arg + 1);
  }
  return map;
}

Metrics run_eval(const LabelMap& predicted, const LabelMap& truth) {
  if (predicted.height != truth.height || predicted.width != truth.width) {
    throw DataError("eval: prediction " +
                    shape_str(predicted.height, predicted.width) +
                    " does not match truth " +
                    shape_str(truth.height, truth.width));
  }
  const int classes = truth.class_count();
  std::vector<int> pred, gold;
  for (std::size_t p = 0; p < truth.labels.size(); ++p) {
    if (truth.labels[p] == 0) continue;
    gold.push_back(truth.labels[p] - 1);
    // An unlabeled prediction at a labeled pixel counts as a miss, binned
    // in a virtual class beyond the real ones.
    const int value = predicted.labels[p] == 0 ? classes
                                               : predicted.labels[p] - 1;
    pred.push_back(std::min(value, classes));
  }
  if (gold.empty()) throw DataError("eval: truth map has no labeled pixels");
  return compute_metrics(pred, gold, classes + 1);
}

void write_al_csv(const std::filesystem::path& path,
                  const std::vector<AlRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("write_al_csv: cannot open " + path.string());
  out << "iteration,labeled_count,oa,aa,kappa\n";
  for (const AlRecord& r : records) {
    out << r.iteration << ',' << r.labeled_count << ',' << fmt(r.metrics.oa)
        << ',' << fmt(r.metrics.aa) << ',' << fmt(r.metrics.kappa) << '\n';
  }
}

void write_transfer_csv(const std::filesystem::path& path,
                        const TransferReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("write_transfer_csv: cannot open " + path.string());
  out << "iteration,loss,source_count,target_count,oa,aa,kappa\n";
  for (const TransferRecord& r : report.records) {
    out << r.iteration << ',' << fmt(r.loss) << ',' << r.source_count << ','
        << r.target_count << ',' << fmt(r.metrics.oa) << ',' << fmt(r.metrics.aa)
        << ',' << fmt(r.metrics.kappa) << '\n';
  }
}

void write_metrics_csv(const std::filesystem::path& path, const Metrics& m) {
  std::ofstream out(path);
  if (!out) throw DataError("write_metrics_csv: cannot open " + path.string());
  out << "oa,aa,kappa\n"
      << fmt(m.oa) << ',' << fmt(m.aa) << ',' << fmt(m.kappa) << '\n';
}

}  // namespace hsi
