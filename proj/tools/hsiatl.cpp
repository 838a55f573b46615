// hsiatl: spectral-spatial classification pipeline for hyperspectral cubes.
// Subcommands: pretrain, transfer, classify, eval, synth.

#include "hsi/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

hsi::RunConfig load_with_overrides(const CommonArgs& args) {
  hsi::RunConfig cfg = hsi::load_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.out_dir) cfg.output_dir = *args.out_dir;
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Run configuration (JSON)")
      ->required();
  cmd->add_option("--seed", args.seed, "Override the config seed");
  cmd->add_option("--out", args.out_dir, "Override the output directory");
}

int cmd_pretrain(const CommonArgs& args) {
  const hsi::RunConfig cfg = load_with_overrides(args);
  const hsi::PretrainOutput out = hsi::run_pretrain(cfg);

  fs::create_directories(cfg.output_dir);
  hsi::save_model(cfg.output_dir / "model.bin", out.model);
  hsi::save_samples(cfg.output_dir / "training_set.bin", out.training);
  hsi::write_al_csv(cfg.output_dir / "al_curve.csv", out.curve);

  const hsi::Metrics& final = out.curve.back().metrics;
  std::cout << "pretrain: " << out.curve.size() - 1 << " AL iterations, "
            << out.training.size() << " labeled samples, test OA "
            << final.oa << ", AA " << final.aa << ", kappa " << final.kappa
            << "\n";
  return 0;
}

int cmd_transfer(const CommonArgs& args, const std::string& model_path,
                 const std::string& samples_path) {
  const hsi::RunConfig cfg = load_with_overrides(args);
  const hsi::ModelFile model = hsi::load_model(model_path);
  const hsi::SampleSet training = hsi::load_samples(samples_path);
  const hsi::TransferOutput out = hsi::run_transfer(cfg, model, training);

  fs::create_directories(cfg.output_dir);
  hsi::save_model(cfg.output_dir / "transferred_model.bin", out.model);
  hsi::write_transfer_csv(cfg.output_dir / "transfer_report.csv", out.report);

  std::cout << "transfer: " << out.report.records.size() << " iterations";
  if (out.report.stopped_by_epsilon) std::cout << " (loss stop)";
  if (out.report.candidate_exhausted) {
    std::cout << " (warning: target pool exhausted)";
  }
  if (!out.report.records.empty()) {
    std::cout << ", target OA " << out.report.records.back().metrics.oa;
  }
  std::cout << "\n";
  return 0;
}

int cmd_classify(const std::string& model_path, const std::string& cube_path,
                 const std::string& out_path) {
  const hsi::ModelFile model = hsi::load_model(model_path);
  const hsi::HyperCube cube = hsi::load_cube(cube_path);
  const hsi::LabelMap map = hsi::run_classify(model, cube);
  hsi::save_labels(out_path, map);
  std::cout << "classify: wrote " << map.height << "x" << map.width
            << " label map to " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& cube_path,
             const std::string& pred_path, const std::string& truth_path,
             const std::string& out_path) {
  hsi::LabelMap predicted;
  if (!pred_path.empty()) {
    predicted = hsi::load_labels(pred_path);
  } else {
    const hsi::ModelFile model = hsi::load_model(model_path);
    const hsi::HyperCube cube = hsi::load_cube(cube_path);
    predicted = hsi::run_classify(model, cube);
  }
  const hsi::LabelMap truth = hsi::load_labels(truth_path);
  const hsi::Metrics m = hsi::run_eval(predicted, truth);
  if (!out_path.empty()) hsi::write_metrics_csv(out_path, m);
  std::cout << "oa " << m.oa << "\naa " << m.aa << "\nkappa " << m.kappa
            << "\n";
  return 0;
}

int cmd_emap(const std::string& cube_path, const std::string& config_path,
             const std::string& out_path) {
  hsi::EmapConfig cfg;
  if (!config_path.empty()) cfg = hsi::load_config(config_path).emap;
  const hsi::HyperCube cube = hsi::load_cube(cube_path);
  const hsi::Mat features = hsi::build_emap(cube, cfg);
  hsi::save_feature_matrix(out_path, features);
  std::cout << "emap: wrote " << features.rows() << "x" << features.cols()
            << " feature matrix to " << out_path << "\n";
  return 0;
}

int cmd_synth(const CommonArgs& args) {
  const hsi::RunConfig cfg = load_with_overrides(args);
  if (!cfg.data.synthetic) {
    throw hsi::ConfigError("synth: config has no data.synthetic block");
  }
  fs::create_directories(cfg.output_dir);
  hsi::Rng rng = hsi::Rng(cfg.seed).child(1);
  const hsi::SynthBenchmark bench = hsi::synth_benchmark(*cfg.data.synthetic, rng);
  hsi::save_cube(cfg.output_dir / "source_cube.bin", bench.source_cube);
  hsi::save_labels(cfg.output_dir / "source_labels.bin", bench.source_labels);
  hsi::save_cube(cfg.output_dir / "target_cube.bin", bench.target_cube);
  hsi::save_labels(cfg.output_dir / "target_labels.bin", bench.target_labels);
  std::cout << "synth: wrote source/target cubes to " << cfg.output_dir.string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral-spatial hyperspectral classification pipeline"};
  app.require_subcommand(1);

  CommonArgs pretrain_args;
  CLI::App* pretrain = app.add_subcommand(
      "pretrain", "Train branches and run the AL loop on source data");
  add_common(pretrain, pretrain_args);

  CommonArgs transfer_args;
  std::string transfer_model, transfer_samples;
  CLI::App* transfer = app.add_subcommand(
      "transfer", "Adapt a pretrained model to the target domain");
  add_common(transfer, transfer_args);
  transfer->add_option("--model", transfer_model, "Pretrained model file")
      ->required();
  transfer->add_option("--samples", transfer_samples,
                       "Source training set file")
      ->required();

  std::string classify_model, classify_cube, classify_out;
  CLI::App* classify =
      app.add_subcommand("classify", "Label every pixel of a cube");
  classify->add_option("--model", classify_model, "Model file")->required();
  classify->add_option("--cube", classify_cube, "Cube file")->required();
  classify->add_option("--out", classify_out, "Output label map")->required();

  std::string eval_model, eval_cube, eval_pred, eval_truth, eval_out;
  CLI::App* eval =
      app.add_subcommand("eval", "Score predictions against groundtruth");
  eval->add_option("--model", eval_model, "Model file (with --cube)");
  eval->add_option("--cube", eval_cube, "Cube file (with --model)");
  eval->add_option("--pred", eval_pred, "Predicted label map");
  eval->add_option("--truth", eval_truth, "Groundtruth label map")->required();
  eval->add_option("--out", eval_out, "Metrics CSV path");

  std::string emap_cube, emap_config, emap_out;
  CLI::App* emap = app.add_subcommand(
      "emap", "Dump morphological attribute profile features for a cube");
  emap->add_option("--cube", emap_cube, "Cube file")->required();
  emap->add_option("--config", emap_config,
                   "Run configuration supplying the emap block");
  emap->add_option("--out", emap_out, "Output feature matrix")->required();

  CommonArgs synth_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "Write the configured synthetic benchmark to disk");
  add_common(synth, synth_args);

  try {
    app.parse(argc, argv);
    if (pretrain->parsed()) return cmd_pretrain(pretrain_args);
    if (transfer->parsed())
      return cmd_transfer(transfer_args, transfer_model, transfer_samples);
    if (classify->parsed())
      return cmd_classify(classify_model, classify_cube, classify_out);
    if (eval->parsed()) {
      if (eval_pred.empty() && (eval_model.empty() || eval_cube.empty())) {
        throw hsi::ConfigError(
            "eval: provide --pred or both --model and --cube");
      }
      return cmd_eval(eval_model, eval_cube, eval_pred, eval_truth, eval_out);
    }
    if (emap->parsed()) return cmd_emap(emap_cube, emap_config, emap_out);
    if (synth->parsed()) return cmd_synth(synth_args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  } catch (const hsi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const hsi::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const hsi::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
