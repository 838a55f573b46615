#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hsi/transfer.hpp"

#include <cmath>
#include <set>

using namespace hsi;

namespace {

Vec dist2(double p_true, int true_class) {
  Vec p(2);
  p(true_class) = p_true;
  p(1 - true_class) = 1.0 - p_true;
  return p;
}

SsaeNetwork uniform_model(Index dim, int classes) {
  SsaeNetwork net;
  net.declared_input_dim = dim;
  net.class_count = classes;
  net.softmax_w = Mat::Zero(classes, dim);
  net.softmax_b = Vec::Zero(classes);
  return net;
}

SampleSet labeled_samples(Index n, Index dim, Domain domain, int classes,
                          Rng& rng, int pixel_base = 0) {
  SampleSet set;
  set.features = rng.uniform_matrix(n, dim, 0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    set.labels.push_back(static_cast<int>(i) % classes);
    set.pixels.push_back(pixel_base + static_cast<int>(i));
    set.domains.push_back(domain);
  }
  return set;
}

}  // namespace

TEST_CASE("c_rem: unchanged distribution scores zero") {
  const Vec p = dist2(0.7, 0);
  CHECK(c_rem(p, p, 0) == 0.0);
}

TEST_CASE("c_rem: direct subtraction at the true class") {
  CHECK(c_rem(dist2(0.9, 0), dist2(0.2, 0), 0) ==
        doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("c_rem: negative when the sample grew more compatible") {
  CHECK(c_rem(dist2(0.5, 1), dist2(1.0, 1), 1) ==
        doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("c_rem: class out of range") {
  CHECK_THROWS_AS(c_rem(dist2(0.5, 0), dist2(0.5, 0), 2), DataError);
  CHECK_THROWS_AS(c_rem(dist2(0.5, 0), dist2(0.5, 0), -1), DataError);
}

TEST_CASE("remove_source_batch: zero removals is a no-op") {
  Rng rng(1);
  TransferState<SsaeNetwork> state;
  state.model = uniform_model(3, 2);
  state.training = labeled_samples(5, 3, Domain::source, 2, rng);
  const Mat p0 = predict_probs(state.model, state.training.features);
  for (Index i = 0; i < 5; ++i) {
    state.source_initial_probs[state.training.pixels[static_cast<std::size_t>(i)]] =
        p0.row(i).transpose();
  }
  const auto removed = remove_source_batch(state, 0);
  CHECK(removed.empty());
  CHECK(state.training.size() == 5);
}

TEST_CASE("remove_source_batch: equal drift removes the lowest pixel ids") {
  Rng rng(2);
  TransferState<SsaeNetwork> state;
  state.model = uniform_model(3, 2);
  state.training = labeled_samples(6, 3, Domain::source, 2, rng, 100);
  // Uniform model predicts 0.5 everywhere; identical cached p0 gives every
  // sample the same c_rem.
  for (Index i = 0; i < 6; ++i) {
    state.source_initial_probs[state.training.pixels[static_cast<std::size_t>(i)]] =
        dist2(0.8, state.training.labels[static_cast<std::size_t>(i)]);
  }
  const auto removed = remove_source_batch(state, 3);
  CHECK(removed == std::vector<int>{100, 101, 102});
  CHECK(state.training.size() == 3);
}

TEST_CASE("remove_source_batch: picks the largest drift, full-sort oracle") {
  Rng rng(3);
  TransferState<SsaeNetwork> state;
  state.model = uniform_model(3, 2);  // p_i(true) = 0.5 for every sample
  state.training = labeled_samples(5, 3, Domain::source, 2, rng, 10);
  // Scaled drift pattern {0.05, 0.45, 0.15, 0.45, 0.0}: the two 0.45
  // samples (pixels 11 and 13) must go first.
  const double drift[5] = {0.05, 0.45, 0.15, 0.45, 0.0};
  for (Index i = 0; i < 5; ++i) {
    state.source_initial_probs[state.training.pixels[static_cast<std::size_t>(i)]] =
        dist2(0.5 + drift[i], state.training.labels[static_cast<std::size_t>(i)]);
  }
  const auto removed = remove_source_batch(state, 2);
  CHECK(removed == std::vector<int>{11, 13});
}

TEST_CASE("remove_source_batch: target samples are never removed") {
  Rng rng(4);
  TransferState<SsaeNetwork> state;
  state.model = uniform_model(3, 2);
  state.training = labeled_samples(4, 3, Domain::source, 2, rng, 0);
  state.training.append(labeled_samples(4, 3, Domain::target, 2, rng, 1000));
  for (Index i = 0; i < 4; ++i) {
    state.source_initial_probs[static_cast<int>(i)] =
        dist2(0.9, state.training.labels[static_cast<std::size_t>(i)]);
  }
  const auto removed = remove_source_batch(state, 100);
  CHECK(removed.size() == 4);  // only the four source samples
  CHECK(state.training.size() == 4);
  for (Domain d : state.training.domains) CHECK(d == Domain::target);
}

TEST_CASE("remove_source_batch: cached p0 is never mutated") {
  Rng rng(5);
  TransferState<SsaeNetwork> state;
  state.model = uniform_model(3, 2);
  state.training = labeled_samples(8, 3, Domain::source, 2, rng);
  for (Index i = 0; i < 8; ++i) {
    state.source_initial_probs[state.training.pixels[static_cast<std::size_t>(i)]] =
        dist2(0.6 + 0.04 * static_cast<double>(i),
              state.training.labels[static_cast<std::size_t>(i)]);
  }
  const auto snapshot = state.source_initial_probs;
  remove_source_batch(state, 2);
  state.model.softmax_w.setRandom();  // model moves between iterations
  remove_source_batch(state, 2);
  for (const auto& [pixel, p0] : snapshot) {
    REQUIRE(state.source_initial_probs.count(pixel) == 1);
    CHECK((state.source_initial_probs.at(pixel) - p0).cwiseAbs().maxCoeff() ==
          0.0);
  }
}

namespace {

struct TransferFixture {
  SampleSet source_training;
  SampleSet candidate;
  SampleSet heldout;
  LabelMap labels;
  SsaeNetwork model;

  explicit TransferFixture(Rng& rng, Index candidates = 40,
                           Index source_count = 20) {
    const Index dim = 4;
    const int classes = 2;
    model = uniform_model(dim, classes);
    model.softmax_w = rng.uniform_matrix(classes, dim, -0.5, 0.5);

    const int total = static_cast<int>(candidates) + 60;
    labels.height = 1;
    labels.width = total;
    labels.labels.resize(static_cast<std::size_t>(total));
    for (int p = 0; p < total; ++p) {
      labels.labels[static_cast<std::size_t>(p)] =
          static_cast<std::uint16_t>(1 + p % classes);
    }

    const Mat all = rng.uniform_matrix(total, dim, 0.0, 1.0);
    for (int p = 0; p < total; ++p) {
      const Vec row = all.row(p).transpose();
      const int label = p % classes;
      if (p < static_cast<int>(source_count)) {
        source_training.append_row(row, label, p, Domain::source);
      } else if (p < static_cast<int>(source_count + candidates)) {
        candidate.append_row(row, -1, p, Domain::target);
      } else {
        heldout.append_row(row, label, p, Domain::target);
      }
    }
  }
};

}  // namespace

TEST_CASE("active_transfer: infinite epsilon stops after one iteration") {
  Rng rng(6);
  TransferFixture fix(rng);
  TransferConfig cfg;
  cfg.t_plus = 5;
  cfg.s_minus = 2;
  cfg.epsilon = std::numeric_limits<double>::infinity();
  cfg.max_iters = 10;

  FinetuneOptions refine;
  refine.epochs = 3;
  Rng loop_rng(7);
  SsaeNetwork model = fix.model;
  const TransferReport report = active_transfer(
      model, fix.source_training, fix.candidate, fix.heldout, cfg,
      QueryStrategy{}, groundtruth_oracle(fix.labels), refine, loop_rng);

  CHECK(report.records.size() == 1);
  CHECK(report.stopped_by_epsilon);
  CHECK(report.records[0].iteration == 1);
}

TEST_CASE("active_transfer: bookkeeping of source and target counts") {
  Rng rng(8);
  TransferFixture fix(rng, 60, 30);
  TransferConfig cfg;
  cfg.t_plus = 8;
  cfg.s_minus = 5;
  cfg.epsilon = 1e-30;  // never triggers
  cfg.max_iters = 4;

  FinetuneOptions refine;
  refine.epochs = 3;
  Rng loop_rng(9);
  SsaeNetwork model = fix.model;
  const TransferReport report = active_transfer(
      model, fix.source_training, fix.candidate, fix.heldout, cfg,
      QueryStrategy{}, groundtruth_oracle(fix.labels), refine, loop_rng);

  REQUIRE(report.records.size() == 4);
  for (int i = 1; i <= 4; ++i) {
    const TransferRecord& r = report.records[static_cast<std::size_t>(i - 1)];
    CHECK(r.iteration == i);
    CHECK(r.source_count == 30 - 5 * i);
    CHECK(r.target_count == 8 * i);
  }
}

TEST_CASE("active_transfer: source fraction shrinks, target grows") {
  Rng rng(10);
  TransferFixture fix(rng, 50, 25);
  TransferConfig cfg;
  cfg.t_plus = 6;
  cfg.s_minus = 3;
  cfg.epsilon = 1e-30;
  cfg.max_iters = 6;

  FinetuneOptions refine;
  refine.epochs = 2;
  Rng loop_rng(11);
  SsaeNetwork model = fix.model;
  const TransferReport report = active_transfer(
      model, fix.source_training, fix.candidate, fix.heldout, cfg,
      QueryStrategy{}, groundtruth_oracle(fix.labels), refine, loop_rng);

  double prev_source_fraction = 1.0;
  Index prev_target = 0;
  for (const TransferRecord& r : report.records) {
    const double fraction =
        static_cast<double>(r.source_count) /
        static_cast<double>(r.source_count + r.target_count);
    CHECK(fraction <= prev_source_fraction);
    CHECK(r.target_count >= prev_target);
    prev_source_fraction = fraction;
    prev_target = r.target_count;
  }
}

TEST_CASE("active_transfer: epsilon between two losses stops in between") {
  Rng rng(12);
  TransferFixture fix(rng);
  TransferConfig cfg;
  cfg.t_plus = 4;
  cfg.s_minus = 1;
  cfg.epsilon = 1e-30;
  cfg.max_iters = 5;

  FinetuneOptions refine;
  refine.epochs = 10;
  refine.lr = 0.5;

  // First pass: observe the loss trajectory.
  Rng probe_rng(13);
  SsaeNetwork probe_model = fix.model;
  const TransferReport probe = active_transfer(
      probe_model, fix.source_training, fix.candidate, fix.heldout, cfg,
      QueryStrategy{}, groundtruth_oracle(fix.labels), refine, probe_rng);
  REQUIRE(probe.records.size() == 5);

  // Pick an epsilon strictly between the second and third recorded losses
  // (losses decrease here); the rerun must stop right after iteration 3
  // crosses it.
  int stop_at = -1;
  double epsilon = 0.0;
  for (std::size_t k = 0; k + 1 < probe.records.size(); ++k) {
    if (probe.records[k + 1].loss < probe.records[k].loss) {
      epsilon = 0.5 * (probe.records[k + 1].loss + probe.records[k].loss);
      stop_at = static_cast<int>(k) + 2;  // first iteration with loss < eps
    }
  }
  REQUIRE(stop_at > 0);

  TransferConfig stopping = cfg;
  stopping.epsilon = epsilon;
  Rng rerun_rng(13);
  SsaeNetwork model = fix.model;
  const TransferReport rerun = active_transfer(
      model, fix.source_training, fix.candidate, fix.heldout, stopping,
      QueryStrategy{}, groundtruth_oracle(fix.labels), refine, rerun_rng);
  CHECK(rerun.stopped_by_epsilon);
  CHECK(static_cast<int>(rerun.records.size()) == stop_at);
  CHECK(rerun.records.back().loss < epsilon);
  for (std::size_t k = 0; k + 1 < rerun.records.size(); ++k) {
    CHECK(rerun.records[k].loss >= epsilon);
  }
}

TEST_CASE("active_transfer: exhausted candidate pool sets the warning flag") {
  Rng rng(14);
  TransferFixture fix(rng, 10);
  TransferConfig cfg;
  cfg.t_plus = 4;
  cfg.s_minus = 0;
  cfg.epsilon = 1e-30;
  cfg.max_iters = 10;

  FinetuneOptions refine;
  refine.epochs = 2;
  Rng loop_rng(15);
  SsaeNetwork model = fix.model;
  const TransferReport report = active_transfer(
      model, fix.source_training, fix.candidate, fix.heldout, cfg,
      QueryStrategy{}, groundtruth_oracle(fix.labels), refine, loop_rng);
  CHECK(report.candidate_exhausted);
  CHECK(report.records.size() == 3);  // 4 + 4 + 2 samples
  CHECK(report.records.back().target_count == 10);
}

TEST_CASE("active_transfer: with s_minus=0 and matched domains it replays "
          "the AL loop") {
  // Identical source/target distributions, no source removal, deterministic
  // mclu selection and full-batch fine-tuning: the transfer loop and the
  // plain AL loop must land on the same model.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(3000 + seed);
    SynthConfig scfg;
    scfg.classes = 3;
    scfg.bands = 10;
    scfg.size = 24;
    scfg.noise = 0.15;
    scfg.shift = 0.0;
    scfg.blobs = 9;
    const SynthBenchmark bench = synth_benchmark(scfg, rng);

    SplitSpec split_spec;
    split_spec.train_per_class = 8;
    Rng split_rng(17);
    Split source_split = split_samples(bench.source_cube.scaled(),
                                       bench.source_labels, split_spec,
                                       split_rng, Domain::source);

    SplitSpec target_spec;
    target_spec.train_per_class = 0;
    target_spec.candidate_ratio = 0.2;
    Rng target_rng(18);
    Split target_split = split_samples(bench.target_cube.scaled(),
                                       bench.target_labels, target_spec,
                                       target_rng, Domain::target);

    SaeHyper hyper;
    hyper.epochs = 60;
    Rng pre_rng(19);
    SsaeNetwork base =
        greedy_pretrain(source_split.train.features, {8, 5}, hyper, pre_rng);
    attach_head(base, 3);
    FinetuneOptions initial;
    initial.epochs = 80;
    finetune(base, source_split.train.features, source_split.train.labels,
             initial, pre_rng);

    QueryStrategy strategy;
    strategy.kind = QueryKind::mclu;
    strategy.batch_size = 6;
    FinetuneOptions refine;
    refine.epochs = 20;
    const LabelOracle oracle = groundtruth_oracle(bench.target_labels);

    // Plain AL continuation on the target pool. The rng seed matches the
    // transfer run below so both consume identical shuffle streams.
    AlState<SsaeNetwork> al;
    al.model = base;
    al.training = source_split.train;
    al.candidate = target_split.candidate;
    Rng al_rng(21);
    al_pretrain_loop(al, strategy, oracle, 4, target_split.test, refine,
                     al_rng);

    // Transfer with no source removal.
    TransferConfig cfg;
    cfg.t_plus = 6;
    cfg.s_minus = 0;
    cfg.epsilon = 1e-30;
    cfg.max_iters = 4;
    SsaeNetwork transferred = base;
    Rng tr_rng(21);
    const TransferReport report = active_transfer(
        transferred, source_split.train, target_split.candidate,
        target_split.test, cfg, strategy, oracle, refine, tr_rng);

    const double al_oa = al.history.back().metrics.oa;
    const double tr_oa = report.records.back().metrics.oa;
    CHECK(std::abs(al_oa - tr_oa) <= 0.005);
  }
}
