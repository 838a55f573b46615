#pragma once

#include "hsi/active.hpp"

#include <map>
#include <vector>

namespace hsi {

struct TransferConfig {
  int t_plus = 80;       // target samples queried per iteration
  int s_minus = 50;      // source samples retired per iteration
  double epsilon = 5e-6; // stop once the fine-tuning loss drops below this
  int max_iters = 10;

  void validate() const {
    if (t_plus < 1) throw ConfigError("transfer: t_plus must be >= 1");
    if (s_minus < 0) throw ConfigError("transfer: s_minus must be >= 0");
    if (!(epsilon > 0.0)) throw ConfigError("transfer: epsilon must be > 0");
    if (max_iters < 0) throw ConfigError("transfer: max_iters must be >= 0");
  }
};

/// Drift of a labeled sample's class-conditional probability: the initial
/// model's value minus the current one, at the sample's own class. Large
/// positive values mean the class distribution has moved away from the
/// sample. Bounded by [-1, 1] for probability inputs.
double c_rem(const Vec& p0, const Vec& pi, int true_class);

template <class Model>
struct TransferState {
  SampleSet training;  // mixed source/target, domain-tagged
  std::map<int, Vec> source_initial_probs;  // pixel id -> p0, frozen
  SampleSet candidate;  // target pool
  Model model;
  std::vector<double> loss_history;
};

/// Retires the s_minus source-domain training samples whose c_rem is
/// largest (ties by ascending pixel id). Target samples are never removed.
/// Returns the removed pixel ids; removes min(s_minus, available).
template <class Model>
std::vector<int> remove_source_batch(TransferState<Model>& state,
                                     int s_minus) {
  std::vector<int> source_rows;
  for (Index i = 0; i < state.training.size(); ++i) {
    if (state.training.domains[static_cast<std::size_t>(i)] == Domain::source) {
      source_rows.push_back(static_cast<int>(i));
    }
  }
  if (s_minus <= 0 || source_rows.empty()) return {};

  SampleSet sources = state.training.take(source_rows);
  const Mat probs = predict_probs(state.model, sources.features);

  std::vector<double> scores(source_rows.size());
  for (std::size_t i = 0; i < source_rows.size(); ++i) {
    const int pixel = sources.pixels[i];
    const auto it = state.source_initial_probs.find(pixel);
    if (it == state.source_initial_probs.end()) {
      throw DataError("remove_source_batch: no cached p0 for pixel " +
                      std::to_string(pixel));
    }
    // Negated so the shared lowest-score selection picks the largest drift.
    scores[i] = -c_rem(it->second, Vec(probs.row(static_cast<Index>(i)).transpose()),
                       sources.labels[i]);
  }

  const QueryBatch batch = select_lowest(scores, sources.pixels,
                                         std::min<int>(s_minus,
                                                       static_cast<int>(source_rows.size())));
  std::vector<int> rows;
  std::vector<int> removed_pixels;
  for (int idx : batch.indices) {
    rows.push_back(source_rows[static_cast<std::size_t>(idx)]);
    removed_pixels.push_back(sources.pixels[static_cast<std::size_t>(idx)]);
  }
  state.training.remove(rows);
  return removed_pixels;
}

struct TransferRecord {
  int iteration = 0;
  double loss = 0.0;
  Index source_count = 0;
  Index target_count = 0;
  Metrics metrics;
};

struct TransferReport {
  std::vector<TransferRecord> records;
  bool stopped_by_epsilon = false;
  bool candidate_exhausted = false;
};

inline Index count_domain(const SampleSet& set, Domain domain) {
  Index n = 0;
  for (Domain d : set.domains)
    if (d == domain) ++n;
  return n;
}

/// Adapts a source-trained model to the target domain: each iteration
/// queries the t_plus most informative target samples, retires the s_minus
/// most drifted source samples, fine-tunes every parameter on the updated
/// set, and stops once the fine-tuning loss falls under epsilon (or after
/// max_iters; an exhausted target pool ends the loop with a report flag).
/// The model is adapted in place; per-iteration numbers come back in the
/// report.
template <class Model>
TransferReport active_transfer(Model& model, const SampleSet& source_training,
                               SampleSet target_candidate,
                               const SampleSet& target_heldout,
                               const TransferConfig& cfg,
                               const QueryStrategy& strategy,
                               const LabelOracle& oracle,
                               const FinetuneOptions& refine, Rng& rng) {
  cfg.validate();
  TransferState<Model> state;
  state.training = source_training;
  state.candidate = std::move(target_candidate);
  state.model = std::move(model);

  // p0 is cached at transfer time and never updated; the removal criterion
  // always measures drift against the initial model.
  {
    const Mat p0 = predict_probs(state.model, state.training.features);
    for (Index i = 0; i < state.training.size(); ++i) {
      if (state.training.domains[static_cast<std::size_t>(i)] == Domain::source) {
        state.source_initial_probs[state.training.pixels[static_cast<std::size_t>(i)]] =
            p0.row(i).transpose();
      }
    }
  }

  TransferReport report;
  QueryStrategy query = strategy;
  query.batch_size = cfg.t_plus;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    if (state.candidate.empty()) {
      report.candidate_exhausted = true;
      break;
    }
    const QueryBatch batch =
        select_batch(query, state.model, state.candidate, rng);
    SampleSet queried = state.candidate.take(batch.indices);
    for (Index i = 0; i < queried.size(); ++i) {
      queried.labels[static_cast<std::size_t>(i)] =
          oracle(queried.pixels[static_cast<std::size_t>(i)]);
    }
    state.candidate.remove(batch.indices);

    remove_source_batch(state, cfg.s_minus);
    state.training.append(queried);

    const std::vector<double> trace =
        finetune(state.model, state.training.features, state.training.labels,
                 refine, rng);
    const double loss = trace.empty() ? 0.0 : trace.back();
    state.loss_history.push_back(loss);

    report.records.push_back({it, loss,
                              count_domain(state.training, Domain::source),
                              count_domain(state.training, Domain::target),
                              evaluate(state.model, target_heldout)});
    if (loss < cfg.epsilon) {
      report.stopped_by_epsilon = true;
      break;
    }
  }

  model = std::move(state.model);
  return report;
}

}  // namespace hsi
