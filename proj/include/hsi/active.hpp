#pragma once

#include "hsi/data.hpp"
#include "hsi/network.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hsi {

enum class QueryKind { random, margin, mclu };

struct QueryStrategy {
  QueryKind kind = QueryKind::mclu;
  int batch_size = 50;  // query step
};

QueryKind parse_query_kind(const std::string& name);

/// Candidate-set positions picked by a criterion, with their scores.
/// For mclu/margin the scores come back ascending (most uncertain first).
struct QueryBatch {
  std::vector<int> indices;
  std::vector<double> scores;
};

/// Gap between the two largest class probabilities; 0 is maximally
/// uncertain, 1 fully confident. Needs at least two classes.
double c_diff(const Vec& probs);

/// Top-two gap without the distribution requirement (raw logits).
double c_diff_raw(const Vec& values);

/// Smallest-score selection with deterministic ties (ascending pixel id).
QueryBatch select_lowest(const std::vector<double>& scores,
                         const std::vector<int>& pixels, int batch_size);

template <class Model>
QueryBatch select_batch(const QueryStrategy& strategy, const Model& model,
                        const SampleSet& candidate, Rng& rng) {
  if (candidate.empty()) throw DataError("select_batch: empty candidate set");
  const int n = static_cast<int>(candidate.size());
  const int count = std::min(strategy.batch_size, n);

  if (strategy.kind == QueryKind::random) {
    QueryBatch batch;
    batch.indices = rng.sample(n, count);
    batch.scores.assign(batch.indices.size(), 0.0);
    return batch;
  }

  std::vector<double> scores(static_cast<std::size_t>(n));
  if (strategy.kind == QueryKind::mclu) {
    const Mat probs = predict_probs(model, candidate.features);
    for (int i = 0; i < n; ++i) scores[static_cast<std::size_t>(i)] =
        c_diff(Vec(probs.row(i).transpose()));
  } else {
    // Margin sampling scores the gap between the top two raw logits.
    const Mat logits = predict_logits(model, candidate.features);
    for (int i = 0; i < n; ++i) scores[static_cast<std::size_t>(i)] =
        c_diff_raw(Vec(logits.row(i).transpose()));
  }
  return select_lowest(scores, candidate.pixels, count);
}

/// Maps a queried pixel to its true class (0-based); the groundtruth-backed
/// version throws DataError naming the pixel when the map has no label.
using LabelOracle = std::function<int(int pixel)>;
LabelOracle groundtruth_oracle(const LabelMap& map);

struct AlRecord {
  int iteration = 0;
  Index labeled_count = 0;
  Metrics metrics;
};

template <class Model>
struct AlState {
  SampleSet training;
  SampleSet candidate;
  Model model;
  int iteration = 0;
  std::vector<AlRecord> history;
};

template <class Model>
Metrics evaluate(const Model& model, const SampleSet& samples) {
  const Mat probs = predict_probs(model, samples.features);
  std::vector<int> predicted(static_cast<std::size_t>(probs.rows()));
  for (Index i = 0; i < probs.rows(); ++i) {
    Index arg = 0;
    probs.row(i).maxCoeff(&arg);
    predicted[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return compute_metrics(predicted, samples.labels,
                         static_cast<int>(probs.cols()));
}

/// Batch-mode AL: per iteration classify the candidate pool, query a batch,
/// label it through the oracle, move it into the training set, and
/// fine-tune the whole model on the grown set. Held-out metrics land in the
/// history, starting with the pre-loop state (iteration 0).
template <class Model>
void al_pretrain_loop(AlState<Model>& state, const QueryStrategy& strategy,
                      const LabelOracle& oracle, int max_iters,
                      const SampleSet& heldout, const FinetuneOptions& refine,
                      Rng& rng) {
  state.history.push_back(
      {state.iteration, state.training.size(), evaluate(state.model, heldout)});

  for (int it = 0; it < max_iters && !state.candidate.empty(); ++it) {
    const QueryBatch batch =
        select_batch(strategy, state.model, state.candidate, rng);

    SampleSet queried = state.candidate.take(batch.indices);
    for (Index i = 0; i < queried.size(); ++i) {
      queried.labels[static_cast<std::size_t>(i)] =
          oracle(queried.pixels[static_cast<std::size_t>(i)]);
    }
    state.candidate.remove(batch.indices);
    state.training.append(queried);

    finetune(state.model, state.training.features, state.training.labels,
             refine, rng);
    ++state.iteration;
    state.history.push_back({state.iteration, state.training.size(),
                             evaluate(state.model, heldout)});
  }
}

}  // namespace hsi
