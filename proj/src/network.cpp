#include "hsi/network.hpp"

#include "hsi/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hsi {

namespace {

void check_labels(const std::vector<int>& labels, Index rows, int class_count) {
  if (static_cast<Index>(labels.size()) != rows) {
    throw DimensionError("supervised pass: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(rows) + " rows");
  }
  for (int y : labels) {
    if (y < 0 || y >= class_count) {
      throw DataError("supervised pass: label " + std::to_string(y) +
                      " outside [0, " + std::to_string(class_count) + ")");
    }
  }
}

// Activations per layer: trace[0] is the input, trace[k] the output of
// layer k. A layerless network contributes just the input.
std::vector<Mat> forward_trace(const SsaeNetwork& net, const Mat& batch) {
  std::vector<Mat> trace;
  trace.reserve(net.layers.size() + 1);
  trace.push_back(batch);
  for (const SaeLayer& layer : net.layers) {
    trace.push_back(encode(layer, trace.back()));
  }
  return trace;
}

// Backpropagates d(loss)/d(top activation) through the encoder stack,
// filling weight/bias gradients (decay included). Returns d(loss)/d(input).
Mat backprop_encoders(const SsaeNetwork& net, const std::vector<Mat>& trace,
                      Mat delta, double lambda, NetGrads& grads) {
  grads.encoders.resize(net.layers.size());
  for (Index k = static_cast<Index>(net.layers.size()) - 1; k >= 0; --k) {
    const Mat& act = trace[static_cast<std::size_t>(k + 1)];
    delta.array() *= act.array() * (1.0 - act.array());
    auto& g = grads.encoders[static_cast<std::size_t>(k)];
    g.w = delta.transpose() * trace[static_cast<std::size_t>(k)] +
          lambda * net.layers[static_cast<std::size_t>(k)].w_enc;
    g.b = delta.colwise().sum().transpose();
    delta = delta * net.layers[static_cast<std::size_t>(k)].w_enc;
  }
  return delta;
}

double decay_of(const SsaeNetwork& net) {
  double sum = 0.0;
  for (const SaeLayer& layer : net.layers) sum += layer.w_enc.squaredNorm();
  if (net.has_head()) sum += net.softmax_w.squaredNorm();
  return sum;
}

// Cross-entropy and the softmax-input delta (p - onehot)/N for a batch of
// final features F.
double cross_entropy(const SsaeNetwork& net, const Mat& features,
                     const std::vector<int>& labels, Mat* dlogits) {
  const Index n = features.rows();
  Mat logits = features * net.softmax_w.transpose();
  logits.rowwise() += net.softmax_b.transpose();
  Mat probs = softmax_rows(logits);

  double loss = 0.0;
  for (Index i = 0; i < n; ++i) {
    loss -= std::log(std::max(probs(i, labels[static_cast<std::size_t>(i)]),
                              1e-300));
  }
  loss /= static_cast<double>(n);

  if (dlogits) {
    *dlogits = probs / static_cast<double>(n);
    for (Index i = 0; i < n; ++i) {
      (*dlogits)(i, labels[static_cast<std::size_t>(i)]) -=
          1.0 / static_cast<double>(n);
    }
  }
  return loss;
}

void require_head(const SsaeNetwork& net, const char* who) {
  if (!net.has_head()) {
    throw DimensionError(std::string(who) + ": network has no softmax head");
  }
}

}  // namespace

SsaeNetwork greedy_pretrain(const Mat& inputs,
                            const std::vector<Index>& hidden_sizes,
                            const SaeHyper& hyper, Rng& rng) {
  if (hidden_sizes.empty()) {
    throw ConfigError("greedy_pretrain: hidden_sizes must be nonempty");
  }
  SsaeNetwork net;
  net.declared_input_dim = inputs.cols();
  Mat current = inputs;
  for (Index width : hidden_sizes) {
    SaeHyper layer_hyper = hyper;
    layer_hyper.hidden = width;
    SaeTrainResult trained = train_sae(current, layer_hyper, rng);
    current = encode(trained.layer, current);
    trained.layer.w_dec.resize(0, 0);  // decoder dropped once stacked
    trained.layer.b_dec.resize(0);
    net.layers.push_back(std::move(trained.layer));
  }
  return net;
}

Mat forward_features(const SsaeNetwork& net, const Mat& batch) {
  Mat current = batch;
  for (const SaeLayer& layer : net.layers) current = encode(layer, current);
  return current;
}

Vec forward_features(const SsaeNetwork& net, const Vec& x) {
  Mat row = forward_features(net, Mat(x.transpose()));
  return row.row(0).transpose();
}

void attach_head(SsaeNetwork& net, int class_count) {
  if (class_count < 2) {
    throw ConfigError("attach_head: need at least 2 classes");
  }
  net.class_count = class_count;
  net.softmax_w = Mat::Zero(class_count, net.feature_dim());
  net.softmax_b = Vec::Zero(class_count);
}

Vec softmax_predict(const SsaeNetwork& net, const Vec& x) {
  require_head(net, "softmax_predict");
  if (x.size() != net.input_dim()) {
    throw DimensionError("softmax_predict: input has " +
                         std::to_string(x.size()) + " entries, expected " +
                         std::to_string(net.input_dim()));
  }
  const Vec f = forward_features(net, x);
  return softmax(Vec(net.softmax_w * f + net.softmax_b));
}

Mat predict_logits(const SsaeNetwork& net, const Mat& batch) {
  require_head(net, "predict_logits");
  Mat logits = forward_features(net, batch) * net.softmax_w.transpose();
  logits.rowwise() += net.softmax_b.transpose();
  return logits;
}

Mat predict_probs(const SsaeNetwork& net, const Mat& batch) {
  return softmax_rows(predict_logits(net, batch));
}

std::pair<Vec, Vec> joint_forward(const JointModel& jm, const Vec& spectral_x,
                                  const Vec& spatial_x) {
  if (spectral_x.size() != jm.spectral_input_dim() ||
      spatial_x.size() != jm.spatial_input_dim()) {
    throw DimensionError(
        "joint_forward: inputs " + std::to_string(spectral_x.size()) + "/" +
        std::to_string(spatial_x.size()) + " do not match branch dims " +
        std::to_string(jm.spectral_input_dim()) + "/" +
        std::to_string(jm.spatial_input_dim()));
  }
  Vec fused_input(jm.spectral.feature_dim() + jm.spatial.feature_dim());
  fused_input << forward_features(jm.spectral, spectral_x),
      forward_features(jm.spatial, spatial_x);
  const Vec fused = forward_features(jm.fusion, fused_input);
  require_head(jm.fusion, "joint_forward");
  const Vec probs = softmax(Vec(jm.fusion.softmax_w * fused + jm.fusion.softmax_b));
  return {fused, probs};
}

namespace {

Mat fused_features(const JointModel& jm, const Mat& batch) {
  if (batch.cols() != jm.input_dim()) {
    throw DimensionError("joint model: batch has " +
                         std::to_string(batch.cols()) +
                         " features, expected " +
                         std::to_string(jm.input_dim()));
  }
  const Mat hs = forward_features(
      jm.spectral, Mat(batch.leftCols(jm.spectral_input_dim())));
  const Mat hp = forward_features(
      jm.spatial, Mat(batch.rightCols(jm.spatial_input_dim())));
  Mat fused(batch.rows(), hs.cols() + hp.cols());
  fused << hs, hp;
  return forward_features(jm.fusion, fused);
}

}  // namespace

Mat predict_logits(const JointModel& jm, const Mat& batch) {
  require_head(jm.fusion, "predict_logits");
  Mat logits = fused_features(jm, batch) * jm.fusion.softmax_w.transpose();
  logits.rowwise() += jm.fusion.softmax_b.transpose();
  return logits;
}

Mat predict_probs(const JointModel& jm, const Mat& batch) {
  return softmax_rows(predict_logits(jm, batch));
}

double supervised_loss(const SsaeNetwork& net, const Mat& batch,
                       const std::vector<int>& labels, double lambda) {
  require_head(net, "supervised_loss");
  check_labels(labels, batch.rows(), net.class_count);
  const Mat features = forward_features(net, batch);
  return cross_entropy(net, features, labels, nullptr) +
         0.5 * lambda * decay_of(net);
}

double supervised_loss(const JointModel& jm, const Mat& batch,
                       const std::vector<int>& labels, double lambda) {
  require_head(jm.fusion, "supervised_loss");
  check_labels(labels, batch.rows(), jm.class_count());
  const Mat features = fused_features(jm, batch);
  return cross_entropy(jm.fusion, features, labels, nullptr) +
         0.5 * lambda *
             (decay_of(jm.spectral) + decay_of(jm.spatial) + decay_of(jm.fusion));
}

NetGrads supervised_grad(const SsaeNetwork& net, const Mat& batch,
                         const std::vector<int>& labels, double lambda) {
  require_head(net, "supervised_grad");
  check_labels(labels, batch.rows(), net.class_count);

  const std::vector<Mat> trace = forward_trace(net, batch);
  const Mat& features = trace.back();

  Mat dlogits;
  cross_entropy(net, features, labels, &dlogits);

  NetGrads grads;
  grads.head.w = dlogits.transpose() * features + lambda * net.softmax_w;
  grads.head.b = dlogits.colwise().sum().transpose();
  backprop_encoders(net, trace, Mat(dlogits * net.softmax_w), lambda, grads);
  return grads;
}

JointGrads supervised_grad(const JointModel& jm, const Mat& batch,
                           const std::vector<int>& labels, double lambda) {
  require_head(jm.fusion, "supervised_grad");
  check_labels(labels, batch.rows(), jm.class_count());

  const std::vector<Mat> spectral_trace = forward_trace(
      jm.spectral, Mat(batch.leftCols(jm.spectral_input_dim())));
  const std::vector<Mat> spatial_trace = forward_trace(
      jm.spatial, Mat(batch.rightCols(jm.spatial_input_dim())));

  Mat fused(batch.rows(),
            jm.spectral.feature_dim() + jm.spatial.feature_dim());
  fused << spectral_trace.back(), spatial_trace.back();
  const std::vector<Mat> fusion_trace = forward_trace(jm.fusion, fused);
  const Mat& features = fusion_trace.back();

  Mat dlogits;
  cross_entropy(jm.fusion, features, labels, &dlogits);

  JointGrads grads;
  grads.fusion.head.w =
      dlogits.transpose() * features + lambda * jm.fusion.softmax_w;
  grads.fusion.head.b = dlogits.colwise().sum().transpose();

  const Mat dfused = backprop_encoders(
      jm.fusion, fusion_trace, Mat(dlogits * jm.fusion.softmax_w), lambda,
      grads.fusion);

  backprop_encoders(jm.spectral, spectral_trace,
                    Mat(dfused.leftCols(jm.spectral.feature_dim())), lambda,
                    grads.spectral);
  backprop_encoders(jm.spatial, spatial_trace,
                    Mat(dfused.rightCols(jm.spatial.feature_dim())), lambda,
                    grads.spatial);
  return grads;
}

namespace {

void apply_net_step(SsaeNetwork& net, const NetGrads& grads, double lr,
                    bool refine_all) {
  net.softmax_w -= lr * grads.head.w;
  net.softmax_b -= lr * grads.head.b;
  if (!refine_all) return;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    net.layers[k].w_enc -= lr * grads.encoders[k].w;
    net.layers[k].b_enc -= lr * grads.encoders[k].b;
  }
}

void apply_branch_step(SsaeNetwork& net, const NetGrads& grads, double lr) {
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    net.layers[k].w_enc -= lr * grads.encoders[k].w;
    net.layers[k].b_enc -= lr * grads.encoders[k].b;
  }
}

template <class Model, class Step>
std::vector<double> finetune_loop(Model& model, const Mat& batch,
                                  const std::vector<int>& labels,
                                  const FinetuneOptions& opt, Rng& rng,
                                  Step step) {
  if (batch.rows() == 0) throw DataError("finetune: empty training set");
  const Index n = batch.rows();
  const bool full_batch = n <= opt.minibatch;

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(opt.epochs));
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    if (full_batch) {
      step(batch, labels);
    } else {
      rng.shuffle(order);
      for (Index start = 0; start < n; start += opt.minibatch) {
        const Index count = std::min(opt.minibatch, n - start);
        Mat slice(count, batch.cols());
        std::vector<int> slice_labels(static_cast<std::size_t>(count));
        for (Index i = 0; i < count; ++i) {
          const Index row = order[static_cast<std::size_t>(start + i)];
          slice.row(i) = batch.row(row);
          slice_labels[static_cast<std::size_t>(i)] =
              labels[static_cast<std::size_t>(row)];
        }
        step(slice, slice_labels);
      }
    }
    const double loss = supervised_loss(model, batch, labels, opt.lambda);
    if (!std::isfinite(loss)) {
      throw NumericError("finetune: non-finite loss at epoch " +
                         std::to_string(epoch));
    }
    trace.push_back(loss);
  }
  return trace;
}

}  // namespace

std::vector<double> finetune(SsaeNetwork& net, const Mat& batch,
                             const std::vector<int>& labels,
                             const FinetuneOptions& opt, Rng& rng) {
  require_head(net, "finetune");
  return finetune_loop(net, batch, labels, opt, rng,
                       [&](const Mat& b, const std::vector<int>& y) {
                         const NetGrads g = supervised_grad(net, b, y, opt.lambda);
                         apply_net_step(net, g, opt.lr, opt.refine_all_layers);
                       });
}

std::vector<double> finetune(JointModel& jm, const Mat& batch,
                             const std::vector<int>& labels,
                             const FinetuneOptions& opt, Rng& rng) {
  require_head(jm.fusion, "finetune");
  return finetune_loop(jm, batch, labels, opt, rng,
                       [&](const Mat& b, const std::vector<int>& y) {
                         const JointGrads g = supervised_grad(jm, b, y, opt.lambda);
                         apply_net_step(jm.fusion, g.fusion, opt.lr,
                                        opt.refine_all_layers);
                         if (opt.refine_all_layers) {
                           apply_branch_step(jm.spectral, g.spectral, opt.lr);
                           apply_branch_step(jm.spatial, g.spatial, opt.lr);
                         }
                       });
}

}  // namespace hsi
