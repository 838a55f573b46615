#pragma once

#include "hsi/autoencoder.hpp"

#include <filesystem>
#include <utility>
#include <vector>

namespace hsi {

/// Stacked encoder layers with an optional softmax head. Headless networks
/// (class_count == 0) act as pure feature extractors.
struct SsaeNetwork {
  std::vector<SaeLayer> layers;  // encoders only; decoders dropped on stacking
  Mat softmax_w;                 // C x d_last
  Vec softmax_b;                 // C
  int class_count = 0;

  bool has_head() const { return class_count > 0; }
  Index input_dim() const {
    return layers.empty() ? declared_input_dim : layers.front().input_dim();
  }
  Index feature_dim() const {
    return layers.empty() ? declared_input_dim : layers.back().hidden_dim();
  }

  // Only meaningful for layerless pass-through networks.
  Index declared_input_dim = 0;
};

struct BranchConfig {
  std::vector<Index> spectral_hidden{200, 150};
  std::vector<Index> spatial_hidden{200, 150};
  std::vector<Index> fusion_hidden{400, 200};
  SaeHyper spectral_sae;
  SaeHyper spatial_sae;
  SaeHyper fusion_sae;
};

/// Two headless feature branches feeding a fusion network with the head.
struct JointModel {
  SsaeNetwork spectral;
  SsaeNetwork spatial;
  SsaeNetwork fusion;

  Index spectral_input_dim() const { return spectral.input_dim(); }
  Index spatial_input_dim() const { return spatial.input_dim(); }
  Index input_dim() const { return spectral_input_dim() + spatial_input_dim(); }
  int class_count() const { return fusion.class_count; }
};

struct FinetuneOptions {
  int epochs = 500;
  double lr = 0.05;
  double lambda = 7e-7;
  bool refine_all_layers = true;  // false: update the softmax head only
  Index minibatch = 1;  // per-sample stochastic updates, shuffled per epoch
};

/// Greedy layer-wise pretraining: layer k trains on the encoded output of
/// layers 1..k-1; encoders are kept, decoders dropped.
SsaeNetwork greedy_pretrain(const Mat& inputs,
                            const std::vector<Index>& hidden_sizes,
                            const SaeHyper& hyper, Rng& rng);

/// Encode through every layer; rows are samples.
Mat forward_features(const SsaeNetwork& net, const Mat& batch);
Vec forward_features(const SsaeNetwork& net, const Vec& x);

/// Zero-initialized softmax head on top of the current feature dim.
void attach_head(SsaeNetwork& net, int class_count);

Vec softmax_predict(const SsaeNetwork& net, const Vec& x);
Mat predict_logits(const SsaeNetwork& net, const Mat& batch);
Mat predict_probs(const SsaeNetwork& net, const Mat& batch);

std::pair<Vec, Vec> joint_forward(const JointModel& jm, const Vec& spectral_x,
                                  const Vec& spatial_x);
Mat predict_logits(const JointModel& jm, const Mat& batch);
Mat predict_probs(const JointModel& jm, const Mat& batch);

struct LayerGrad {
  Mat w;
  Vec b;
};

struct NetGrads {
  std::vector<LayerGrad> encoders;
  LayerGrad head;
};

struct JointGrads {
  NetGrads spectral;
  NetGrads spatial;
  NetGrads fusion;
};

/// Cross-entropy of the softmax output plus (lambda/2) * sum of squared
/// weights over every encoder and the head; biases carry no decay.
double supervised_loss(const SsaeNetwork& net, const Mat& batch,
                       const std::vector<int>& labels, double lambda);
double supervised_loss(const JointModel& jm, const Mat& batch,
                       const std::vector<int>& labels, double lambda);

NetGrads supervised_grad(const SsaeNetwork& net, const Mat& batch,
                         const std::vector<int>& labels, double lambda);
JointGrads supervised_grad(const JointModel& jm, const Mat& batch,
                           const std::vector<int>& labels, double lambda);

/// SGD on the supervised objective. Updates every layer jointly unless
/// refine_all_layers is off, in which case only the head moves. Returns the
/// per-epoch loss trace; throws NumericError on non-finite loss.
std::vector<double> finetune(SsaeNetwork& net, const Mat& batch,
                             const std::vector<int>& labels,
                             const FinetuneOptions& opt, Rng& rng);
std::vector<double> finetune(JointModel& jm, const Mat& batch,
                             const std::vector<int>& labels,
                             const FinetuneOptions& opt, Rng& rng);

}  // namespace hsi
