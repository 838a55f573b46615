#pragma once

#include "hsi/rng.hpp"
#include "hsi/types.hpp"

#include <vector>

namespace hsi {

/// One sparse autoencoder: logistic encoder m -> n and decoder n -> m.
struct SaeLayer {
  Mat w_enc;  // n x m
  Vec b_enc;  // n
  Mat w_dec;  // m x n
  Vec b_dec;  // m

  Index input_dim() const { return w_enc.cols(); }
  Index hidden_dim() const { return w_enc.rows(); }
};

struct SaeHyper {
  Index hidden = 0;
  double rho = 0.1;       // sparsity target for the mean hidden activation
  double beta = 0.05;     // weight of the KL sparsity penalty
  double lambda = 7e-7;   // weight decay (weights only, never biases)
  double lr = 0.05;
  int epochs = 500;
  Index minibatch = 128;  // full batch whenever the input fits

  void validate() const;
};

struct SaeGrads {
  Mat w_enc;
  Vec b_enc;
  Mat w_dec;
  Vec b_dec;
};

struct SparseLoss {
  double loss = 0.0;
  Vec rho_hat;  // mean hidden activation per unit, inside (0, 1)
};

/// Uniform weights in [-r, r] with r = sqrt(6 / (m + n + 1)); zero biases.
SaeLayer make_sae_layer(Index input_dim, Index hidden_dim, Rng& rng);

Vec encode(const SaeLayer& layer, const Vec& x);
Vec decode(const SaeLayer& layer, const Vec& h);

/// Batch variants; rows are samples.
Mat encode(const SaeLayer& layer, const Mat& batch);
Mat decode(const SaeLayer& layer, const Mat& hidden);

/// Mean squared reconstruction error + weight decay + KL sparsity penalty:
///   (1/N) sum_i 1/2 |x_hat_i - x_i|^2
///   + (lambda/2) (|w_enc|_F^2 + |w_dec|_F^2)
///   + beta * sum_j KL(rho || rho_hat_j)
SparseLoss sparse_loss(const SaeLayer& layer, const Mat& batch,
                       const SaeHyper& hyper);

/// Analytic gradient of sparse_loss for all four parameter blocks. The mean
/// activation rho_hat is computed over the whole batch in a first forward
/// pass and then held fixed through the backward pass.
SaeGrads sparse_grad(const SaeLayer& layer, const Mat& batch,
                     const SaeHyper& hyper);

struct SaeTrainResult {
  SaeLayer layer;
  std::vector<double> loss_trace;  // full-set sparse loss after each epoch
};

/// Plain SGD for `epochs` passes. Uses the whole input as one batch when it
/// has at most `minibatch` rows; otherwise shuffles and slices per epoch.
/// Throws NumericError with the epoch/minibatch position if the parameters
/// or the loss stop being finite.
SaeTrainResult train_sae(const Mat& inputs, const SaeHyper& hyper, Rng& rng);

}  // namespace hsi
