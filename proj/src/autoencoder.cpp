#include "hsi/autoencoder.hpp"

#include "hsi/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hsi {

namespace {

// Keeps batch means representable strictly inside (0, 1) for the KL terms.
inline Vec clamp_rho_hat(Vec rho_hat) {
  return rho_hat.cwiseMax(1e-12).cwiseMin(1.0 - 1e-12);
}

void check_batch(const SaeLayer& layer, const Mat& batch) {
  if (batch.rows() == 0) throw DataError("sparse autoencoder: empty batch");
  if (batch.cols() != layer.input_dim()) {
    throw DimensionError("sparse autoencoder: batch has " +
                         std::to_string(batch.cols()) +
                         " features, layer expects " +
                         std::to_string(layer.input_dim()));
  }
}

}  // namespace

void SaeHyper::validate() const {
  if (hidden < 1) throw ConfigError("sae: hidden size must be >= 1");
  if (!(rho > 0.0 && rho < 1.0))
    throw ConfigError("sae: rho must lie in (0, 1)");
  if (beta < 0.0) throw ConfigError("sae: beta must be >= 0");
  if (lambda < 0.0) throw ConfigError("sae: lambda must be >= 0");
  if (lr < 0.0) throw ConfigError("sae: lr must be >= 0");
  if (epochs < 0) throw ConfigError("sae: epochs must be >= 0");
  if (minibatch < 1) throw ConfigError("sae: minibatch must be >= 1");
}

SaeLayer make_sae_layer(Index input_dim, Index hidden_dim, Rng& rng) {
  const double r =
      std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim + 1));
  SaeLayer layer;
  layer.w_enc = rng.uniform_matrix(hidden_dim, input_dim, -r, r);
  layer.b_enc = Vec::Zero(hidden_dim);
  layer.w_dec = rng.uniform_matrix(input_dim, hidden_dim, -r, r);
  layer.b_dec = Vec::Zero(input_dim);
  return layer;
}

Vec encode(const SaeLayer& layer, const Vec& x) {
  if (x.size() != layer.input_dim()) {
    throw DimensionError("encode: input has " + std::to_string(x.size()) +
                         " entries, layer expects " +
                         std::to_string(layer.input_dim()));
  }
  return sigmoid(Vec(layer.w_enc * x + layer.b_enc));
}

Vec decode(const SaeLayer& layer, const Vec& h) {
  if (h.size() != layer.hidden_dim()) {
    throw DimensionError("decode: input has " + std::to_string(h.size()) +
                         " entries, layer expects " +
                         std::to_string(layer.hidden_dim()));
  }
  return sigmoid(Vec(layer.w_dec * h + layer.b_dec));
}

Mat encode(const SaeLayer& layer, const Mat& batch) {
  if (batch.cols() != layer.input_dim()) {
    throw DimensionError("encode: batch has " + std::to_string(batch.cols()) +
                         " features, layer expects " +
                         std::to_string(layer.input_dim()));
  }
  Mat z = batch * layer.w_enc.transpose();
  z.rowwise() += layer.b_enc.transpose();
  return sigmoid(z);
}

Mat decode(const SaeLayer& layer, const Mat& hidden) {
  if (hidden.cols() != layer.hidden_dim()) {
    throw DimensionError("decode: batch has " + std::to_string(hidden.cols()) +
                         " features, layer expects " +
                         std::to_string(layer.hidden_dim()));
  }
  Mat z = hidden * layer.w_dec.transpose();
  z.rowwise() += layer.b_dec.transpose();
  return sigmoid(z);
}

SparseLoss sparse_loss(const SaeLayer& layer, const Mat& batch,
                       const SaeHyper& hyper) {
  check_batch(layer, batch);
  const double n = static_cast<double>(batch.rows());

  const Mat hidden = encode(layer, batch);
  const Mat recon = decode(layer, hidden);

  SparseLoss out;
  out.rho_hat = clamp_rho_hat(hidden.colwise().mean().transpose());

  const double recon_term = 0.5 * (recon - batch).squaredNorm() / n;
  const double decay_term = 0.5 * hyper.lambda *
                            (layer.w_enc.squaredNorm() + layer.w_dec.squaredNorm());
  double kl = 0.0;
  for (Index j = 0; j < out.rho_hat.size(); ++j) {
    kl += kl_bernoulli(hyper.rho, out.rho_hat(j));
  }
  out.loss = recon_term + decay_term + hyper.beta * kl;
  return out;
}

SaeGrads sparse_grad(const SaeLayer& layer, const Mat& batch,
                     const SaeHyper& hyper) {
  check_batch(layer, batch);
  const double n = static_cast<double>(batch.rows());

  // First pass: activations and the batch-mean rho_hat.
  const Mat hidden = encode(layer, batch);
  const Mat recon = decode(layer, hidden);
  const Vec rho_hat = clamp_rho_hat(hidden.colwise().mean().transpose());

  // d(loss)/d(z_dec): mean squared error through the output sigmoid.
  Mat delta_out =
      ((recon - batch).array() * recon.array() * (1.0 - recon.array())) / n;

  SaeGrads g;
  g.w_dec = delta_out.transpose() * hidden + hyper.lambda * layer.w_dec;
  g.b_dec = delta_out.colwise().sum().transpose();

  // Sparsity contribution to the hidden delta, shared across the batch.
  Vec sparse_term(rho_hat.size());
  for (Index j = 0; j < rho_hat.size(); ++j) {
    sparse_term(j) = hyper.beta / n *
                     (-hyper.rho / rho_hat(j) +
                      (1.0 - hyper.rho) / (1.0 - rho_hat(j)));
  }

  Mat delta_hidden = delta_out * layer.w_dec;
  delta_hidden.rowwise() += sparse_term.transpose();
  delta_hidden.array() *= hidden.array() * (1.0 - hidden.array());

  g.w_enc = delta_hidden.transpose() * batch + hyper.lambda * layer.w_enc;
  g.b_enc = delta_hidden.colwise().sum().transpose();
  return g;
}

namespace {

bool layer_finite(const SaeLayer& layer) {
  return layer.w_enc.allFinite() && layer.b_enc.allFinite() &&
         layer.w_dec.allFinite() && layer.b_dec.allFinite();
}

void sgd_step(SaeLayer& layer, const SaeGrads& g, double lr) {
  layer.w_enc -= lr * g.w_enc;
  layer.b_enc -= lr * g.b_enc;
  layer.w_dec -= lr * g.w_dec;
  layer.b_dec -= lr * g.b_dec;
}

}  // namespace

SaeTrainResult train_sae(const Mat& inputs, const SaeHyper& hyper, Rng& rng) {
  hyper.validate();
  if (inputs.rows() == 0) throw DataError("train_sae: no input rows");

  SaeTrainResult result;
  result.layer = make_sae_layer(inputs.cols(), hyper.hidden, rng);

  const Index n = inputs.rows();
  const bool full_batch = n <= hyper.minibatch;

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    int minibatch_index = 0;
    if (full_batch) {
      sgd_step(result.layer, sparse_grad(result.layer, inputs, hyper),
               hyper.lr);
    } else {
      rng.shuffle(order);
      for (Index start = 0; start < n; start += hyper.minibatch) {
        const Index count = std::min(hyper.minibatch, n - start);
        Mat slice(count, inputs.cols());
        for (Index i = 0; i < count; ++i)
          slice.row(i) = inputs.row(order[static_cast<std::size_t>(start + i)]);
        sgd_step(result.layer, sparse_grad(result.layer, slice, hyper),
                 hyper.lr);
        if (!layer_finite(result.layer)) {
          throw NumericError("train_sae: non-finite parameters at epoch " +
                             std::to_string(epoch) + ", minibatch " +
                             std::to_string(minibatch_index));
        }
        ++minibatch_index;
      }
    }
    const double loss = sparse_loss(result.layer, inputs, hyper).loss;
    if (!std::isfinite(loss)) {
      throw NumericError("train_sae: non-finite loss at epoch " +
                         std::to_string(epoch) + ", minibatch " +
                         std::to_string(minibatch_index));
    }
    result.loss_trace.push_back(loss);
  }
  return result;
}

}  // namespace hsi
