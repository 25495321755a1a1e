#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentinel/adam.hpp"
#include "sentinel/conv.hpp"
#include "sentinel/signal.hpp"

namespace sentinel {

// Temporal convolutional autoencoder for multivariate telemetry.
//
// Encoder: stack of dilated causal residual blocks -> linear 1x1 projection to
// `latent_channels` -> temporal average pooling by `pool_factor`.
// Decoder: sample-and-hold upsampling by `pool_factor` -> an independent stack
// of residual blocks -> linear 1x1 projection back to `d` channels.
struct TcnAeConfig {
  int d = 10;                                  // input channels
  int n_filters = 20;                          // filters per residual block
  int kernel_size = 3;                         // taps per dilated conv
  std::vector<int> dilations = {1, 2, 4, 8, 16};
  int latent_channels = 4;
  int pool_factor = 4;
  // Channel dropout inside blocks. Off by default: the latent bottleneck
  // already regularizes, and mask noise mostly slows the fit of rare
  // transients whose residuals set the benign score tail.
  double dropout_rate = 0.0;
  std::int64_t t_train = 512;                  // training subsequence length
  int batch_size = 32;
  int n_epochs = 10;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
};

// Two weight-normalized dilated causal convs, each followed by ReLU and
// spatial dropout; the block output is skip(x) + f(x) with no activation
// after the sum. The skip path is the identity when the channel counts
// already match, otherwise a weight-normalized 1x1 projection.
struct ResidualBlock {
  ConvFilter conv1, conv2;
  bool has_skip = false;
  ConvFilter skip;
};

struct TcnAeModel {
  TcnAeConfig cfg;
  std::vector<ResidualBlock> encoder_blocks;
  ConvFilter enc_1x1;  // n_filters -> latent_channels, linear
  std::vector<ResidualBlock> decoder_blocks;
  ConvFilter dec_1x1;  // n_filters -> d, linear
  std::vector<double> loss_history;  // mean training loss per epoch
};

// Fresh model with all filters initialized from the config seed in a fixed
// declaration order, so equal configs give bitwise-equal models.
TcnAeModel build_model(const TcnAeConfig& cfg);

// Inference-mode forward through one residual block.
Signal2D residual_block_forward(const ResidualBlock& b, const Signal2D& x);

// Inference-mode transforms (dropout inactive).
Signal2D encode(const TcnAeModel& m, const Signal2D& x);     // ceil(T/s) x latent_channels
Signal2D decode(const TcnAeModel& m, const Signal2D& z);     // z.T * s x d
Signal2D reconstruct(const TcnAeModel& m, const Signal2D& x);  // truncated back to x.T rows

// Flat parameter order (shared by the optimizer, gradients and the model
// file): encoder blocks in order (conv1, conv2, skip when present; v, g, bias
// within a filter), then enc_1x1, decoder blocks, dec_1x1.
ParamRefs model_params(TcnAeModel& m);
std::size_t parameter_count(const TcnAeModel& m);

// Per-filter / per-block gradient buffers mirroring the model structure.
struct FilterGrads {
  std::vector<double> v, g, bias;
};
struct BlockGrads {
  FilterGrads conv1, conv2, skip;  // skip left empty when the block has none
};
struct ModelGrads {
  std::vector<BlockGrads> encoder_blocks;
  FilterGrads enc_1x1;
  std::vector<BlockGrads> decoder_blocks;
  FilterGrads dec_1x1;
};

ModelGrads make_zero_grads(const TcnAeModel& m);
void accumulate_grads(ModelGrads& into, const ModelGrads& item);
void scale_grads(ModelGrads& g, double a);
// Same order as model_params.
std::vector<double> flatten_grads(const TcnAeModel& m, const ModelGrads& g);

// Forward + backward for one training window (training mode: dropout active
// when the configured rate is positive, masks drawn from dropout_seed).
// Returns the mean log-cosh reconstruction loss; fills grads when non-null.
double training_loss_and_grads(const TcnAeModel& m, const Signal2D& window, std::uint64_t dropout_seed,
                               ModelGrads* grads);

// Adam training on uniformly drawn subsequences of x. Per epoch draws
// ceil(T / t_train) full batches, so the subsequence starts tile the series
// once per batch lane; gradients are averaged over each batch. Appends the mean loss of
// every epoch to loss_history. Throws NumericError when the loss turns
// non-finite.
void train(TcnAeModel& m, const Signal2D& x);

// JSON model file with config, loss history, all parameter arrays in flat
// order and an fnv1a64 checksum over the raw parameter bit patterns. Loading
// an edited or truncated file fails validation.
void save_model(const TcnAeModel& m, const std::string& path);
TcnAeModel load_model(const std::string& path);

}  // namespace sentinel
