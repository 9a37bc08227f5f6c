#pragma once

#include <string>
#include <vector>

#include "heatopt/tensor.hpp"
#include "heatopt/types.hpp"

namespace heatopt {

struct UNetConfig {
  int depth = 7;               // encoder (= decoder) block count
  TIndex input_channels = 2;   // boundary-value field + mask
  TIndex output_channels = 1;  // temperature field
  TIndex base_channels = 8;
  TIndex channel_cap = 256;
  TIndex kernel = 4;           // stride-2 halving / doubling
  double dropout = 0.0;
  bool batchnorm = true;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  double leaky_slope = 0.2;    // encoder activations; decoder uses the plain rectifier

  TIndex encoder_channels(int level) const {
    TIndex c = base_channels;
    for (int i = 0; i < level && c < channel_cap; ++i) c = std::min(c * 2, channel_cap);
    return c;
  }

  void validate() const;
  bool operator==(const UNetConfig&) const = default;
};

// Static description of one convolution block, derived from UNetConfig.
struct BlockSpec {
  bool transposed = false;   // encoder: strided conv; decoder: transposed conv
  TIndex in_channels = 0;    // after skip concatenation for decoder blocks
  TIndex out_channels = 0;
  bool pre_activation = false;  // first encoder block takes the raw input
  double activation_slope = 0.0;
  bool normalized = false;   // batchnorm off on the first, bottleneck and output blocks
  bool dropout = false;      // never on the output block
};

struct ConvBlockParams {
  Tensor4 weight;  // conv: (out, in, k, k); transposed: (in, out, k, k)
  Eigen::ArrayXd bias;
  Eigen::ArrayXd bias_grad;
  // batchnorm parameters; zero-length when the block is not normalized
  Eigen::ArrayXd bn_scale, bn_shift, bn_running_mean, bn_running_var;
  Eigen::ArrayXd bn_scale_grad, bn_shift_grad;
};

struct NetworkParams {
  UNetConfig config;
  std::vector<BlockSpec> wiring;       // encoder blocks 0..depth-1, then decoder blocks
  std::vector<ConvBlockParams> blocks;

  static NetworkParams init(const UNetConfig& cfg, Rng& rng);

  std::vector<ParamRef> trainable();
  void zero_grads();
  long parameter_count() const;
};

// Builds the block table for a config and verifies the skip-connection shape
// law (concatenated channels equal each decoder block's declared input).
std::vector<BlockSpec> build_wiring(const UNetConfig& cfg);

struct BlockCache {
  Tensor4 input;      // block input, after concatenation, before activation
  Tensor4 activated;  // what the convolution saw
  BatchNormCache bn;
  Tensor4 dropout_mask;
};

struct ForwardCache {
  std::vector<BlockCache> blocks;
};

// Runs the encoder-decoder. Training mode uses batch statistics (updating the
// running buffers) and applies dropout via `dropout_rng`; eval mode is a pure
// function of (params, input).
Tensor4 unet_forward(const Tensor4& input, NetworkParams& params, bool training,
                     Rng* dropout_rng, ForwardCache* cache);

// Eval-mode forward without any state mutation.
Tensor4 unet_infer(const NetworkParams& params, const Tensor4& input);

// Accumulates parameter gradients for a forward pass recorded in `cache`.
void unet_backward(const Tensor4& grad_output, NetworkParams& params, const ForwardCache& cache);

// Self-describing binary checkpoint; round-trips bit-exactly.
void save_checkpoint(const std::string& path, const NetworkParams& params, const GridSpec& grid);

struct LoadedCheckpoint {
  NetworkParams params;
  GridSpec grid;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace heatopt
