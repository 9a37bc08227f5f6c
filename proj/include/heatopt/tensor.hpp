#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "heatopt/rng.hpp"
#include "heatopt/types.hpp"

namespace heatopt {

using TIndex = Eigen::Index;

struct Shape4 {
  TIndex n = 0, c = 0, h = 0, w = 0;

  bool operator==(const Shape4&) const = default;
  TIndex count() const { return n * c * h * w; }
  std::string str() const {
    return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
           std::to_string(w) + ")";
  }
};

// Dense (batch, channels, height, width) tensor, contiguous row-major in that
// order, with an optional gradient buffer of the same shape.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 s) : shape(s), data(Eigen::ArrayXd::Zero(s.count())) {}
  Tensor4(TIndex n, TIndex c, TIndex h, TIndex w) : Tensor4(Shape4{n, c, h, w}) {}

  Shape4 shape;
  Eigen::ArrayXd data;
  Eigen::ArrayXd grad;  // empty until ensure_grad()

  TIndex size() const { return data.size(); }

  double& at(TIndex n, TIndex c, TIndex y, TIndex x) {
    return data[((n * shape.c + c) * shape.h + y) * shape.w + x];
  }
  double at(TIndex n, TIndex c, TIndex y, TIndex x) const {
    return data[((n * shape.c + c) * shape.h + y) * shape.w + x];
  }

  // (h, w) view of one channel plane; shares memory with `data`
  Eigen::Map<FieldArray> plane(TIndex n, TIndex c) {
    return {data.data() + (n * shape.c + c) * shape.h * shape.w, shape.h, shape.w};
  }
  Eigen::Map<const FieldArray> plane(TIndex n, TIndex c) const {
    return {data.data() + (n * shape.c + c) * shape.h * shape.w, shape.h, shape.w};
  }

  bool has_grad() const { return grad.size() == data.size() && data.size() > 0; }
  void ensure_grad() {
    if (!has_grad()) grad = Eigen::ArrayXd::Zero(data.size());
  }
  void zero_grad() {
    if (has_grad()) grad.setZero();
  }
};

// One trainable array with its gradient buffer, tagged with the network block
// it belongs to so optimizer failures can name the offender.
struct ParamRef {
  Eigen::ArrayXd* value = nullptr;
  Eigen::ArrayXd* grad = nullptr;
  std::string name;
  int block = -1;
};

TIndex conv_out_size(TIndex in, TIndex k, TIndex stride, TIndex padding);

// Cross-correlation. Weight shape (out_ch, in_ch, k, k), bias length out_ch.
Tensor4 conv2d_forward(const Tensor4& input, const Tensor4& weight, const Eigen::ArrayXd& bias,
                       TIndex stride, TIndex padding);

// Gradients of conv2d_forward; weight/bias gradients are accumulated into the
// provided flat buffers (sized like weight.data / bias). Returns grad wrt input.
Tensor4 conv2d_backward(const Tensor4& grad_out, const Tensor4& input, const Tensor4& weight,
                        Eigen::ArrayXd& weight_grad, Eigen::ArrayXd& bias_grad, TIndex stride,
                        TIndex padding);

// Transposed convolution (fractionally-strided). Weight shape (in_ch, out_ch, k, k).
// Output spatial size: (in - 1) * stride - 2 * padding + k.
Tensor4 convt2d_forward(const Tensor4& input, const Tensor4& weight, const Eigen::ArrayXd& bias,
                        TIndex stride, TIndex padding);

Tensor4 convt2d_backward(const Tensor4& grad_out, const Tensor4& input, const Tensor4& weight,
                         Eigen::ArrayXd& weight_grad, Eigen::ArrayXd& bias_grad, TIndex stride,
                         TIndex padding);

struct BatchNormCache {
  Eigen::ArrayXd mean;     // per channel, batch statistics used in the forward
  Eigen::ArrayXd inv_std;  // 1 / sqrt(var + eps)
  Tensor4 xhat;            // normalized input, saved for the backward pass
};

// Per-channel batch normalization. Training mode normalizes with batch
// statistics and updates the running buffers; eval mode uses the running
// statistics. `cache` may be null in eval mode.
Tensor4 batchnorm_forward(const Tensor4& input, const Eigen::ArrayXd& scale,
                          const Eigen::ArrayXd& shift, Eigen::ArrayXd& running_mean,
                          Eigen::ArrayXd& running_var, bool training, double momentum, double eps,
                          BatchNormCache* cache);

Tensor4 batchnorm_backward(const Tensor4& grad_out, const BatchNormCache& cache,
                           const Eigen::ArrayXd& scale, Eigen::ArrayXd& scale_grad,
                           Eigen::ArrayXd& shift_grad);

// slope 0 gives the plain rectifier
Tensor4 leaky_relu_forward(const Tensor4& input, double slope);
Tensor4 leaky_relu_backward(const Tensor4& grad_out, const Tensor4& input, double slope);

// Inverted dropout: kept entries scale by 1/(1-p). `mask_out` receives the
// multiplier field and feeds the backward pass. Identity when not training.
Tensor4 dropout_forward(const Tensor4& input, double p, bool training, Rng& rng,
                        Tensor4* mask_out);
Tensor4 dropout_backward(const Tensor4& grad_out, const Tensor4& mask);

Tensor4 concat_channels(const Tensor4& a, const Tensor4& b);
// Splits grad of concat_channels(a, b) back into grads for a and b.
void split_channels(const Tensor4& grad, TIndex channels_a, Tensor4& grad_a, Tensor4& grad_b);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  long step = 0;
  std::vector<Eigen::ArrayXd> m, v;  // first/second moments, one pair per parameter

  void init(const std::vector<ParamRef>& params);
};

// One Adam update over all parameters with bias correction. Throws
// TrainingError naming the offending block when a gradient is non-finite.
void adam_step(const std::vector<ParamRef>& params, AdamState& state);

}  // namespace heatopt
