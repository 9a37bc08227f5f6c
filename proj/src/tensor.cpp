#include "heatopt/tensor.hpp"

#include <cmath>

namespace heatopt {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Patch matrix (c*k*k rows, ph*pw columns) for one sample. Row index is
// (c*k + ky)*k + kx, column index is the patch's position py*pw + px; pixels
// outside the padded input read as zero.
MatRM im2col(const Tensor4& x, TIndex n, TIndex k, TIndex stride, TIndex pad, TIndex ph,
             TIndex pw) {
  const TIndex c = x.shape.c;
  const TIndex h = x.shape.h;
  const TIndex w = x.shape.w;
  MatRM cols = MatRM::Zero(c * k * k, ph * pw);
  for (TIndex ci = 0; ci < c; ++ci) {
    const auto plane = x.plane(n, ci);
    for (TIndex ky = 0; ky < k; ++ky)
      for (TIndex kx = 0; kx < k; ++kx) {
        const TIndex row = (ci * k + ky) * k + kx;
        for (TIndex py = 0; py < ph; ++py) {
          const TIndex y = py * stride - pad + ky;
          if (y < 0 || y >= h) continue;
          for (TIndex px = 0; px < pw; ++px) {
            const TIndex xx = px * stride - pad + kx;
            if (xx < 0 || xx >= w) continue;
            cols(row, py * pw + px) = plane(y, xx);
          }
        }
      }
  }
  return cols;
}

// Adjoint of im2col: scatter-add patch columns back onto sample n of `out`.
void col2im_add(const MatRM& cols, Tensor4& out, TIndex n, TIndex k, TIndex stride, TIndex pad,
                TIndex ph, TIndex pw) {
  const TIndex c = out.shape.c;
  const TIndex h = out.shape.h;
  const TIndex w = out.shape.w;
  for (TIndex ci = 0; ci < c; ++ci) {
    auto plane = out.plane(n, ci);
    for (TIndex ky = 0; ky < k; ++ky)
      for (TIndex kx = 0; kx < k; ++kx) {
        const TIndex row = (ci * k + ky) * k + kx;
        for (TIndex py = 0; py < ph; ++py) {
          const TIndex y = py * stride - pad + ky;
          if (y < 0 || y >= h) continue;
          for (TIndex px = 0; px < pw; ++px) {
            const TIndex xx = px * stride - pad + kx;
            if (xx < 0 || xx >= w) continue;
            plane(y, xx) += cols(row, py * pw + px);
          }
        }
      }
  }
}

Eigen::Map<MatRM> sample_mat(Tensor4& t, TIndex n) {
  return {t.data.data() + n * t.shape.c * t.shape.h * t.shape.w, t.shape.c,
          t.shape.h * t.shape.w};
}

Eigen::Map<const MatRM> sample_mat(const Tensor4& t, TIndex n) {
  return {t.data.data() + n * t.shape.c * t.shape.h * t.shape.w, t.shape.c,
          t.shape.h * t.shape.w};
}

}  // namespace

TIndex conv_out_size(TIndex in, TIndex k, TIndex stride, TIndex padding) {
  return (in + 2 * padding - k) / stride + 1;
}

Tensor4 conv2d_forward(const Tensor4& input, const Tensor4& weight, const Eigen::ArrayXd& bias,
                       TIndex stride, TIndex padding) {
  const TIndex c_out = weight.shape.n;
  const TIndex c_in = weight.shape.c;
  const TIndex k = weight.shape.h;
  if (weight.shape.w != k) throw DimensionError("conv2d: kernel must be square");
  if (input.shape.c != c_in)
    throw DimensionError("conv2d: input has " + std::to_string(input.shape.c) +
                         " channels, weight expects " + std::to_string(c_in));
  if (bias.size() != c_out) throw DimensionError("conv2d: bias length mismatch");
  const TIndex ho = conv_out_size(input.shape.h, k, stride, padding);
  const TIndex wo = conv_out_size(input.shape.w, k, stride, padding);
  if (ho < 1 || wo < 1) throw DimensionError("conv2d: output would be empty");

  Tensor4 out(input.shape.n, c_out, ho, wo);
  Eigen::Map<const MatRM> wmat(weight.data.data(), c_out, c_in * k * k);
  const Eigen::Map<const Eigen::VectorXd> bvec(bias.data(), bias.size());
  for (TIndex n = 0; n < input.shape.n; ++n) {
    const MatRM cols = im2col(input, n, k, stride, padding, ho, wo);
    auto ymat = sample_mat(out, n);
    ymat.noalias() = wmat * cols;
    ymat.colwise() += bvec;
  }
  return out;
}

Tensor4 conv2d_backward(const Tensor4& grad_out, const Tensor4& input, const Tensor4& weight,
                        Eigen::ArrayXd& weight_grad, Eigen::ArrayXd& bias_grad, TIndex stride,
                        TIndex padding) {
  const TIndex c_out = weight.shape.n;
  const TIndex c_in = weight.shape.c;
  const TIndex k = weight.shape.h;
  const TIndex ho = grad_out.shape.h;
  const TIndex wo = grad_out.shape.w;
  if (grad_out.shape.n != input.shape.n || grad_out.shape.c != c_out ||
      ho != conv_out_size(input.shape.h, k, stride, padding) ||
      wo != conv_out_size(input.shape.w, k, stride, padding))
    throw DimensionError("conv2d_backward: grad shape mismatch");
  if (weight_grad.size() != weight.size() || bias_grad.size() != c_out)
    throw DimensionError("conv2d_backward: gradient buffer size mismatch");

  Tensor4 grad_input(input.shape);
  Eigen::Map<const MatRM> wmat(weight.data.data(), c_out, c_in * k * k);
  Eigen::Map<MatRM> gwmat(weight_grad.data(), c_out, c_in * k * k);
  Eigen::Map<Eigen::VectorXd> gbvec(bias_grad.data(), bias_grad.size());
  for (TIndex n = 0; n < input.shape.n; ++n) {
    const auto gymat = sample_mat(grad_out, n);
    const MatRM cols = im2col(input, n, k, stride, padding, ho, wo);
    gwmat.noalias() += gymat * cols.transpose();
    gbvec += gymat.rowwise().sum();
    const MatRM dcols = wmat.transpose() * gymat;
    col2im_add(dcols, grad_input, n, k, stride, padding, ho, wo);
  }
  return grad_input;
}

Tensor4 convt2d_forward(const Tensor4& input, const Tensor4& weight, const Eigen::ArrayXd& bias,
                        TIndex stride, TIndex padding) {
  const TIndex c_in = weight.shape.n;
  const TIndex c_out = weight.shape.c;
  const TIndex k = weight.shape.h;
  if (weight.shape.w != k) throw DimensionError("convt2d: kernel must be square");
  if (input.shape.c != c_in)
    throw DimensionError("convt2d: input has " + std::to_string(input.shape.c) +
                         " channels, weight expects " + std::to_string(c_in));
  if (bias.size() != c_out) throw DimensionError("convt2d: bias length mismatch");
  const TIndex ho = (input.shape.h - 1) * stride - 2 * padding + k;
  const TIndex wo = (input.shape.w - 1) * stride - 2 * padding + k;
  if (ho < 1 || wo < 1) throw DimensionError("convt2d: output would be empty");

  Tensor4 out(input.shape.n, c_out, ho, wo);
  Eigen::Map<const MatRM> wmat(weight.data.data(), c_in, c_out * k * k);
  for (TIndex n = 0; n < input.shape.n; ++n) {
    const auto xmat = sample_mat(input, n);
    const MatRM cols = wmat.transpose() * xmat;  // (c_out*k*k, h_in*w_in)
    col2im_add(cols, out, n, k, stride, padding, input.shape.h, input.shape.w);
    for (TIndex c = 0; c < c_out; ++c) out.plane(n, c) += bias[c];
  }
  return out;
}

Tensor4 convt2d_backward(const Tensor4& grad_out, const Tensor4& input, const Tensor4& weight,
                         Eigen::ArrayXd& weight_grad, Eigen::ArrayXd& bias_grad, TIndex stride,
                         TIndex padding) {
  const TIndex c_in = weight.shape.n;
  const TIndex c_out = weight.shape.c;
  const TIndex k = weight.shape.h;
  if (grad_out.shape.n != input.shape.n || grad_out.shape.c != c_out ||
      grad_out.shape.h != (input.shape.h - 1) * stride - 2 * padding + k ||
      grad_out.shape.w != (input.shape.w - 1) * stride - 2 * padding + k)
    throw DimensionError("convt2d_backward: grad shape mismatch");
  if (weight_grad.size() != weight.size() || bias_grad.size() != c_out)
    throw DimensionError("convt2d_backward: gradient buffer size mismatch");

  Tensor4 grad_input(input.shape);
  Eigen::Map<const MatRM> wmat(weight.data.data(), c_in, c_out * k * k);
  Eigen::Map<MatRM> gwmat(weight_grad.data(), c_in, c_out * k * k);
  for (TIndex n = 0; n < input.shape.n; ++n) {
    const MatRM dcols = im2col(grad_out, n, k, stride, padding, input.shape.h, input.shape.w);
    auto gxmat = sample_mat(grad_input, n);
    gxmat.noalias() = wmat * dcols;
    gwmat.noalias() += sample_mat(input, n) * dcols.transpose();
    for (TIndex c = 0; c < c_out; ++c) bias_grad[c] += grad_out.plane(n, c).sum();
  }
  return grad_input;
}

Tensor4 batchnorm_forward(const Tensor4& input, const Eigen::ArrayXd& scale,
                          const Eigen::ArrayXd& shift, Eigen::ArrayXd& running_mean,
                          Eigen::ArrayXd& running_var, bool training, double momentum, double eps,
                          BatchNormCache* cache) {
  const TIndex c = input.shape.c;
  if (scale.size() != c || shift.size() != c || running_mean.size() != c ||
      running_var.size() != c)
    throw DimensionError("batchnorm: parameter length must equal channel count");

  Tensor4 out(input.shape);
  const double count = static_cast<double>(input.shape.n * input.shape.h * input.shape.w);

  if (!training) {
    for (TIndex ci = 0; ci < c; ++ci) {
      const double inv = 1.0 / std::sqrt(running_var[ci] + eps);
      for (TIndex n = 0; n < input.shape.n; ++n)
        out.plane(n, ci) = (input.plane(n, ci) - running_mean[ci]) * inv * scale[ci] + shift[ci];
    }
    return out;
  }

  Eigen::ArrayXd mean(c), var(c);
  for (TIndex ci = 0; ci < c; ++ci) {
    double s = 0.0, s2 = 0.0;
    for (TIndex n = 0; n < input.shape.n; ++n) {
      const auto p = input.plane(n, ci);
      s += p.sum();
      s2 += p.square().sum();
    }
    mean[ci] = s / count;
    var[ci] = std::max(0.0, s2 / count - mean[ci] * mean[ci]);
  }

  if (cache) {
    cache->mean = mean;
    cache->inv_std = (var + eps).sqrt().inverse();
    cache->xhat = Tensor4(input.shape);
  }
  for (TIndex ci = 0; ci < c; ++ci) {
    const double inv = 1.0 / std::sqrt(var[ci] + eps);
    for (TIndex n = 0; n < input.shape.n; ++n) {
      if (cache) {
        cache->xhat.plane(n, ci) = (input.plane(n, ci) - mean[ci]) * inv;
        out.plane(n, ci) = cache->xhat.plane(n, ci) * scale[ci] + shift[ci];
      } else {
        out.plane(n, ci) = (input.plane(n, ci) - mean[ci]) * inv * scale[ci] + shift[ci];
      }
    }
  }

  const double unbias = count > 1.0 ? count / (count - 1.0) : 1.0;
  running_mean = (1.0 - momentum) * running_mean + momentum * mean;
  running_var = (1.0 - momentum) * running_var + momentum * (var * unbias);
  return out;
}

Tensor4 batchnorm_backward(const Tensor4& grad_out, const BatchNormCache& cache,
                           const Eigen::ArrayXd& scale, Eigen::ArrayXd& scale_grad,
                           Eigen::ArrayXd& shift_grad) {
  const TIndex c = grad_out.shape.c;
  if (!(grad_out.shape == cache.xhat.shape))
    throw DimensionError("batchnorm_backward: cache shape mismatch");
  if (scale_grad.size() != c || shift_grad.size() != c)
    throw DimensionError("batchnorm_backward: gradient buffer size mismatch");

  Tensor4 grad_input(grad_out.shape);
  const double count = static_cast<double>(grad_out.shape.n * grad_out.shape.h * grad_out.shape.w);
  for (TIndex ci = 0; ci < c; ++ci) {
    double sum_gy = 0.0, sum_gy_xhat = 0.0;
    for (TIndex n = 0; n < grad_out.shape.n; ++n) {
      const auto gy = grad_out.plane(n, ci);
      sum_gy += gy.sum();
      sum_gy_xhat += (gy * cache.xhat.plane(n, ci)).sum();
    }
    scale_grad[ci] += sum_gy_xhat;
    shift_grad[ci] += sum_gy;
    const double a = scale[ci] * cache.inv_std[ci];
    const double mg = sum_gy / count;
    const double mgx = sum_gy_xhat / count;
    for (TIndex n = 0; n < grad_out.shape.n; ++n)
      grad_input.plane(n, ci) =
          a * (grad_out.plane(n, ci) - mg - cache.xhat.plane(n, ci) * mgx);
  }
  return grad_input;
}

Tensor4 leaky_relu_forward(const Tensor4& input, double slope) {
  Tensor4 out(input.shape);
  out.data = (input.data > 0.0).select(input.data, slope * input.data);
  return out;
}

Tensor4 leaky_relu_backward(const Tensor4& grad_out, const Tensor4& input, double slope) {
  if (!(grad_out.shape == input.shape))
    throw DimensionError("leaky_relu_backward: shape mismatch");
  Tensor4 grad_input(input.shape);
  grad_input.data = (input.data > 0.0).select(grad_out.data, slope * grad_out.data);
  return grad_input;
}

Tensor4 dropout_forward(const Tensor4& input, double p, bool training, Rng& rng,
                        Tensor4* mask_out) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout", "dropout probability must be in [0, 1)");
  if (!training || p == 0.0) {
    if (mask_out) {
      *mask_out = Tensor4(input.shape);
      mask_out->data.setOnes();
    }
    return input;
  }
  Tensor4 mask(input.shape);
  const double keep_scale = 1.0 / (1.0 - p);
  for (TIndex i = 0; i < mask.size(); ++i)
    mask.data[i] = rng.uniform() >= p ? keep_scale : 0.0;
  Tensor4 out(input.shape);
  out.data = input.data * mask.data;
  if (mask_out) *mask_out = std::move(mask);
  return out;
}

Tensor4 dropout_backward(const Tensor4& grad_out, const Tensor4& mask) {
  if (!(grad_out.shape == mask.shape)) throw DimensionError("dropout_backward: shape mismatch");
  Tensor4 grad_input(grad_out.shape);
  grad_input.data = grad_out.data * mask.data;
  return grad_input;
}

Tensor4 concat_channels(const Tensor4& a, const Tensor4& b) {
  if (a.shape.n != b.shape.n || a.shape.h != b.shape.h || a.shape.w != b.shape.w)
    throw DimensionError("concat_channels: batch/spatial shapes differ (" + a.shape.str() +
                         " vs " + b.shape.str() + ")");
  Tensor4 out(a.shape.n, a.shape.c + b.shape.c, a.shape.h, a.shape.w);
  const TIndex plane = a.shape.h * a.shape.w;
  const TIndex ca = a.shape.c * plane;
  const TIndex cb = b.shape.c * plane;
  for (TIndex n = 0; n < a.shape.n; ++n) {
    out.data.segment(n * (ca + cb), ca) = a.data.segment(n * ca, ca);
    out.data.segment(n * (ca + cb) + ca, cb) = b.data.segment(n * cb, cb);
  }
  return out;
}

void split_channels(const Tensor4& grad, TIndex channels_a, Tensor4& grad_a, Tensor4& grad_b) {
  const TIndex channels_b = grad.shape.c - channels_a;
  if (channels_a < 1 || channels_b < 1) throw DimensionError("split_channels: bad split point");
  grad_a = Tensor4(grad.shape.n, channels_a, grad.shape.h, grad.shape.w);
  grad_b = Tensor4(grad.shape.n, channels_b, grad.shape.h, grad.shape.w);
  const TIndex plane = grad.shape.h * grad.shape.w;
  const TIndex ca = channels_a * plane;
  const TIndex cb = channels_b * plane;
  for (TIndex n = 0; n < grad.shape.n; ++n) {
    grad_a.data.segment(n * ca, ca) = grad.data.segment(n * (ca + cb), ca);
    grad_b.data.segment(n * cb, cb) = grad.data.segment(n * (ca + cb) + ca, cb);
  }
}

void AdamState::init(const std::vector<ParamRef>& params) {
  step = 0;
  m.clear();
  v.clear();
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto& p : params) {
    m.push_back(Eigen::ArrayXd::Zero(p.value->size()));
    v.push_back(Eigen::ArrayXd::Zero(p.value->size()));
  }
}

void adam_step(const std::vector<ParamRef>& params, AdamState& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw Error("adam_step: state not initialized for this parameter set");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamRef& p = params[i];
    if (!p.grad || p.grad->size() != p.value->size())
      throw DimensionError("adam_step: gradient missing for " + p.name);
    const Eigen::ArrayXd& g = *p.grad;
    if (!g.isFinite().all())
      throw TrainingError("non-finite gradient in " + p.name, p.block);
    state.m[i] = state.cfg.beta1 * state.m[i] + (1.0 - state.cfg.beta1) * g;
    state.v[i] = state.cfg.beta2 * state.v[i] + (1.0 - state.cfg.beta2) * g.square();
    *p.value -= state.cfg.lr * (state.m[i] / bc1) / ((state.v[i] / bc2).sqrt() + state.cfg.eps);
  }
}

}  // namespace heatopt
