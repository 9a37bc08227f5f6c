#include "heatopt/network.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts are unsupported");

namespace heatopt {

void UNetConfig::validate() const {
  if (depth < 1 || depth > 12)
    throw ConfigError("net.depth", "depth must be in [1, 12], got " + std::to_string(depth));
  if (kernel != 4)
    throw ConfigError("net.kernel",
                      "the stride-2 halving/doubling architecture requires kernel 4");
  if (input_channels < 1 || output_channels < 1)
    throw ConfigError("net.channels", "channel counts must be positive");
  if (base_channels < 1 || channel_cap < base_channels)
    throw ConfigError("net.base_channels", "need 1 <= base_channels <= channel_cap");
  if (dropout < 0.0 || dropout >= 1.0)
    throw ConfigError("net.dropout", "dropout must be in [0, 1)");
  if (!(bn_momentum > 0.0 && bn_momentum < 1.0))
    throw ConfigError("net.bn_momentum", "momentum must be in (0, 1)");
  if (!(bn_eps > 0.0)) throw ConfigError("net.bn_eps", "eps must be positive");
}

std::vector<BlockSpec> build_wiring(const UNetConfig& cfg) {
  cfg.validate();
  const int d = cfg.depth;
  std::vector<BlockSpec> wiring;
  wiring.reserve(2 * d);

  for (int i = 0; i < d; ++i) {
    BlockSpec s;
    s.transposed = false;
    s.in_channels = i == 0 ? cfg.input_channels : cfg.encoder_channels(i - 1);
    s.out_channels = cfg.encoder_channels(i);
    s.pre_activation = i > 0;
    s.activation_slope = cfg.leaky_slope;
    // batch statistics degenerate on the raw input block and at the 1x1 bottleneck
    s.normalized = cfg.batchnorm && i > 0 && i < d - 1;
    s.dropout = cfg.dropout > 0.0;
    wiring.push_back(s);
  }
  for (int j = 0; j < d; ++j) {
    const bool output_block = j == d - 1;
    BlockSpec s;
    s.transposed = true;
    s.in_channels = j == 0 ? cfg.encoder_channels(d - 1)
                           : wiring[d + j - 1].out_channels + cfg.encoder_channels(d - 1 - j);
    s.out_channels = output_block ? cfg.output_channels : cfg.encoder_channels(d - 2 - j);
    s.pre_activation = true;
    s.activation_slope = 0.0;
    s.normalized = cfg.batchnorm && !output_block;
    s.dropout = cfg.dropout > 0.0 && !output_block;
    wiring.push_back(s);
  }

  // Independent walk of the table re-deriving every block's input channels;
  // catches any inconsistency between schedule and skip wiring.
  TIndex carried = cfg.input_channels;
  for (int i = 0; i < d; ++i) {
    if (wiring[i].in_channels != carried)
      throw DimensionError("encoder block " + std::to_string(i) + " expects " +
                           std::to_string(wiring[i].in_channels) + " channels, gets " +
                           std::to_string(carried));
    carried = wiring[i].out_channels;
  }
  for (int j = 0; j < d; ++j) {
    const TIndex incoming =
        j == 0 ? carried : carried + wiring[d - 1 - j].out_channels;  // + skip from encoder
    if (wiring[d + j].in_channels != incoming)
      throw DimensionError("decoder block " + std::to_string(j) + " expects " +
                           std::to_string(wiring[d + j].in_channels) + " channels, gets " +
                           std::to_string(incoming));
    carried = wiring[d + j].out_channels;
  }
  if (carried != cfg.output_channels) throw DimensionError("network output channels inconsistent");
  return wiring;
}

namespace {

ConvBlockParams allocate_block(const BlockSpec& spec, TIndex k) {
  ConvBlockParams p;
  p.weight = spec.transposed ? Tensor4(spec.in_channels, spec.out_channels, k, k)
                             : Tensor4(spec.out_channels, spec.in_channels, k, k);
  p.weight.ensure_grad();
  p.bias = Eigen::ArrayXd::Zero(spec.out_channels);
  p.bias_grad = Eigen::ArrayXd::Zero(spec.out_channels);
  if (spec.normalized) {
    p.bn_scale = Eigen::ArrayXd::Ones(spec.out_channels);
    p.bn_shift = Eigen::ArrayXd::Zero(spec.out_channels);
    p.bn_running_mean = Eigen::ArrayXd::Zero(spec.out_channels);
    p.bn_running_var = Eigen::ArrayXd::Ones(spec.out_channels);
    p.bn_scale_grad = Eigen::ArrayXd::Zero(spec.out_channels);
    p.bn_shift_grad = Eigen::ArrayXd::Zero(spec.out_channels);
  }
  return p;
}

}  // namespace

NetworkParams NetworkParams::init(const UNetConfig& cfg, Rng& rng) {
  NetworkParams net;
  net.config = cfg;
  net.wiring = build_wiring(cfg);
  net.blocks.reserve(net.wiring.size());
  for (const BlockSpec& spec : net.wiring) {
    ConvBlockParams p = allocate_block(spec, cfg.kernel);
    const double bound =
        std::sqrt(1.0 / static_cast<double>(spec.in_channels * cfg.kernel * cfg.kernel));
    for (TIndex i = 0; i < p.weight.size(); ++i) p.weight.data[i] = rng.uniform(-bound, bound);
    net.blocks.push_back(std::move(p));
  }
  return net;
}

std::vector<ParamRef> NetworkParams::trainable() {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    ConvBlockParams& b = blocks[i];
    const int bi = static_cast<int>(i);
    const std::string prefix = "block" + std::to_string(i) + ".";
    b.weight.ensure_grad();
    out.push_back({&b.weight.data, &b.weight.grad, prefix + "weight", bi});
    out.push_back({&b.bias, &b.bias_grad, prefix + "bias", bi});
    if (wiring[i].normalized) {
      out.push_back({&b.bn_scale, &b.bn_scale_grad, prefix + "bn_scale", bi});
      out.push_back({&b.bn_shift, &b.bn_shift_grad, prefix + "bn_shift", bi});
    }
  }
  return out;
}

void NetworkParams::zero_grads() {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    ConvBlockParams& b = blocks[i];
    b.weight.zero_grad();
    b.bias_grad.setZero();
    if (wiring[i].normalized) {
      b.bn_scale_grad.setZero();
      b.bn_shift_grad.setZero();
    }
  }
}

long NetworkParams::parameter_count() const {
  long n = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    n += static_cast<long>(blocks[i].weight.size() + blocks[i].bias.size());
    if (wiring[i].normalized)
      n += static_cast<long>(blocks[i].bn_scale.size() + blocks[i].bn_shift.size());
  }
  return n;
}

namespace {

Tensor4 run_block(const BlockSpec& spec, ConvBlockParams& p, const Tensor4& x,
                  const UNetConfig& cfg, bool training, Rng* dropout_rng, BlockCache* cache) {
  if (cache) cache->input = x;
  Tensor4 activated;
  const Tensor4* conv_in = &x;
  if (spec.pre_activation) {
    activated = leaky_relu_forward(x, spec.activation_slope);
    conv_in = &activated;
    if (cache) cache->activated = activated;
  }
  Tensor4 z = spec.transposed ? convt2d_forward(*conv_in, p.weight, p.bias, 2, 1)
                              : conv2d_forward(*conv_in, p.weight, p.bias, 2, 1);
  if (spec.normalized)
    z = batchnorm_forward(z, p.bn_scale, p.bn_shift, p.bn_running_mean, p.bn_running_var,
                          training, cfg.bn_momentum, cfg.bn_eps, cache ? &cache->bn : nullptr);
  if (spec.dropout && training) {
    if (!dropout_rng) throw Error("unet_forward: dropout is enabled but no rng was provided");
    Tensor4 mask;
    z = dropout_forward(z, cfg.dropout, true, *dropout_rng, cache ? &mask : nullptr);
    if (cache) cache->dropout_mask = std::move(mask);
  }
  return z;
}

// Reverse of run_block; accumulates parameter gradients, returns grad wrt input.
Tensor4 block_backward(const BlockSpec& spec, ConvBlockParams& p, const BlockCache& cache,
                       Tensor4 g) {
  if (cache.dropout_mask.size() == g.size() && spec.dropout)
    g = dropout_backward(g, cache.dropout_mask);
  if (spec.normalized)
    g = batchnorm_backward(g, cache.bn, p.bn_scale, p.bn_scale_grad, p.bn_shift_grad);
  const Tensor4& conv_in = spec.pre_activation ? cache.activated : cache.input;
  Tensor4 gi = spec.transposed
                   ? convt2d_backward(g, conv_in, p.weight, p.weight.grad, p.bias_grad, 2, 1)
                   : conv2d_backward(g, conv_in, p.weight, p.weight.grad, p.bias_grad, 2, 1);
  if (spec.pre_activation) gi = leaky_relu_backward(gi, cache.input, spec.activation_slope);
  return gi;
}

void accumulate(Tensor4& target, Tensor4&& g) {
  if (target.size() == 0)
    target = std::move(g);
  else
    target.data += g.data;
}

}  // namespace

Tensor4 unet_forward(const Tensor4& input, NetworkParams& params, bool training,
                     Rng* dropout_rng, ForwardCache* cache) {
  const UNetConfig& cfg = params.config;
  const int d = cfg.depth;
  if (input.shape.c != cfg.input_channels)
    throw DimensionError("unet_forward: expected " + std::to_string(cfg.input_channels) +
                         " input channels, got " + std::to_string(input.shape.c));
  const TIndex div = TIndex{1} << d;
  if (input.shape.h % div != 0 || input.shape.w % div != 0 || input.shape.h < div ||
      input.shape.w < div)
    throw DimensionError("unet_forward: spatial size " + std::to_string(input.shape.h) + "x" +
                         std::to_string(input.shape.w) + " is not divisible by 2^depth = " +
                         std::to_string(div));
  if (params.blocks.size() != static_cast<std::size_t>(2 * d))
    throw DimensionError("unet_forward: parameter table does not match depth");

  if (cache) cache->blocks.assign(2 * d, BlockCache{});
  std::vector<Tensor4> enc(d);
  Tensor4 cur = input;
  for (int i = 0; i < d; ++i) {
    cur = run_block(params.wiring[i], params.blocks[i], cur, cfg, training, dropout_rng,
                    cache ? &cache->blocks[i] : nullptr);
    enc[i] = cur;
  }
  for (int j = 0; j < d; ++j) {
    const int bi = d + j;
    const Tensor4 block_in = j == 0 ? std::move(cur) : concat_channels(cur, enc[d - 1 - j]);
    cur = run_block(params.wiring[bi], params.blocks[bi], block_in, cfg, training, dropout_rng,
                    cache ? &cache->blocks[bi] : nullptr);
  }
  return cur;
}

Tensor4 unet_infer(const NetworkParams& params, const Tensor4& input) {
  // eval mode touches no mutable state (running statistics are only read)
  return unet_forward(input, const_cast<NetworkParams&>(params), false, nullptr, nullptr);
}

void unet_backward(const Tensor4& grad_output, NetworkParams& params, const ForwardCache& cache) {
  const int d = params.config.depth;
  if (cache.blocks.size() != static_cast<std::size_t>(2 * d))
    throw DimensionError("unet_backward: cache does not match depth (was the forward recorded?)");

  std::vector<Tensor4> enc_grad(d);
  Tensor4 g = grad_output;
  for (int j = d - 1; j >= 0; --j) {
    const int bi = d + j;
    Tensor4 gi = block_backward(params.wiring[bi], params.blocks[bi], cache.blocks[bi],
                                std::move(g));
    if (j == 0) {
      accumulate(enc_grad[d - 1], std::move(gi));
    } else {
      Tensor4 to_prev, to_skip;
      split_channels(gi, params.wiring[bi - 1].out_channels, to_prev, to_skip);
      accumulate(enc_grad[d - 1 - j], std::move(to_skip));
      g = std::move(to_prev);
    }
  }
  Tensor4 carry;
  for (int i = d - 1; i >= 0; --i) {
    Tensor4 total = std::move(enc_grad[i]);
    if (carry.size() > 0) accumulate(total, std::move(carry));
    carry = block_backward(params.wiring[i], params.blocks[i], cache.blocks[i], std::move(total));
  }
  // carry now holds the gradient wrt the network input; nothing consumes it
}

namespace {

constexpr char kMagic[8] = {'H', 'E', 'A', 'T', 'N', 'E', 'T', '1'};

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw IoError("checkpoint: unexpected end of file");
  return v;
}

void write_array(std::ofstream& f, const Eigen::ArrayXd& a) {
  write_pod<std::uint32_t>(f, 1);
  write_pod<std::int64_t>(f, static_cast<std::int64_t>(a.size()));
  f.write(reinterpret_cast<const char*>(a.data()), a.size() * sizeof(double));
}

void write_absent(std::ofstream& f) { write_pod<std::uint32_t>(f, 0); }

void write_tensor(std::ofstream& f, const Tensor4& t) {
  write_pod<std::uint32_t>(f, 4);
  write_pod<std::int64_t>(f, t.shape.n);
  write_pod<std::int64_t>(f, t.shape.c);
  write_pod<std::int64_t>(f, t.shape.h);
  write_pod<std::int64_t>(f, t.shape.w);
  f.write(reinterpret_cast<const char*>(t.data.data()), t.size() * sizeof(double));
}

Eigen::ArrayXd read_array(std::ifstream& f, std::int64_t expected) {
  const auto rank = read_pod<std::uint32_t>(f);
  if (rank != 1) throw IoError("checkpoint: expected a vector buffer");
  const auto n = read_pod<std::int64_t>(f);
  if (n != expected)
    throw DimensionError("checkpoint: buffer length " + std::to_string(n) + ", expected " +
                         std::to_string(expected));
  Eigen::ArrayXd a(n);
  f.read(reinterpret_cast<char*>(a.data()), n * sizeof(double));
  if (!f) throw IoError("checkpoint: unexpected end of file");
  return a;
}

void read_absent(std::ifstream& f) {
  if (read_pod<std::uint32_t>(f) != 0) throw IoError("checkpoint: unexpected buffer present");
}

Tensor4 read_tensor(std::ifstream& f, const Shape4& expected) {
  const auto rank = read_pod<std::uint32_t>(f);
  if (rank != 4) throw IoError("checkpoint: expected a rank-4 buffer");
  Shape4 s{read_pod<std::int64_t>(f), read_pod<std::int64_t>(f), read_pod<std::int64_t>(f),
           read_pod<std::int64_t>(f)};
  if (!(s == expected))
    throw DimensionError("checkpoint: weight shape " + s.str() + ", expected " + expected.str());
  Tensor4 t(s);
  f.read(reinterpret_cast<char*>(t.data.data()), t.size() * sizeof(double));
  if (!f) throw IoError("checkpoint: unexpected end of file");
  return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const NetworkParams& params, const GridSpec& grid) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);
  f.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(f, 1);  // format version
  const UNetConfig& c = params.config;
  write_pod<std::int32_t>(f, c.depth);
  write_pod<std::int64_t>(f, c.input_channels);
  write_pod<std::int64_t>(f, c.output_channels);
  write_pod<std::int64_t>(f, c.base_channels);
  write_pod<std::int64_t>(f, c.channel_cap);
  write_pod<std::int64_t>(f, c.kernel);
  write_pod<double>(f, c.dropout);
  write_pod<double>(f, c.bn_momentum);
  write_pod<double>(f, c.bn_eps);
  write_pod<double>(f, c.leaky_slope);
  write_pod<std::uint8_t>(f, c.batchnorm ? 1 : 0);
  write_pod<std::int32_t>(f, grid.nx);
  write_pod<std::int32_t>(f, grid.ny);
  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(params.blocks.size()));
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    const ConvBlockParams& b = params.blocks[i];
    write_tensor(f, b.weight);
    write_array(f, b.bias);
    if (params.wiring[i].normalized) {
      write_array(f, b.bn_scale);
      write_array(f, b.bn_shift);
      write_array(f, b.bn_running_mean);
      write_array(f, b.bn_running_var);
    } else {
      for (int k = 0; k < 4; ++k) write_absent(f);
    }
  }
  if (!f) throw IoError("failed while writing checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingArtifactError("checkpoint not found: " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a checkpoint file: " + path);
  const auto version = read_pod<std::uint32_t>(f);
  if (version != 1) throw IoError("unsupported checkpoint version " + std::to_string(version));

  UNetConfig c;
  c.depth = read_pod<std::int32_t>(f);
  c.input_channels = read_pod<std::int64_t>(f);
  c.output_channels = read_pod<std::int64_t>(f);
  c.base_channels = read_pod<std::int64_t>(f);
  c.channel_cap = read_pod<std::int64_t>(f);
  c.kernel = read_pod<std::int64_t>(f);
  c.dropout = read_pod<double>(f);
  c.bn_momentum = read_pod<double>(f);
  c.bn_eps = read_pod<double>(f);
  c.leaky_slope = read_pod<double>(f);
  c.batchnorm = read_pod<std::uint8_t>(f) != 0;
  GridSpec grid;
  grid.nx = read_pod<std::int32_t>(f);
  grid.ny = read_pod<std::int32_t>(f);

  LoadedCheckpoint out;
  out.grid = grid;
  out.params.config = c;
  out.params.wiring = build_wiring(c);
  const auto block_count = read_pod<std::uint32_t>(f);
  if (block_count != out.params.wiring.size())
    throw DimensionError("checkpoint: block count does not match config");
  out.params.blocks.reserve(block_count);
  for (std::size_t i = 0; i < out.params.wiring.size(); ++i) {
    const BlockSpec& spec = out.params.wiring[i];
    ConvBlockParams b = allocate_block(spec, c.kernel);
    b.weight = read_tensor(f, b.weight.shape);
    b.weight.ensure_grad();
    b.bias = read_array(f, spec.out_channels);
    if (spec.normalized) {
      b.bn_scale = read_array(f, spec.out_channels);
      b.bn_shift = read_array(f, spec.out_channels);
      b.bn_running_mean = read_array(f, spec.out_channels);
      b.bn_running_var = read_array(f, spec.out_channels);
    } else {
      for (int k = 0; k < 4; ++k) read_absent(f);
    }
    out.params.blocks.push_back(std::move(b));
  }
  return out;
}

}  // namespace heatopt
