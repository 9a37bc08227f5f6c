#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>

#include "heatopt/gradcheck.hpp"
#include "heatopt/network.hpp"
#include "heatopt/rng.hpp"

using namespace heatopt;

namespace {

void fill_random(Tensor4& t, Rng& rng, double scale = 1.0) {
  for (TIndex i = 0; i < t.size(); ++i) t.data[i] = scale * (2.0 * rng.uniform() - 1.0);
}

UNetConfig small_config(int depth, TIndex base, bool batchnorm, double dropout = 0.0) {
  UNetConfig cfg;
  cfg.depth = depth;
  cfg.base_channels = base;
  cfg.channel_cap = 4 * base;
  cfg.batchnorm = batchnorm;
  cfg.dropout = dropout;
  return cfg;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("wiring obeys the halving/doubling shape law at every depth") {
  for (int depth = 1; depth <= 7; ++depth) {
    for (const TIndex base : {TIndex{2}, TIndex{8}}) {
      UNetConfig cfg = small_config(depth, base, true);
      cfg.channel_cap = 16;
      const std::vector<BlockSpec> wiring = build_wiring(cfg);
      REQUIRE(wiring.size() == static_cast<size_t>(2 * depth));

      // encoder chain is sequential
      CHECK(wiring[0].in_channels == cfg.input_channels);
      CHECK_FALSE(wiring[0].pre_activation);
      for (int i = 1; i < depth; ++i)
        CHECK(wiring[i].in_channels == wiring[i - 1].out_channels);

      // each decoder block consumes the previous decoder output plus the
      // mirrored encoder output; the innermost takes the bottleneck alone
      for (int j = 0; j < depth; ++j) {
        const BlockSpec& dec = wiring[depth + j];
        CHECK(dec.transposed);
        const TIndex expected =
            j == 0 ? wiring[depth - 1].out_channels
                   : wiring[depth + j - 1].out_channels + wiring[depth - 1 - j].out_channels;
        CHECK(dec.in_channels == expected);
      }
      CHECK(wiring.back().out_channels == cfg.output_channels);

      // batchnorm skips: raw-input block, bottleneck, output block
      if (cfg.batchnorm && depth >= 3) {
        CHECK_FALSE(wiring[0].normalized);
        CHECK_FALSE(wiring[depth - 1].normalized);
        CHECK_FALSE(wiring.back().normalized);
        CHECK(wiring[1].normalized);
        CHECK(wiring[depth].normalized);
      }
    }
  }
}

TEST_CASE("channel widths double then saturate at the cap") {
  UNetConfig cfg = small_config(6, 8, true);
  cfg.channel_cap = 32;
  CHECK(cfg.encoder_channels(0) == 8);
  CHECK(cfg.encoder_channels(1) == 16);
  CHECK(cfg.encoder_channels(2) == 32);
  CHECK(cfg.encoder_channels(5) == 32);
}

TEST_CASE("config validation rejects bad settings") {
  UNetConfig cfg;
  cfg.depth = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = UNetConfig{};
  cfg.kernel = 3;  // stride-2 exact halving needs kernel 4
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = UNetConfig{};
  cfg.dropout = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = UNetConfig{};
  cfg.base_channels = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("forward maps a (10, 2, 128, 128) batch to (10, 1, 128, 128)") {
  Rng rng(5);
  UNetConfig cfg = small_config(7, 2, true);
  NetworkParams params = NetworkParams::init(cfg, rng);
  Tensor4 input(10, 2, 128, 128);
  fill_random(input, rng);
  Rng drop(1);
  const Tensor4 out = unet_forward(input, params, true, &drop, nullptr);
  CHECK(out.shape == Shape4{10, 1, 128, 128});
}

TEST_CASE("forward rejects indivisible spatial sizes and wrong channel counts") {
  Rng rng(5);
  UNetConfig cfg = small_config(3, 2, false);
  NetworkParams params = NetworkParams::init(cfg, rng);
  Tensor4 bad_spatial(1, 2, 12, 12);  // 12 not divisible by 2^3
  CHECK_THROWS_AS(unet_infer(params, bad_spatial), DimensionError);
  Tensor4 bad_channels(1, 3, 16, 16);
  CHECK_THROWS_AS(unet_infer(params, bad_channels), DimensionError);
}

TEST_CASE("inference is deterministic and ignores training-only machinery") {
  Rng rng(19);
  UNetConfig cfg = small_config(4, 4, true, 0.5);
  NetworkParams params = NetworkParams::init(cfg, rng);
  Tensor4 input(2, 2, 32, 32);
  fill_random(input, rng);
  const Tensor4 a = unet_infer(params, input);
  const Tensor4 b = unet_infer(params, input);
  CHECK((a.data == b.data).all());  // bit-identical, dropout inactive
}

TEST_CASE("zeroed network propagates the output bias as a constant field") {
  Rng rng(29);
  UNetConfig cfg = small_config(3, 2, false);  // normalization disabled
  NetworkParams params = NetworkParams::init(cfg, rng);
  for (ConvBlockParams& b : params.blocks) {
    b.weight.data.setZero();
    b.bias.setZero();
  }
  params.blocks.back().bias[0] = 0.625;
  Tensor4 input(1, 2, 16, 16);
  fill_random(input, rng);
  const Tensor4 out = unet_infer(params, input);
  CHECK((out.data == 0.625).all());
}

TEST_CASE("initialization is deterministic per seed and bounded by fan-in") {
  const UNetConfig cfg = small_config(3, 4, true);
  Rng a(77), b(77), c(78);
  const NetworkParams pa = NetworkParams::init(cfg, a);
  const NetworkParams pb = NetworkParams::init(cfg, b);
  const NetworkParams pc = NetworkParams::init(cfg, c);
  bool all_equal = true;
  bool any_differs_from_c = false;
  for (size_t i = 0; i < pa.blocks.size(); ++i) {
    all_equal = all_equal && (pa.blocks[i].weight.data == pb.blocks[i].weight.data).all();
    any_differs_from_c =
        any_differs_from_c || !(pa.blocks[i].weight.data == pc.blocks[i].weight.data).all();

    const TIndex in_ch = pa.wiring[i].transposed ? pa.blocks[i].weight.shape.n
                                                 : pa.blocks[i].weight.shape.c;
    const double bound = std::sqrt(1.0 / static_cast<double>(in_ch * cfg.kernel * cfg.kernel));
    CHECK(pa.blocks[i].weight.data.abs().maxCoeff() <= bound);
    CHECK((pa.blocks[i].bias == 0.0).all());
  }
  CHECK(all_equal);
  CHECK(any_differs_from_c);
}

TEST_CASE("parameter count matches the sum over trainable arrays") {
  Rng rng(31);
  NetworkParams params = NetworkParams::init(small_config(3, 4, true), rng);
  long total = 0;
  for (const ParamRef& p : params.trainable()) total += static_cast<long>(p.value->size());
  CHECK(params.parameter_count() == total);
  CHECK(total > 0);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  Rng rng(83);
  UNetConfig cfg = small_config(4, 4, true, 0.25);
  NetworkParams params = NetworkParams::init(cfg, rng);
  // make the running statistics non-trivial so they are exercised too
  Tensor4 input(3, 2, 32, 32);
  fill_random(input, rng);
  Rng drop(2);
  unet_forward(input, params, true, &drop, nullptr);

  const GridSpec grid{32, 32};
  const auto path_a = temp_file("heatopt_ckpt_a.bin");
  const auto path_b = temp_file("heatopt_ckpt_b.bin");
  save_checkpoint(path_a.string(), params, grid);
  const LoadedCheckpoint loaded = load_checkpoint(path_a.string());
  save_checkpoint(path_b.string(), loaded.params, loaded.grid);

  CHECK(loaded.grid == grid);
  CHECK(loaded.params.config == cfg);
  REQUIRE(loaded.params.blocks.size() == params.blocks.size());
  for (size_t i = 0; i < params.blocks.size(); ++i) {
    CHECK((loaded.params.blocks[i].weight.data == params.blocks[i].weight.data).all());
    CHECK((loaded.params.blocks[i].bias == params.blocks[i].bias).all());
    if (params.wiring[i].normalized) {
      CHECK((loaded.params.blocks[i].bn_running_mean == params.blocks[i].bn_running_mean).all());
      CHECK((loaded.params.blocks[i].bn_running_var == params.blocks[i].bn_running_var).all());
    }
  }

  // the files themselves are byte-identical
  std::ifstream fa(path_a, std::ios::binary), fb(path_b, std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(fa)), {});
  const std::string bytes_b((std::istreambuf_iterator<char>(fb)), {});
  CHECK(bytes_a == bytes_b);
  CHECK_FALSE(bytes_a.empty());

  // inference agrees after the round-trip
  Tensor4 probe(1, 2, 32, 32);
  fill_random(probe, rng);
  CHECK((unet_infer(params, probe).data == unet_infer(loaded.params, probe).data).all());

  std::filesystem::remove(path_a);
  std::filesystem::remove(path_b);
  CHECK_THROWS_AS(load_checkpoint(path_a.string()), MissingArtifactError);
}

TEST_CASE("corrupted checkpoints are rejected") {
  Rng rng(89);
  NetworkParams params = NetworkParams::init(small_config(2, 2, false), rng);
  const auto path = temp_file("heatopt_ckpt_bad.bin");
  save_checkpoint(path.string(), params, GridSpec{16, 16});
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);  // clobber the magic
  }
  CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
  std::filesystem::remove(path);
}

TEST_CASE("analytic gradients match finite differences across block types") {
  Rng rng(97);

  // depth 1: strided conv into transposed conv; depth 2 adds the skip path
  // and (when enabled) a normalized decoder block
  const auto check_net = [&](int depth, bool batchnorm, uint64_t seed) {
    UNetConfig cfg = small_config(depth, 3, batchnorm);
    Rng init(seed);
    NetworkParams params = NetworkParams::init(cfg, init);
    Tensor4 input(2, 2, 8, 8);
    Rng data(seed + 1000);
    fill_random(input, data);
    Tensor4 coeffs;  // fixed projection makes the loss a scalar
    {
      const Tensor4 probe = unet_infer(params, input);
      coeffs = Tensor4(probe.shape);
      fill_random(coeffs, data);
      // keep the loss small: a bias feeding batch normalization has an exactly
      // zero gradient, and its central difference measures pure rounding noise
      // proportional to the loss magnitude
      coeffs.data *= 0.05;
    }

    const auto loss = [&]() {
      ForwardCache cache;
      const Tensor4 out = unet_forward(input, params, true, nullptr, &cache);
      return 0.5 * (out.data * coeffs.data).square().sum();
    };
    const auto compute = [&]() {
      params.zero_grads();
      ForwardCache cache;
      const Tensor4 out = unet_forward(input, params, true, nullptr, &cache);
      Tensor4 grad(out.shape);
      grad.data = (out.data * coeffs.data) * coeffs.data;
      unet_backward(grad, params, cache);
    };

    // step small enough that the probes stay on one side of rectifier kinks
    Rng probe_rng(seed + 5);
    const GradCheckReport report =
        grad_check(loss, compute, params.trainable(), 1e-5, 6, probe_rng);
    CHECK(report.checked > 0);
    CHECK(report.max_rel_error <= 1e-4);
  };

  // batchnorm updates running statistics inside the forward; with batch
  // statistics recomputed each call the loss stays a pure function of the
  // parameters, so finite differences remain valid
  for (uint64_t seed = 0; seed < 10; ++seed) check_net(1, false, 100 + seed);
  for (uint64_t seed = 0; seed < 10; ++seed) check_net(2, true, 200 + seed);
}

TEST_CASE("deeper network with skips also passes the gradient check") {
  UNetConfig cfg = small_config(2, 2, true);
  Rng init(301);
  NetworkParams params = NetworkParams::init(cfg, init);
  Tensor4 input(2, 2, 8, 8);
  Rng data(302);
  fill_random(input, data);

  // the 0.01 scale keeps rounding noise in the finite differences of the
  // batch-normalized block's cancelled bias below the checker's relative floor
  const auto loss = [&]() {
    ForwardCache cache;
    const Tensor4 out = unet_forward(input, params, true, nullptr, &cache);
    return 0.01 * out.data.square().sum();
  };
  const auto compute = [&]() {
    params.zero_grads();
    ForwardCache cache;
    const Tensor4 out = unet_forward(input, params, true, nullptr, &cache);
    Tensor4 grad(out.shape);
    grad.data = 0.02 * out.data;
    unet_backward(grad, params, cache);
  };

  Rng probe_rng(303);
  const GradCheckReport report = grad_check(loss, compute, params.trainable(), 1e-5, 8, probe_rng);
  CHECK(report.max_rel_error <= 1e-4);
}
