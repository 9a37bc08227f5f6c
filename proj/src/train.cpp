#include "heatopt/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#if defined(__SSE3__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

#include "heatopt/field_io.hpp"
#include "heatopt/stencil.hpp"

namespace heatopt {

namespace {

// fixed per-purpose stream tags so init/layout/dropout draws never interleave
constexpr std::uint64_t kSeedInit = 0x696e6974;      // "init"
constexpr std::uint64_t kSeedLayout = 0x6c61796f;    // "layo"
constexpr std::uint64_t kSeedDropout = 0x64726f70;   // "drop"

constexpr double kPi = 3.14159265358979323846;

// Subnormal operands trap to microcode and cost a ~4x slowdown once residuals
// get small; flushing them to zero is safe here because training magnitudes
// sit far above the subnormal range. MXCSR is per-thread, restored on exit.
struct ScopedFlushToZero {
#if defined(__SSE3__)
  unsigned ftz = _MM_GET_FLUSH_ZERO_MODE();
  unsigned daz = _MM_GET_DENORMALS_ZERO_MODE();
  ScopedFlushToZero() {
    _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
    _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
  }
  ~ScopedFlushToZero() {
    _MM_SET_FLUSH_ZERO_MODE(ftz);
    _MM_SET_DENORMALS_ZERO_MODE(daz);
  }
#endif
};

}  // namespace

void TrainingConfig::validate() const {
  training_case.validate();
  net.validate();
  bc.validate();
  if (batch < 1) throw ConfigError("train.batch", "batch must be at least 1");
  if (!(lr > 0.0)) throw ConfigError("train.lr", "learning rate must be positive");
  if (epochs < 0) throw ConfigError("train.epochs", "epochs must be non-negative");
  if (history_every < 1) throw ConfigError("train.history_every", "cadence must be at least 1");
  if (checkpoint_every < 0)
    throw ConfigError("train.checkpoint_every", "cadence must be non-negative");
}

void TrainingHistory::write_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open history file for writing: " + path);
  f << "epoch,loss,rms_residual,seconds\n";
  for (const HistoryEntry& e : entries)
    f << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.rms_residual) << ','
      << format_double(e.seconds) << '\n';
  if (!f) throw IoError("failed while writing history file: " + path);
}

Batch make_batch(const CaseSpec& c, TIndex batch, Rng& rng, const BoundaryCondition& bc,
                 const std::optional<LayoutSpec>& fixed) {
  if (batch < 1) throw ConfigError("train.batch", "batch must be at least 1");
  const GridSpec grid = c.grid;
  Batch out;
  out.input = Tensor4(batch, 2, grid.ny, grid.nx);
  out.masks.reserve(batch);
  out.layouts.reserve(batch);
  for (TIndex s = 0; s < batch; ++s) {
    LayoutSpec layout = fixed ? *fixed : random_layout(c, rng);
    Mask mask = build_mask(layout, grid);
    auto bc_plane = out.input.plane(s, 0);  // starts zero
    apply_dirichlet_inplace(bc_plane, mask.values, bc);
    out.input.plane(s, 1) = mask.values;
    out.layouts.push_back(std::move(layout));
    out.masks.push_back(std::move(mask));
  }
  return out;
}

// The gradient pushes the scaled residual back through the symmetric stencil,
// then zeroes every Dirichlet cell — the overwrite blocks gradient flow there.
BatchLoss batch_physics_loss(Tensor4& output, const std::vector<Mask>& masks,
                             const BoundaryCondition& bc, const GridSpec& grid) {
  const TIndex b = output.shape.n;
  BatchLoss r;
  r.grad = Tensor4(output.shape);
  for (TIndex s = 0; s < b; ++s) {
    auto plane = output.plane(s, 0);
    apply_dirichlet_inplace(plane, masks[s].values, bc);
    TemperatureField field{grid, plane};
    const ResidualField res = physics_residual(field, masks[s]);
    const double n_valid = static_cast<double>(res.valid_count());
    r.loss += res.values.square().sum() / n_valid / static_cast<double>(b);
    const FieldArray scaled = res.values * (2.0 / (n_valid * static_cast<double>(b)));
    FieldArray g = laplacian_zero_padded(scaled);
    g *= masks[s].values;  // holes are overwritten: no gradient
    g.row(0).setZero();
    g.row(grid.ny - 1).setZero();
    g.col(0).setZero();
    g.col(grid.nx - 1).setZero();
    r.grad.plane(s, 0) = g;
  }
  return r;
}

TrainingRun train(const TrainingConfig& cfg) {
  cfg.validate();
  const ScopedFlushToZero ftz_guard;
  const GridSpec grid = cfg.training_case.grid;

  Rng init_rng(derive_seed(cfg.seed, kSeedInit));
  Rng layout_rng(derive_seed(cfg.seed, kSeedLayout));
  Rng dropout_rng(derive_seed(cfg.seed, kSeedDropout));

  TrainingRun run{NetworkParams::init(cfg.net, init_rng), {}};
  NetworkParams& net = run.params;

  std::vector<ParamRef> params = net.trainable();
  AdamState adam;
  adam.cfg.lr = cfg.lr;
  adam.init(params);

  const std::optional<LayoutSpec> fixed =
      cfg.fixed_layout ? std::optional(cfg.training_case.initial_layout()) : std::nullopt;

  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  for (long epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Batch batch = make_batch(cfg.training_case, cfg.batch, layout_rng, cfg.bc, fixed);
    net.zero_grads();
    ForwardCache cache;
    Tensor4 output = unet_forward(batch.input, net, true, &dropout_rng, &cache);
    BatchLoss bl = batch_physics_loss(output, batch.masks, cfg.bc, grid);
    if (!std::isfinite(bl.loss))
      throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                              "; last checkpoint retained",
                          -1);
    unet_backward(bl.grad, net, cache);
    // Hold the base rate for the first 60% of the run, then cosine-decay to 1%
    // of it. A constant rate stalls at an oscillation floor once the residual
    // is small, while decaying from the start freezes the slowly-learned
    // smooth error modes early.
    const double hold = 0.6 * static_cast<double>(cfg.epochs);
    if (static_cast<double>(epoch) > hold) {
      const double t =
          (static_cast<double>(epoch) - hold) / (static_cast<double>(cfg.epochs) - hold);
      adam.cfg.lr = cfg.lr * (0.01 + 0.99 * 0.5 * (1.0 + std::cos(t * kPi)));
    }
    adam_step(params, adam);

    if (epoch == 1 || epoch == cfg.epochs || epoch % cfg.history_every == 0) {
      run.history.entries.push_back({epoch, bl.loss, std::sqrt(bl.loss), elapsed()});
      if (cfg.log)
        (*cfg.log) << "epoch " << epoch << " loss " << bl.loss << " rms " << std::sqrt(bl.loss)
                   << '\n';
    }
    if (!cfg.checkpoint_path.empty() && cfg.checkpoint_every > 0 &&
        epoch % cfg.checkpoint_every == 0)
      save_checkpoint(cfg.checkpoint_path, net, grid);
  }

  if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, net, grid);
  return run;
}

TemperatureField predict(const NetworkParams& params, const LayoutSpec& layout,
                         const GridSpec& grid, const BoundaryCondition& bc) {
  grid.validate();
  bc.validate();
  const Mask mask = build_mask(layout, grid);
  Tensor4 input(1, 2, grid.ny, grid.nx);
  auto bc_plane = input.plane(0, 0);
  apply_dirichlet_inplace(bc_plane, mask.values, bc);
  input.plane(0, 1) = mask.values;

  const Tensor4 output = unet_infer(params, input);
  TemperatureField field{grid, output.plane(0, 0)};
  apply_dirichlet_inplace(field.values, mask.values, bc);
  return field;
}

}  // namespace heatopt
