#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "heatopt/field.hpp"
#include "heatopt/network.hpp"

namespace heatopt {

struct TrainingConfig {
  CaseSpec training_case;  // carries the grid and the random-layout family
  UNetConfig net;
  TIndex batch = 10;
  long epochs = 0;
  double lr = 0.001;
  std::uint64_t seed = 0;
  long history_every = 1;      // epoch 1 and the final epoch are always logged
  long checkpoint_every = 0;   // 0: only the final checkpoint
  bool fixed_layout = false;   // train on the case's initial layout every epoch
  BoundaryCondition bc;
  std::string checkpoint_path;  // empty: keep the parameters in memory only
  std::ostream* log = nullptr;

  void validate() const;
};

struct HistoryEntry {
  long epoch = 0;
  double loss = 0.0;          // batch-mean of per-sample mean squared residual
  double rms_residual = 0.0;  // sqrt(loss)
  double seconds = 0.0;       // wall time since training start
};

struct TrainingHistory {
  std::vector<HistoryEntry> entries;

  // CSV columns: epoch,loss,rms_residual,seconds. The seconds column is wall
  // time and is the one part of the file excluded from reproducibility
  // comparisons.
  void write_csv(const std::string& path) const;
};

struct Batch {
  Tensor4 input;  // (B, 2, ny, nx): channel 0 boundary-value field, channel 1 mask
  std::vector<Mask> masks;
  std::vector<LayoutSpec> layouts;
};

Batch make_batch(const CaseSpec& c, TIndex batch, Rng& rng, const BoundaryCondition& bc,
                 const std::optional<LayoutSpec>& fixed = std::nullopt);

struct BatchLoss {
  double loss = 0.0;
  Tensor4 grad;  // wrt the Dirichlet-overwritten output
};

// Loss: mean over the batch of each sample's mean squared 5-point Laplace
// residual over valid (interior, material) cells. Applies the Dirichlet
// overwrite to `output` in place first — the overwrite is part of the
// differentiated graph, so overwritten cells carry zero gradient.
BatchLoss batch_physics_loss(Tensor4& output, const std::vector<Mask>& masks,
                             const BoundaryCondition& bc, const GridSpec& grid);

struct TrainingRun {
  NetworkParams params;
  TrainingHistory history;
};

// Physics-driven loop: random layouts in, Laplace residual out, no solution
// data anywhere. The Dirichlet overwrite on the network output is part of the
// differentiated graph (overwritten cells carry zero gradient).
TrainingRun train(const TrainingConfig& cfg);

// Single eval-mode pass with the Dirichlet data re-applied to the result.
TemperatureField predict(const NetworkParams& params, const LayoutSpec& layout,
                         const GridSpec& grid, const BoundaryCondition& bc = {});

}  // namespace heatopt
