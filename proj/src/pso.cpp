#include "heatopt/pso.hpp"

#include <algorithm>
#include <cmath>

#include "heatopt/train.hpp"

namespace heatopt {

Swarm init_swarm(const Bounds& bounds, const ObjectiveFn& f, const SwarmConfig& cfg, Rng& rng,
                 const std::optional<Eigen::ArrayXd>& seed_position) {
  cfg.validate();
  const int d = bounds.dimension();
  if (d < 1) throw ConfigError("swarm", "empty parameter space");
  if (seed_position && seed_position->size() != d)
    throw DimensionError("init_swarm: seed position dimension mismatch");

  Swarm swarm;
  swarm.particles.resize(cfg.particles);
  for (int p = 0; p < cfg.particles; ++p) {
    Particle& part = swarm.particles[p];
    part.position = Eigen::ArrayXd(d);
    if (p == 0 && seed_position) {
      part.position = *seed_position;
    } else {
      for (int i = 0; i < d; ++i) part.position[i] = rng.uniform(bounds.lo[i], bounds.hi[i]);
    }
    part.position = part.position.max(bounds.lo).min(bounds.hi);
    part.velocity = Eigen::ArrayXd::Zero(d);
    part.best_position = part.position;
    part.best_value = f(part.position);
  }
  swarm.best_value = swarm.particles[0].best_value;
  swarm.best_position = swarm.particles[0].best_position;
  for (const Particle& part : swarm.particles)
    if (part.best_value < swarm.best_value) {
      swarm.best_value = part.best_value;
      swarm.best_position = part.best_position;
    }
  return swarm;
}

namespace {

double quantize_component(double v) {
  static constexpr double quanta[] = {0.0, 1.0, 5.0, 10.0};
  double best = 0.0;
  double best_dist = std::abs(v);
  for (const double q : quanta) {
    for (const double signed_q : {q, -q}) {
      const double dist = std::abs(v - signed_q);
      if (dist < best_dist) {
        best_dist = dist;
        best = signed_q;
      }
    }
  }
  return best;
}

}  // namespace

void step_swarm(Swarm& swarm, const Bounds& bounds, const ObjectiveFn& f, const SwarmConfig& cfg,
                Rng& rng) {
  const int d = bounds.dimension();
  const Eigen::ArrayXd vcap = bounds.velocity_cap();
  for (Particle& part : swarm.particles) {
    for (int i = 0; i < d; ++i) {
      const double r1 = rng.uniform();
      const double r2 = rng.uniform();
      double v = cfg.inertia * part.velocity[i] +
                 cfg.cognitive * r1 * (part.best_position[i] - part.position[i]) +
                 cfg.social * r2 * (swarm.best_position[i] - part.position[i]);
      v = std::clamp(v, -vcap[i], vcap[i]);
      if (cfg.quantize_moves) v = quantize_component(v);
      part.velocity[i] = v;
    }
    part.position = (part.position + part.velocity).max(bounds.lo).min(bounds.hi);
    const double value = f(part.position);
    if (value < part.best_value) {
      part.best_value = value;
      part.best_position = part.position;
    }
  }
  // synchronous global-best reduction, fixed particle order
  for (const Particle& part : swarm.particles)
    if (part.best_value < swarm.best_value) {
      swarm.best_value = part.best_value;
      swarm.best_position = part.best_position;
    }
  swarm.iteration += 1;
}

Eigen::ArrayXd encode(const LayoutSpec& layout, const CaseSpec& c) {
  c.validate();
  if (static_cast<int>(layout.holes.size()) != c.hole_count)
    throw DimensionError("encode: layout has " + std::to_string(layout.holes.size()) +
                         " holes, case expects " + std::to_string(c.hole_count));
  Eigen::ArrayXd pos(c.dimension());
  if (c.variable_size) {
    pos[0] = static_cast<double>(layout.holes[0].w);
  } else {
    for (int i = 0; i < c.hole_count; ++i) {
      pos[2 * i] = static_cast<double>(layout.holes[i].cx - c.center_x);
      pos[2 * i + 1] = static_cast<double>(layout.holes[i].cy - c.center_y);
    }
  }
  return pos;
}

LayoutSpec decode(const Eigen::ArrayXd& position, const CaseSpec& c) {
  c.validate();
  if (position.size() != c.dimension())
    throw DimensionError("decode: position has dimension " + std::to_string(position.size()) +
                         ", case expects " + std::to_string(c.dimension()));
  LayoutSpec layout;
  if (c.variable_size) {
    const int w = std::clamp(static_cast<int>(std::lround(position[0])), c.side_min, c.side_max);
    layout.holes.push_back({c.center_x, c.center_y, w, derived_height(c.area, w)});
  } else {
    for (int i = 0; i < c.hole_count; ++i) {
      const int dx = std::clamp(static_cast<int>(std::lround(position[2 * i])), -c.offset_range,
                                c.offset_range);
      const int dy = std::clamp(static_cast<int>(std::lround(position[2 * i + 1])),
                                -c.offset_range, c.offset_range);
      layout.holes.push_back({c.center_x + dx, c.center_y + dy, c.hole_w, c.hole_h});
    }
  }
  return layout;
}

Bounds case_bounds(const CaseSpec& c) {
  c.validate();
  const int d = c.dimension();
  Bounds b{Eigen::ArrayXd(d), Eigen::ArrayXd(d)};
  if (c.variable_size) {
    b.lo[0] = static_cast<double>(c.side_min);
    b.hi[0] = static_cast<double>(c.side_max);
  } else {
    b.lo.setConstant(-static_cast<double>(c.offset_range));
    b.hi.setConstant(static_cast<double>(c.offset_range));
  }
  return b;
}

Objective Objective::oracle(const CaseSpec& c, const SolverConfig& solver,
                            const BoundaryCondition& bc) {
  solver.validate();
  Objective o;
  o.case_ = c;
  o.solver_ = solver;
  o.bc_ = bc;
  return o;
}

Objective Objective::surrogate(const CaseSpec& c, const NetworkParams* net,
                               const BoundaryCondition& bc) {
  if (!net) throw MissingArtifactError("surrogate objective needs a trained network");
  Objective o;
  o.case_ = c;
  o.bc_ = bc;
  o.net_ = net;
  return o;
}

double Objective::evaluate(const LayoutSpec& layout) const {
  std::vector<int> key;
  key.reserve(layout.holes.size() * 4);
  for (const HoleSpec& h : layout.holes) {
    key.push_back(h.cx);
    key.push_back(h.cy);
    key.push_back(h.w);
    key.push_back(h.h);
  }
  if (const auto it = memo_.find(key); it != memo_.end()) return it->second;

  const Mask mask = build_mask(layout, case_.grid);
  double value;
  if (net_) {
    value = mean_temperature(predict(*net_, layout, case_.grid, bc_), mask);
  } else {
    value = mean_temperature(solve_steady(mask, bc_, solver_).field, mask);
  }
  evaluations_ += 1;
  memo_[key] = value;
  return value;
}

double Objective::operator()(const Eigen::ArrayXd& position) const {
  return evaluate(decode(position, case_));
}

OptimizationResult optimize(const Objective& objective, const SwarmConfig& cfg,
                            std::vector<double>* partial_trace) {
  cfg.validate();
  const CaseSpec& c = objective.study_case();
  const Bounds bounds = case_bounds(c);
  Rng rng(derive_seed(cfg.seed, 0x70736f));  // dedicated swarm stream

  std::vector<double> local_trace;
  std::vector<double>& trace = partial_trace ? *partial_trace : local_trace;
  trace.clear();

  const Eigen::ArrayXd start = encode(c.initial_layout(), c);
  Swarm swarm = init_swarm(bounds, std::cref(objective), cfg, rng, start);
  trace.push_back(swarm.best_value);
  for (long it = 0; it < cfg.iterations; ++it) {
    step_swarm(swarm, bounds, std::cref(objective), cfg, rng);
    trace.push_back(swarm.best_value);
  }

  OptimizationResult result;
  result.best_layout = decode(swarm.best_position, c);
  result.best_value = swarm.best_value;
  result.trace = trace;
  result.seed = cfg.seed;
  result.evaluations = objective.evaluation_count();
  return result;
}

}  // namespace heatopt
