#pragma once
// Single stochastic wave-function trajectories: deterministic no-jump
// evolution under the effective (norm-decaying) generator, jump times located
// where the squared norm crosses a uniformly drawn threshold, channels chosen
// proportionally to their instantaneous rates.

#include <cstdint>
#include <vector>

#include "capsim/collapse.hpp"
#include "capsim/hamiltonian.hpp"
#include "capsim/ode.hpp"
#include "capsim/rng.hpp"

namespace capsim {

struct JumpEvent {
  double t;
  int channel;  // index into the collapse channel set
};

struct TrajectoryOptions {
  double t0 = 0.0;
  double t1 = 40.0;
  std::vector<double> sample_grid;  // times at which occupations are recorded
  IntegratorOptions ode;
  double jump_norm_tol = 1e-9;        // |norm^2 - threshold| at the jump time
  double degenerate_rate_tol = 1e-15; // treat total rate below this as zero
  VectorC target_state;               // optional: record |<target|psi>|^2 too
};

struct TrajectoryResult {
  std::uint64_t seed = 0;
  std::vector<JumpEvent> events;
  VectorC final_state;           // normalized state at t1
  Eigen::MatrixXd occupations;   // sample_grid.size() x dim, normalized
  Eigen::VectorXd target_overlap;  // per sample time, when a target was given
  int degenerate_jumps = 0;      // threshold crossings with zero total rate
  int atom_sign = 0;             // +-1 once an atomic analyzer outcome is attached
};

TrajectoryResult run_trajectory(const Hamiltonian& h,
                                const std::vector<CollapseChannel>& channels,
                                const VectorC& psi0, std::uint64_t seed,
                                const TrajectoryOptions& opt);

}  // namespace capsim
