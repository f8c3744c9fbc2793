#pragma once
// Trajectory ensembles with deterministic reduction: per-trajectory seeds are
// derived from (base_seed, index) and results are committed in index order,
// so ensemble statistics are bit-identical for any worker count.

#include <cstdint>
#include <utility>
#include <vector>

#include "capsim/trajectory.hpp"

namespace capsim {

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::vector<JumpEvent> events;
  // Final-state probabilities by basis index, pruned below 1e-9.
  std::vector<std::pair<int, double>> final_probs;
  int degenerate_jumps = 0;
  int atom_sign = 0;
};

struct EnsembleOptions {
  int n_traj = 2000;
  int jobs = 1;
  TrajectoryOptions trajectory;
  VectorC target_state;         // optional: accumulate |<target|psi(t)>|^2
  bool keep_records = true;
  bool keep_occupations = true;
  // Sample an atomic parity-analyzer outcome from each final state and attach
  // it to the record (photon-photon-atom correlation runs).
  bool measure_atom = false;
  double atom_theta = 0.0;
};

struct EnsembleResult {
  std::vector<double> times;
  int n = 0;
  Eigen::MatrixXd mean;  // grid x dim mean occupations
  Eigen::MatrixXd m2;    // grid x dim sum of squared deviations
  Eigen::VectorXd target_mean, target_m2;  // per grid point (empty if no target)
  std::vector<TrajectoryRecord> records;
  long total_jumps = 0;
  int degenerate_jumps = 0;
  // Final states whose population outside the ground manifold exceeded the
  // analyzer's tolerance (only counted when atom outcomes are measured).
  int atom_residual_warnings = 0;

  // sqrt(m2 / (n (n-1))): standard error of each mean occupation.
  Eigen::MatrixXd stderr_of_mean() const;
  Eigen::VectorXd target_stderr() const;
};

// The target-overlap curve needs trajectory amplitudes, so it is accumulated
// from |<target|psi>|^2 at each sample time inside the run.
EnsembleResult run_ensemble(const Hamiltonian& h,
                            const std::vector<CollapseChannel>& channels,
                            const VectorC& psi0, std::uint64_t base_seed,
                            const EnsembleOptions& opt);

}  // namespace capsim
