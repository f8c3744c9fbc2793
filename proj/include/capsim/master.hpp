#pragma once
// Density-matrix evolution under the dissipative generator.  The conserved
// combination of Zeeman projection and photon-number difference splits the
// Hilbert space into charge sectors; the coherent generator preserves each
// sector, and every collapse operator in the standard set shifts it by a fixed
// amount.  The density matrix therefore stays block sparse: only sector pairs
// reachable from the initial state's nonzero blocks are stored and evolved.

#include <vector>

#include "capsim/collapse.hpp"
#include "capsim/hamiltonian.hpp"
#include "capsim/ode.hpp"

namespace capsim {

struct MasterOptions {
  double t0 = 0.0;
  double t1 = 40.0;
  // Sample times for occupation output; filled with a uniform grid when empty.
  std::vector<double> sample_grid;
  IntegratorOptions ode;
  // Refuse to run above this Hilbert-space dimension (the density matrix and
  // its sector blocks grow quadratically).
  int dimension_guard = 1200;
  double trace_warn_tol = 1e-8;   // sets a warning flag in the result
  double trace_abort_tol = 1e-6;  // throws: the integration is untrustworthy
  bool keep_final_density = true;
};

struct MasterResult {
  std::vector<double> times;
  // times.size() x dimension; row t holds the populations diag(rho(t)).
  Eigen::MatrixXd occupations;
  // Full density matrix at t1 (empty when keep_final_density is false).
  Eigen::MatrixXcd final_density;
  double max_trace_drift = 0.0;
  bool trace_warning = false;
  IntegratorStats stats;
};

// Evolve rho0 under d(rho)/dt = M rho + rho M^dag + sum_c C_c rho C_c^dag,
// where M is the effective (no-jump) generator of `h`.  Every channel must
// shift the conserved charge uniformly (true of the standard set; analyzer
// sets mix modes of different charge and must first be replaced by their
// standard-set equivalent, which generates the identical dissipator).
MasterResult solve_master_equation(const Hamiltonian& h,
                                   const std::vector<CollapseChannel>& channels,
                                   const Eigen::MatrixXcd& rho0,
                                   const MasterOptions& opt);

// Pure-state convenience overload: rho0 = psi0 psi0^dag.
MasterResult solve_master_equation(const Hamiltonian& h,
                                   const std::vector<CollapseChannel>& channels,
                                   const VectorC& psi0, const MasterOptions& opt);

}  // namespace capsim
