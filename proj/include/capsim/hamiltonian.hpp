#pragma once
// Time-dependent generator of the dissipative atom-cavity dynamics in the
// rotating frame: detuning diagonal, pulsed cavity coupling and pump terms,
// and the anti-Hermitian loss diagonal used by no-jump evolution.

#include <memory>
#include <vector>

#include "capsim/operators.hpp"
#include "capsim/pulse.hpp"

namespace capsim {

struct SystemParams {
  double F_ground = 3.0;
  double F_excited = 3.0;
  int n_max = 7;
  double delta_plus = 0.0;   // sigma+ mode detuning (units of the atomic linewidth)
  double delta_minus = 0.0;  // sigma- mode detuning
  double kappa = 0.0;        // cavity field decay rate
  double gamma = 1.0;        // atomic linewidth (time unit)
  GaussianPulse g{25.0, 17.0, 10.0};      // cavity coupling envelope
  GaussianPulse omega{50.0, 23.0, 10.0};  // pump Rabi envelope
  bool single_polarization = false;       // drop the sigma+ coupling term
};

class Hamiltonian {
 public:
  explicit Hamiltonian(const SystemParams& params);

  const SystemParams& params() const { return params_; }
  const SystemOperators& ops() const { return *ops_; }
  const Basis& basis() const { return ops_->basis; }
  int dimension() const { return ops_->basis.dimension(); }

  double g(double t) const { return params_.g(t); }
  double omega(double t) const { return params_.omega(t); }

  // delta+ n+ + delta- n- (real diagonal of the Hermitian part).
  const Eigen::VectorXd& detuning_diagonal() const { return detuning_; }
  // kappa (n+ + n-) + gamma/2 sum_sigma A^dag A (decay diagonal).
  const Eigen::VectorXd& loss_diagonal() const { return loss_; }
  const SparseC& coupling_structure() const {
    return params_.single_polarization ? ops_->coupling_structure_single
                                       : ops_->coupling_structure;
  }

  // Hermitian interaction generator at fixed amplitudes:
  //   H = delta+ N+ + delta- N- - i g G + i Omega P.
  SparseC interaction_at(double g_value, double omega_value) const;
  SparseC interaction(double t) const { return interaction_at(g(t), omega(t)); }

  // out = -i H_eff(t) psi with H_eff = H(t) - i * loss_diagonal.
  void apply_effective(double t, const VectorC& psi, VectorC& out) const;

  // Indices reachable from `start` through the combined sparsity pattern of
  // the coupling, pump, and (trivially diagonal) detuning terms.
  std::vector<int> reachable_subspace(int start) const;

 private:
  SystemParams params_;
  std::shared_ptr<const SystemOperators> ops_;
  Eigen::VectorXd detuning_, loss_;
};

}  // namespace capsim
