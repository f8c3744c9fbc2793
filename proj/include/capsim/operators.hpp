#pragma once
// Sparse operators on the atom + two-mode basis: photon ladder operators,
// atomic lowering operators weighted by dipole coupling coefficients, and the
// real structure matrices entering the interaction generator.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <complex>

#include "capsim/basis.hpp"

namespace capsim {

using Cplx = std::complex<double>;
using SparseC = Eigen::SparseMatrix<Cplx>;
using VectorC = Eigen::VectorXcd;

struct SystemOperators {
  Basis basis;

  SparseC a_plus, a_minus;           // photon annihilation, sigma+/- mode
  Eigen::VectorXd n_plus, n_minus;   // photon number diagonals
  // Atomic lowering operators A_sigma = sum_m <F_g m; 1 sigma|F_e m+sigma>
  // |g_m><e_{m+sigma}|, indexed by sigma+1 (0 -> sigma=-1, 1 -> 0, 2 -> +1).
  std::array<SparseC, 3> lowering;

  // G = a+^dag A_{+1} - A_{+1}^dag a+ + a-^dag A_{-1} - A_{-1}^dag a-
  // (real antisymmetric; the cavity term of the generator is -i g(t) G).
  SparseC coupling_structure;
  // Same with the sigma+ mode terms dropped (single-polarization model).
  SparseC coupling_structure_single;
  // P = A_0 - A_0^dag (real antisymmetric; pump term is +i Omega(t) P).
  SparseC pump_structure;

  // kappa*(n+ + n-) + (gamma/2) * diag(sum_sigma A^dag A); the decay part of
  // the effective generator is -1 times this acting multiplicatively.
  Eigen::VectorXd loss_diagonal(double kappa, double gamma) const;
  // diag(sum_sigma A_sigma^dag A_sigma) alone (excited-state decay weights).
  Eigen::VectorXd excited_weight;

  const SparseC& lowering_op(int sigma) const { return lowering[sigma + 1]; }

  static SystemOperators build(const Basis& basis);
};

}  // namespace capsim
