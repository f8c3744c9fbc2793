#include "capsim/atom_analyzer.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace capsim {

Eigen::MatrixXcd atom_parity_operator(int two_F, double theta) {
  if (two_F < 0 || two_F % 2 != 0)
    throw std::invalid_argument(
        "atom_parity_operator: even/odd analyzer outcomes need integer spin");
  const int d = two_F + 1;
  const double j = 0.5 * two_F;

  Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(d, d);
  const Cplx up = 0.5 * std::exp(Cplx(0.0, -theta / 4.0));
  for (int k = 0; k + 1 < d; ++k) {
    const double m = -j + k;
    const double amp = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    J(k + 1, k) += up * amp;          // raising part
    J(k, k + 1) += std::conj(up) * amp;  // lowering part
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(J);
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const long lam = std::lround(es.eigenvalues()[k]);
    const double sign = (lam % 2 == 0) ? 1.0 : -1.0;
    M.noalias() += sign * es.eigenvectors().col(k) *
                   es.eigenvectors().col(k).adjoint();
  }
  return M;
}

AtomMeasurement atom_measurement(const Basis& basis, const VectorC& state,
                                 double theta, Rng& rng) {
  const int two_F = basis.two_F_ground();
  const Eigen::MatrixXcd M = atom_parity_operator(two_F, theta);
  const int d = two_F + 1;
  const int nph = basis.n_max() + 1;

  // Ground-manifold marginal: sum over photon configurations of the per-m
  // amplitude vector's norm and parity expectation.
  double ground = 0.0, parity = 0.0;
  VectorC amp(d);
  for (int a = 0; a < nph; ++a)
    for (int b = 0; b < nph; ++b) {
      for (int k = 0; k < d; ++k) {
        const int idx = basis.index_of(0, -two_F + 2 * k, a, b);
        amp[k] = state[idx];
      }
      ground += amp.squaredNorm();
      parity += (amp.adjoint() * M * amp)(0).real();
    }

  AtomMeasurement out;
  const double total = state.squaredNorm();
  out.ground_residual = std::max(0.0, total - ground) / total;
  out.residual_warning = out.ground_residual > 1e-6;
  const double p_even = ground > 0 ? 0.5 * (1.0 + parity / ground) : 0.5;
  out.sign = (rng.uniform() < p_even) ? +1 : -1;
  return out;
}

}  // namespace capsim
