#pragma once
// Parity analyzer for the atomic ground manifold: the difference of the
// projectors onto even and odd eigenstates of the rotated transverse spin
// J(theta) = (e^{-i theta/4} J+ + e^{+i theta/4} J-)/2.  On the ground Zeeman
// basis this equals sum_m e^{i m theta/2} |g_{-m}><g_m|, so one click per
// photon analyzer plus this atomic sign oscillates as cos(phi1 + phi2 + theta).

#include <Eigen/Dense>

#include "capsim/basis.hpp"
#include "capsim/operators.hpp"
#include "capsim/rng.hpp"

namespace capsim {

// M(theta) on the (2F+1)-dimensional ground manifold, rows/cols ordered by
// ascending m.  Requires integer spin (even two_F): half-integer eigenvalues
// have no even/odd split.
Eigen::MatrixXcd atom_parity_operator(int two_F, double theta);

struct AtomMeasurement {
  int sign = 0;            // sampled +1 (even) or -1 (odd)
  double ground_residual = 0.0;  // population outside the ground manifold
  bool residual_warning = false; // residual above 1e-6
};

// Sample the analyzer outcome from the atomic marginal of `state`, consuming
// one uniform draw from `rng`.
AtomMeasurement atom_measurement(const Basis& basis, const VectorC& state,
                                 double theta, Rng& rng);

}  // namespace capsim
