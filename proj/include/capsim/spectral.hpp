#pragma once
// Instantaneous eigenstructure of the interaction generator: spectra on a
// coupled submanifold, adiabatic level tracking across a time grid, analytic
// uncoupled ladder states, avoided-crossing location, and the two-level
// nonadiabatic transfer probability.

#include <vector>

#include "capsim/hamiltonian.hpp"

namespace capsim {

struct Spectrum {
  Eigen::VectorXd energies;   // ascending
  Eigen::MatrixXcd vectors;   // columns, in subspace coordinates
  std::vector<int> subspace;  // full-basis index of each coordinate
};

// Dense eigendecomposition of H(t) restricted to `subspace` (full-basis
// indices; typically a reachable_subspace result).
Spectrum instantaneous_spectrum(const Hamiltonian& h, double t,
                                const std::vector<int>& subspace);

// Index of the spectrum column with the largest overlap against a full-basis
// vector.
int level_of_state(const Spectrum& s, const VectorC& full_state);

struct LevelTracks {
  std::vector<double> times;
  Eigen::MatrixXd energies;       // grid x levels; column = one tracked level
  Eigen::VectorXd min_overlap;    // smallest consecutive matched overlap per level
  bool discontinuity = false;     // true if any matched overlap fell below 0.5
  Spectrum last;                  // spectrum at the final grid point, tracked order
};

// Follows every level of the restricted generator across the grid by greedy
// best-overlap assignment between consecutive eigenbases.  Column k of
// `energies` starts at the k-th ascending eigenvalue of the first grid point.
// The grid step is the caller's choice of adiabatic continuation scale: a
// coarse grid follows a level's character diabatically through very narrow
// crossings, a fine grid follows the avoided-crossing branches.
LevelTracks track_levels(const Hamiltonian& h, const std::vector<double>& grid,
                         const std::vector<int>& subspace);

// Uncoupled zero-ladder states of the interaction generator at delta=0, as
// closed-form superpositions at fixed pulse amplitudes.  Supported manifolds:
// F=3 -> F=3 (k = 0, 1, 2) and F=2 -> F=1 (k = 0).  Vectors are full-basis
// and normalized.
VectorC analytic_dark_state(const SystemOperators& ops, int k, double g_value,
                            double omega_value);

// Distance from the ladder level (anchored by overlap with the analytic state
// k) to the nearest other eigenvalue at time t.
double ladder_gap(const Hamiltonian& h, double t, const std::vector<int>& subspace,
                  int k);

struct AvoidedCrossing {
  double time;
  double gap;
};

// Scans [t0, t1] with step dt for local minima of ladder_gap(k) and refines
// each by ternary search until the bracketing interval is below refine_dt.
std::vector<AvoidedCrossing> scan_avoided_crossings(
    const Hamiltonian& h, double t0, double t1, double dt,
    const std::vector<int>& subspace, int k, double refine_dt = 1e-4);

// Grid time at which the most levels crowd within `band` of the anchored
// ladder level (earliest time on ties): the center of the many-level crossing
// funnel at the end of the transit.
double multilevel_crossing_time(const Hamiltonian& h, double t0, double t1,
                                double dt, const std::vector<int>& subspace,
                                double band = 0.1);

// Nonadiabatic transfer between the first two ladder levels: integrates the
// exact two-state projection of the dynamics in the (nonorthogonal) analytic
// basis {E0(t), E1(t)} with a fixed-step RK4 and returns the final occupation
// of E1.  Valid for the F=3 -> F=3 manifold.
double landau_zener_probability(const Hamiltonian& h, double t0, double t1,
                                double dt = 2e-3);

}  // namespace capsim
