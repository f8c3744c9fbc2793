#pragma once
// Correlation observables for the photon-triple and photon-photon-atom
// schemes: pseudo-spin operators on the two polarization modes, ideal
// analytic expectations, and estimators that reduce post-selected quantum
// jump records to correlation values, count histograms, and routing yields.

#include <cstdint>
#include <vector>

#include "capsim/atom_analyzer.hpp"
#include "capsim/collapse.hpp"
#include "capsim/ensemble.hpp"

namespace capsim {

// Schwinger pseudo-spin built on the polarization mode pair:
//   plus = a+^dag a-, minus = a-^dag a+, z = (a+^dag a+ - a-^dag a-)/2.
struct SpinOperators {
  SparseC plus, minus, z;
};
SpinOperators spin_operators(const SystemOperators& ops);

// Ideal product expectation for the state alpha |n,0> + beta |0,n> measured
// with one detection per analyzer: detection of the sigma+ (sigma-) component
// at analyzer k contributes a phase e^{-i angles[k]/2} (e^{+i angles[k]/2}),
// an x-port click the sign +1 and a y-port click -1.  For the balanced state
// this reduces to cos(angles[0] + ... + angles[n-1]).
double ghz_expectation(int n_photons, Cplx alpha, Cplx beta,
                       const std::vector<double>& angles);

struct PostSelectionRule {
  int required_total = 3;   // cavity photons per accepted transit
  int max_per_analyzer = 1; // max clicks at one analyzer station
};

struct CorrelationEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long n_accepted = 0;
  long n_total = 0;
  bool empty = true;  // no trajectory survived post-selection
};

// Product of x/y click signs over the cavity jumps of each accepted record.
// Records must come from a detector-set run whose channel list is supplied
// here (events store channel indices).
CorrelationEstimate estimate_triple_correlation(
    const std::vector<TrajectoryRecord>& records,
    const std::vector<CollapseChannel>& channels, const PostSelectionRule& rule);

// Same reduction with the recorded atomic analyzer sign folded into the
// product; records lacking an atomic outcome are rejected.
CorrelationEstimate estimate_atom_photon_correlation(
    const std::vector<TrajectoryRecord>& records,
    const std::vector<CollapseChannel>& channels, const PostSelectionRule& rule);

// Normalized distribution of escaped-photon counts: entry [k] holds the
// fraction of records with exactly k cavity jumps.
std::vector<double> photon_count_histogram(
    const std::vector<TrajectoryRecord>& records,
    const std::vector<CollapseChannel>& channels);

struct RoutingEstimate {
  double fraction = 0.0;  // accepted / qualifying
  long n_accepted = 0;
  long n_qualifying = 0;  // records with exactly the required photon count
  long n_total = 0;
};

// Passive routing model: each escaped photon independently goes to the A side
// with probability `a_probability`, else to the B side.  A transit qualifies
// when it has exactly rule.required_total cavity photons and is accepted when
// all but one land on the A side; mode interference guarantees the A-side
// photons trigger distinct counters, so no further coincidence condition
// applies.  Draws are derived deterministically from `seed`.
RoutingEstimate routing_acceptance_fraction(
    const std::vector<TrajectoryRecord>& records,
    const std::vector<CollapseChannel>& channels, const PostSelectionRule& rule,
    double a_probability, std::uint64_t seed);

}  // namespace capsim
