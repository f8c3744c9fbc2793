#pragma once
// Collapse channel sets for the dissipative dynamics.  The standard set
// resolves cavity decay per polarization mode; the detector set resolves it
// per analyzer station and linear-polarization port, modelling three balanced
// detection stations behind polarization analyzers.

#include <string>
#include <vector>

#include "capsim/operators.hpp"

namespace capsim {

struct CollapseChannel {
  std::string name;
  SparseC op;        // includes the sqrt(rate) prefactor
  bool cavity = false;  // counts as an escaped cavity photon
  int analyzer = 0;     // 1-based detector station for detector channels
  int xy_sign = 0;      // +1 for an x-port click, -1 for y-port, 0 otherwise
};

// Rotated linear-polarization mode pair at analyzer parameter phi:
//   a_x = (e^{-i phi/4} a+ + e^{+i phi/4} a-)/sqrt(2)
//   a_y = i (e^{-i phi/4} a+ - e^{+i phi/4} a-)/sqrt(2)
std::pair<SparseC, SparseC> rotated_mode_operators(const SystemOperators& ops,
                                                   double phi);

// {sqrt(2 kappa) a+, sqrt(2 kappa) a-, sqrt(gamma) A_sigma for sigma=-1,0,+1}.
std::vector<CollapseChannel> standard_collapse_set(const SystemOperators& ops,
                                                   double kappa, double gamma);

struct AnalyzerConfig {
  // One correlation angle per detection station.  A station's polarization
  // mixer applies half this angle per photon, so that the product of one
  // click per station oscillates as cos(angles[0] + angles[1] + ...).
  std::vector<double> angles;
  double theta = 0.0;  // atomic analyzer angle, when an atom sign is measured
};

// For each station k: sqrt(2 kappa / n_stations) * {a_x, a_y} evaluated at
// twice the configured correlation angle (see AnalyzerConfig), plus the three
// atomic channels.  The summed dissipator equals the standard set's exactly.
std::vector<CollapseChannel> detector_collapse_set(const SystemOperators& ops,
                                                   double kappa, double gamma,
                                                   const AnalyzerConfig& analyzers);

// sum_c C^dag C as a diagonal (it is diagonal for both channel sets).
Eigen::VectorXd total_decay_diagonal(const std::vector<CollapseChannel>& channels);

}  // namespace capsim
