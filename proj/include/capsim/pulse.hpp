#pragma once
// Gaussian pulse envelopes parametrized by amplitude, center, and FWHM.

#include <cmath>

namespace capsim {

struct GaussianPulse {
  double amplitude = 0.0;
  double center = 0.0;
  double fwhm = 1.0;

  double operator()(double t) const {
    const double x = (t - center) / fwhm;
    return amplitude * std::exp(-4.0 * M_LN2 * x * x);
  }
};

}  // namespace capsim
