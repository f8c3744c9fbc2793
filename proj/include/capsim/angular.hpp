#pragma once
// Clebsch-Gordan coefficients for small angular momenta, evaluated in long
// double via the Racah closed form.  Angular momenta are passed as doubled
// integers (twoj = 2j) so half-integer values stay exact.

#include <cmath>
#include <stdexcept>

namespace capsim {

namespace detail {

// log n! for small n, cached.
inline long double log_factorial(int n) {
  static long double cache[200];
  static bool init = false;
  if (!init) {
    cache[0] = 0.0L;
    for (int i = 1; i < 200; ++i) cache[i] = cache[i - 1] + std::log((long double)i);
    init = true;
  }
  if (n < 0 || n >= 200) throw std::invalid_argument("log_factorial: out of range");
  return cache[n];
}

}  // namespace detail

// <j1 m1; j2 m2 | J M> with all arguments doubled (two_j1 = 2*j1, ...).
// Returns 0 for non-triangular or non-conserving combinations.
inline double clebsch_gordan2(int two_j1, int two_m1, int two_j2, int two_m2,
                              int two_J, int two_M) {
  using detail::log_factorial;
  if (two_m1 + two_m2 != two_M) return 0.0;
  if (two_J < std::abs(two_j1 - two_j2) || two_J > two_j1 + two_j2) return 0.0;
  if (std::abs(two_m1) > two_j1 || std::abs(two_m2) > two_j2 || std::abs(two_M) > two_J)
    return 0.0;
  if ((two_j1 + two_m1) % 2 != 0 || (two_j2 + two_m2) % 2 != 0 ||
      (two_J + two_M) % 2 != 0 || (two_j1 + two_j2 + two_J) % 2 != 0)
    return 0.0;

  // All of the following are guaranteed integral; arguments stay doubled until
  // divided by 2 at the use site.
  auto half = [](int two_x) { return two_x / 2; };
  const int a1 = half(two_j1 + two_j2 - two_J);
  const int a2 = half(two_j1 - two_j2 + two_J);
  const int a3 = half(-two_j1 + two_j2 + two_J);
  const int a4 = half(two_j1 + two_j2 + two_J) + 1;
  // Triangle factor (log).
  const long double log_tri =
      log_factorial(a1) + log_factorial(a2) + log_factorial(a3) - log_factorial(a4);

  const int j1pm1 = half(two_j1 + two_m1), j1mm1 = half(two_j1 - two_m1);
  const int j2pm2 = half(two_j2 + two_m2), j2mm2 = half(two_j2 - two_m2);
  const int JpM = half(two_J + two_M), JmM = half(two_J - two_M);
  const long double log_pref =
      0.5L * (std::log((long double)(two_J + 1)) + log_tri + log_factorial(j1pm1) +
              log_factorial(j1mm1) + log_factorial(j2pm2) + log_factorial(j2mm2) +
              log_factorial(JpM) + log_factorial(JmM));

  const int k_min = std::max({0, half(two_j2 - two_J - two_m1), half(two_j1 - two_J + two_m2)});
  const int k_max = std::min({a1, j1mm1, j2pm2});
  long double sum = 0.0L;
  for (int k = k_min; k <= k_max; ++k) {
    const long double log_den =
        log_factorial(k) + log_factorial(a1 - k) + log_factorial(j1mm1 - k) +
        log_factorial(j2pm2 - k) + log_factorial(half(two_J - two_j2 + two_m1) + k) +
        log_factorial(half(two_J - two_j1 - two_m2) + k);
    const long double term = std::exp(log_pref - log_den);
    sum += (k % 2 == 0) ? term : -term;
  }
  return (double)sum;
}

// Convenience overload taking j, m as doubles (must be integer or half-integer).
inline double clebsch_gordan(double j1, double m1, double j2, double m2, double J,
                             double M) {
  auto two = [](double x) {
    double t = 2.0 * x;
    double r = std::round(t);
    if (std::abs(t - r) > 1e-9) throw std::invalid_argument("clebsch_gordan: not half-integral");
    return (int)r;
  };
  return clebsch_gordan2(two(j1), two(m1), two(j2), two(m2), two(J), two(M));
}

// Dipole coupling coefficient <F_g m_g; 1 sigma | F_e m_g+sigma>, doubled F/m.
inline double dipole_cg(int two_Fg, int two_mg, int sigma, int two_Fe) {
  return clebsch_gordan2(two_Fg, two_mg, 2, 2 * sigma, two_Fe, two_mg + 2 * sigma);
}

}  // namespace capsim
