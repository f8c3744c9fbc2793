#include "capsim/correlations.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace capsim {

namespace {

// Cavity clicks of one record, mapped through the channel table.
struct CavityClicks {
  int total = 0;
  int max_station = 0;        // largest per-station multiplicity
  bool unstationed = false;   // cavity jump without an analyzer station
  int sign_product = 1;       // product of x(+1)/y(-1) signs
};

CavityClicks reduce_clicks(const TrajectoryRecord& rec,
                           const std::vector<CollapseChannel>& channels) {
  CavityClicks out;
  std::vector<int> per_station;
  for (const auto& ev : rec.events) {
    const auto& ch = channels.at((size_t)ev.channel);
    if (!ch.cavity) continue;
    ++out.total;
    if (ch.analyzer < 1) {
      out.unstationed = true;
      continue;
    }
    if ((int)per_station.size() < ch.analyzer) per_station.resize(ch.analyzer, 0);
    ++per_station[ch.analyzer - 1];
    out.sign_product *= (ch.xy_sign >= 0) ? 1 : -1;
  }
  for (int c : per_station) out.max_station = std::max(out.max_station, c);
  return out;
}

CorrelationEstimate reduce_products(
    const std::vector<TrajectoryRecord>& records,
    const std::vector<CollapseChannel>& channels, const PostSelectionRule& rule,
    bool with_atom) {
  CorrelationEstimate est;
  est.n_total = (long)records.size();
  double sum = 0.0, sumsq = 0.0;
  for (const auto& rec : records) {
    const CavityClicks clicks = reduce_clicks(rec, channels);
    if (clicks.total != rule.required_total) continue;
    if (clicks.unstationed) continue;
    if (clicks.max_station > rule.max_per_analyzer) continue;
    int product = clicks.sign_product;
    if (with_atom) {
      if (rec.atom_sign == 0) continue;
      product *= rec.atom_sign;
    }
    ++est.n_accepted;
    sum += product;
    sumsq += 1.0;  // product^2 is always 1
  }
  if (est.n_accepted == 0) return est;
  est.empty = false;
  est.mean = sum / est.n_accepted;
  if (est.n_accepted > 1) {
    const double var =
        (sumsq - est.n_accepted * est.mean * est.mean) / (est.n_accepted - 1);
    est.std_error = std::sqrt(std::max(0.0, var) / est.n_accepted);
  }
  return est;
}

}  // namespace

SpinOperators spin_operators(const SystemOperators& ops) {
  SpinOperators s;
  s.plus = SparseC(ops.a_plus.adjoint()) * ops.a_minus;
  s.minus = SparseC(ops.a_minus.adjoint()) * ops.a_plus;
  const int dim = (int)ops.n_plus.size();
  std::vector<Eigen::Triplet<Cplx>> trip;
  trip.reserve(dim);
  for (int i = 0; i < dim; ++i) {
    const double z = 0.5 * (ops.n_plus[i] - ops.n_minus[i]);
    if (z != 0.0) trip.emplace_back(i, i, Cplx(z, 0.0));
  }
  s.z.resize(dim, dim);
  s.z.setFromTriplets(trip.begin(), trip.end());
  return s;
}

double ghz_expectation(int n_photons, Cplx alpha, Cplx beta,
                       const std::vector<double>& angles) {
  if ((int)angles.size() != n_photons)
    throw std::invalid_argument(
        "ghz_expectation: one analyzer angle per photon is required");
  if (n_photons < 1)
    throw std::invalid_argument("ghz_expectation: need at least one photon");

  // Per-photon port amplitudes for the sigma+ / sigma- components.
  std::vector<Cplx> xp(n_photons), xm(n_photons), yp(n_photons), ym(n_photons);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int k = 0; k < n_photons; ++k) {
    const Cplx ep = std::exp(Cplx(0.0, -angles[k] / 2.0)) * inv_sqrt2;
    const Cplx em = std::exp(Cplx(0.0, +angles[k] / 2.0)) * inv_sqrt2;
    xp[k] = ep;
    xm[k] = em;
    yp[k] = Cplx(0.0, 1.0) * ep;
    ym[k] = Cplx(0.0, -1.0) * em;
  }

  double num = 0.0, den = 0.0;
  for (unsigned mask = 0; mask < (1u << n_photons); ++mask) {
    Cplx amp_plus = alpha, amp_minus = beta;
    int sign = 1;
    for (int k = 0; k < n_photons; ++k) {
      if (mask & (1u << k)) {
        amp_plus *= yp[k];
        amp_minus *= ym[k];
        sign = -sign;
      } else {
        amp_plus *= xp[k];
        amp_minus *= xm[k];
      }
    }
    const double p = std::norm(amp_plus + amp_minus);
    num += sign * p;
    den += p;
  }
  return num / den;
}

CorrelationEstimate estimate_triple_correlation(
    const std::vector<TrajectoryRecord>& records,
    const std::vector<CollapseChannel>& channels, const PostSelectionRule& rule) {
  return reduce_products(records, channels, rule, /*with_atom=*/false);
}

CorrelationEstimate estimate_atom_photon_correlation(
    const std::vector<TrajectoryRecord>& records,
    const std::vector<CollapseChannel>& channels, const PostSelectionRule& rule) {
  return reduce_products(records, channels, rule, /*with_atom=*/true);
}

std::vector<double> photon_count_histogram(
    const std::vector<TrajectoryRecord>& records,
    const std::vector<CollapseChannel>& channels) {
  std::vector<double> hist;
  for (const auto& rec : records) {
    int count = 0;
    for (const auto& ev : rec.events)
      if (channels.at((size_t)ev.channel).cavity) ++count;
    if ((int)hist.size() <= count) hist.resize(count + 1, 0.0);
    hist[count] += 1.0;
  }
  if (!records.empty())
    for (double& h : hist) h /= (double)records.size();
  return hist;
}

RoutingEstimate routing_acceptance_fraction(
    const std::vector<TrajectoryRecord>& records,
    const std::vector<CollapseChannel>& channels, const PostSelectionRule& rule,
    double a_probability, std::uint64_t seed) {
  if (a_probability < 0.0 || a_probability > 1.0)
    throw std::invalid_argument("routing probability must lie in [0, 1]");
  RoutingEstimate out;
  out.n_total = (long)records.size();
  std::uint64_t index = 0;
  for (const auto& rec : records) {
    Rng rng(derive_seed(seed, index++));
    int count = 0;
    for (const auto& ev : rec.events)
      if (channels.at((size_t)ev.channel).cavity) ++count;
    if (count != rule.required_total) continue;
    ++out.n_qualifying;
    int a_side = 0;
    for (int k = 0; k < count; ++k)
      if (rng.uniform() < a_probability) ++a_side;
    if (a_side == count - 1) ++out.n_accepted;
  }
  if (out.n_qualifying > 0)
    out.fraction = (double)out.n_accepted / (double)out.n_qualifying;
  return out;
}

}  // namespace capsim
