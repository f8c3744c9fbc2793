#include "capsim/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace capsim {

namespace {

Eigen::MatrixXcd restrict_dense(const SparseC& m, const std::vector<int>& sub) {
  const int n = (int)sub.size();
  std::vector<int> pos(m.rows(), -1);
  for (int i = 0; i < n; ++i) pos[sub[i]] = i;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (int c = 0; c < n; ++c)
    for (SparseC::InnerIterator it(m, sub[c]); it; ++it)
      if (pos[it.row()] >= 0) out(pos[it.row()], c) = it.value();
  return out;
}

VectorC restrict_vector(const VectorC& v, const std::vector<int>& sub) {
  VectorC out(sub.size());
  for (size_t i = 0; i < sub.size(); ++i) out[(Eigen::Index)i] = v[sub[i]];
  return out;
}

SparseC restrict_sparse(const SparseC& m, const std::vector<int>& sub) {
  const int n = (int)sub.size();
  std::vector<int> pos(m.rows(), -1);
  for (int i = 0; i < n; ++i) pos[sub[i]] = i;
  std::vector<Eigen::Triplet<Cplx>> trips;
  for (int c = 0; c < n; ++c)
    for (SparseC::InnerIterator it(m, sub[c]); it; ++it)
      if (pos[it.row()] >= 0) trips.emplace_back(pos[it.row()], c, it.value());
  SparseC out(n, n);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

}  // namespace

Spectrum instantaneous_spectrum(const Hamiltonian& h, double t,
                                const std::vector<int>& subspace) {
  const Eigen::MatrixXcd hm = restrict_dense(h.interaction(t), subspace);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hm);
  return Spectrum{es.eigenvalues(), es.eigenvectors(), subspace};
}

int level_of_state(const Spectrum& s, const VectorC& full_state) {
  const VectorC v = restrict_vector(full_state, s.subspace);
  Eigen::VectorXd ov = (s.vectors.adjoint() * v).cwiseAbs();
  int best = 0;
  ov.maxCoeff(&best);
  return best;
}

LevelTracks track_levels(const Hamiltonian& h, const std::vector<double>& grid,
                         const std::vector<int>& subspace) {
  if (grid.empty()) throw std::invalid_argument("track_levels: empty grid");
  const int n = (int)subspace.size();
  LevelTracks out;
  out.times = grid;
  out.energies.resize((Eigen::Index)grid.size(), n);
  out.min_overlap = Eigen::VectorXd::Ones(n);

  Spectrum prev = instantaneous_spectrum(h, grid[0], subspace);
  // permutation[k] = column of the current spectrum tracked as level k.
  std::vector<int> perm(n);
  for (int k = 0; k < n; ++k) perm[k] = k;
  for (int k = 0; k < n; ++k) out.energies(0, k) = prev.energies[k];

  for (size_t gi = 1; gi < grid.size(); ++gi) {
    Spectrum cur = instantaneous_spectrum(h, grid[gi], subspace);
    // Greedy global assignment on the overlap matrix.
    Eigen::MatrixXd ov = (prev.vectors.adjoint() * cur.vectors).cwiseAbs();
    std::vector<int> new_perm(n, -1);
    std::vector<char> row_used(n, 0), col_used(n, 0);
    for (int pick = 0; pick < n; ++pick) {
      int br = -1, bc = -1;
      double best = -1.0, best_de = 0.0;
      for (int r = 0; r < n; ++r) {
        if (row_used[r]) continue;
        for (int c = 0; c < n; ++c) {
          if (col_used[c]) continue;
          const double de = std::abs(prev.energies[r] - cur.energies[c]);
          // Ties in overlap resolve toward the nearer eigenvalue.
          if (ov(r, c) > best + 1e-12 ||
              (ov(r, c) > best - 1e-12 && (br < 0 || de < best_de))) {
            best = ov(r, c);
            best_de = de;
            br = r;
            bc = c;
          }
        }
      }
      row_used[br] = 1;
      col_used[bc] = 1;
      // Row br of ov corresponds to the previous spectrum's column br, which
      // is tracked level k with perm[k] == br.
      new_perm[br] = bc;
      for (int k = 0; k < n; ++k)
        if (perm[k] == br) {
          if (best < out.min_overlap[k]) out.min_overlap[k] = best;
          if (best < 0.5) out.discontinuity = true;
        }
    }
    std::vector<int> next(n);
    for (int k = 0; k < n; ++k) next[k] = new_perm[perm[k]];
    perm = next;
    for (int k = 0; k < n; ++k) out.energies((Eigen::Index)gi, k) = cur.energies[perm[k]];
    prev = std::move(cur);
  }

  // Re-order the final spectrum into tracked-level order.
  out.last.subspace = subspace;
  out.last.energies.resize(n);
  out.last.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    out.last.energies[k] = prev.energies[perm[k]];
    out.last.vectors.col(k) = prev.vectors.col(perm[k]);
  }
  return out;
}

VectorC analytic_dark_state(const SystemOperators& ops, int k, double g,
                            double om) {
  const Basis& b = ops.basis;
  VectorC v = VectorC::Zero(b.dimension());
  auto add = [&](double coef, int twom, int np, int nm) {
    const int i = b.index_of(0, twom, np, nm);
    if (i < 0)
      throw std::invalid_argument("analytic_dark_state: photon cutoff too small");
    v[i] += coef;
  };
  const double g2 = g * g, g3 = g2 * g, om2 = om * om, om3 = om2 * om;
  if (b.two_F_ground() == 6 && b.two_F_excited() == 6) {
    switch (k) {
      case 0:
        add(-std::sqrt(15.0) * g3, -6, 0, 0);
        add(std::sqrt(45.0) * g2 * om, -4, 0, 1);
        add(-std::sqrt(18.0) * g * om2, -2, 0, 2);
        add(om3, 0, 0, 3);
        break;
      case 1:
        add(std::sqrt(60.0) * g3, -6, 1, 1);
        add(-std::sqrt(90.0) * g2 * om, -4, 1, 2);
        add(std::sqrt(24.0) * g * om2, -2, 1, 3);
        add(-om3, 0, 1, 4);
        add(std::sqrt(18.0) * g3, -2, 0, 2);
        add(-std::sqrt(36.0) * g2 * om, 0, 0, 3);
        add(std::sqrt(6.0) * g * om2, 2, 0, 4);
        break;
      case 2:
        add(-std::sqrt(150.0) * g3, -6, 2, 2);
        add(std::sqrt(150.0) * g2 * om, -4, 2, 3);
        add(-std::sqrt(30.0) * g * om2, -2, 2, 4);
        add(om3, 0, 2, 5);
        add(-std::sqrt(60.0) * g3, -2, 1, 3);
        add(std::sqrt(90.0) * g2 * om, 0, 1, 4);
        add(-std::sqrt(12.0) * g * om2, 2, 1, 5);
        add(-std::sqrt(15.0) * g3, 2, 0, 4);
        add(std::sqrt(15.0) * g2 * om, 4, 0, 5);
        break;
      default:
        throw std::invalid_argument("analytic_dark_state: k out of range for F=3");
    }
  } else if (b.two_F_ground() == 4 && b.two_F_excited() == 2) {
    if (k != 0)
      throw std::invalid_argument("analytic_dark_state: only k=0 for F=2 -> F=1");
    add(-std::sqrt(12.0) * g2, 0, 0, 0);
    add(2.0 * g * om, -2, 1, 0);
    add(2.0 * g * om, 2, 0, 1);
    add(-om2, -4, 2, 0);
    add(-om2, 4, 0, 2);
  } else {
    throw std::invalid_argument("analytic_dark_state: unsupported manifold");
  }
  v.normalize();
  return v;
}

double ladder_gap(const Hamiltonian& h, double t, const std::vector<int>& subspace,
                  int k) {
  const Spectrum s = instantaneous_spectrum(h, t, subspace);
  const VectorC anchor = analytic_dark_state(h.ops(), k, h.g(t), h.omega(t));
  const int i = level_of_state(s, anchor);
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < s.energies.size(); ++j)
    if (j != i) best = std::min(best, std::abs(s.energies[j] - s.energies[i]));
  return best;
}

std::vector<AvoidedCrossing> scan_avoided_crossings(
    const Hamiltonian& h, double t0, double t1, double dt,
    const std::vector<int>& subspace, int k, double refine_dt) {
  std::vector<double> ts, gaps;
  for (double t = t0; t <= t1 + 1e-12; t += dt) {
    ts.push_back(t);
    gaps.push_back(ladder_gap(h, t, subspace, k));
  }
  std::vector<AvoidedCrossing> out;
  for (size_t i = 1; i + 1 < ts.size(); ++i) {
    if (!(gaps[i] < gaps[i - 1] && gaps[i] < gaps[i + 1])) continue;
    double lo = ts[i - 1], hi = ts[i + 1];
    while (hi - lo > refine_dt) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      if (ladder_gap(h, m1, subspace, k) < ladder_gap(h, m2, subspace, k))
        hi = m2;
      else
        lo = m1;
    }
    const double tm = 0.5 * (lo + hi);
    out.push_back({tm, ladder_gap(h, tm, subspace, k)});
  }
  return out;
}

double multilevel_crossing_time(const Hamiltonian& h, double t0, double t1,
                                double dt, const std::vector<int>& subspace,
                                double band) {
  double best_t = t0;
  int best_count = -1;
  for (double t = t0; t <= t1 + 1e-12; t += dt) {
    const Spectrum s = instantaneous_spectrum(h, t, subspace);
    const VectorC anchor = analytic_dark_state(h.ops(), 0, h.g(t), h.omega(t));
    const int i = level_of_state(s, anchor);
    int count = 0;
    for (int j = 0; j < s.energies.size(); ++j)
      if (j != i && std::abs(s.energies[j] - s.energies[i]) < band) ++count;
    if (count > best_count) {
      best_count = count;
      best_t = t;
    }
  }
  return best_t;
}

double landau_zener_probability(const Hamiltonian& h, double t0, double t1,
                                double dt) {
  const std::vector<int> sub =
      h.reachable_subspace(h.basis().index_of(0, -h.basis().two_F_ground(), 0, 0));
  const int n = (int)sub.size();
  std::vector<int> pos(h.dimension(), -1);
  for (int i = 0; i < n; ++i) pos[sub[i]] = i;

  // Restricted structure matrices (fixed sparsity, time enters via g/Omega).
  const SparseC G = restrict_sparse(h.coupling_structure(), sub);
  const SparseC P = restrict_sparse(h.ops().pump_structure, sub);
  Eigen::VectorXd D(n);
  for (int i = 0; i < n; ++i) D[i] = h.detuning_diagonal()[sub[i]];

  auto dark_pair = [&](double t) {
    Eigen::MatrixXcd B(n, 2);
    B.col(0) = restrict_vector(
        analytic_dark_state(h.ops(), 0, h.g(t), h.omega(t)), sub);
    B.col(1) = restrict_vector(
        analytic_dark_state(h.ops(), 1, h.g(t), h.omega(t)), sub);
    return B;
  };
  const Cplx I(0.0, 1.0);
  auto rhs = [&](double t, const Eigen::Vector2cd& c) -> Eigen::Vector2cd {
    const Eigen::MatrixXcd B = dark_pair(t);
    const double eps = 1e-6;
    const Eigen::MatrixXcd dB = (dark_pair(t + eps) - dark_pair(t - eps)) / (2 * eps);
    const Eigen::Matrix2cd S = B.adjoint() * B;
    Eigen::MatrixXcd HB = (-I * h.g(t)) * (G * B) + (I * h.omega(t)) * (P * B);
    HB += D.asDiagonal() * B;
    const Eigen::Matrix2cd Hb = B.adjoint() * HB;
    const Eigen::Matrix2cd T = B.adjoint() * dB;
    return S.fullPivLu().solve((-I) * (Hb * c) - T * c);
  };

  Eigen::Vector2cd c(1.0, 0.0);
  const long steps = std::lround((t1 - t0) / dt);
  double t = t0;
  for (long s = 0; s < steps; ++s) {
    const Eigen::Vector2cd k1 = rhs(t, c);
    const Eigen::Vector2cd k2 = rhs(t + dt / 2, c + (dt / 2) * k1);
    const Eigen::Vector2cd k3 = rhs(t + dt / 2, c + (dt / 2) * k2);
    const Eigen::Vector2cd k4 = rhs(t + dt, c + dt * k3);
    c += (dt / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += dt;
  }
  return std::norm(c[1]);
}

}  // namespace capsim
