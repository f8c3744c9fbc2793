#include "capsim/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace capsim {

namespace {

struct EffectiveRhs {
  const Hamiltonian* h;
  void operator()(double t, const VectorC& y, VectorC& dydt) const {
    h->apply_effective(t, y, dydt);
  }
};

}  // namespace

TrajectoryResult run_trajectory(const Hamiltonian& h,
                                const std::vector<CollapseChannel>& channels,
                                const VectorC& psi0, std::uint64_t seed,
                                const TrajectoryOptions& opt) {
  TrajectoryResult res;
  res.seed = seed;
  const int dim = h.dimension();
  if (psi0.size() != dim) throw std::invalid_argument("run_trajectory: state size");
  res.occupations.resize((Eigen::Index)opt.sample_grid.size(), dim);

  const bool with_target = opt.target_state.size() == dim;
  if (with_target)
    res.target_overlap = Eigen::VectorXd::Zero((Eigen::Index)opt.sample_grid.size());

  Rng rng(seed);
  VectorC psi = psi0.normalized();
  AdaptiveRK45<EffectiveRhs> ode(EffectiveRhs{&h}, opt.t0, psi, opt.ode);
  // Threshold in (0, 1]; the norm only reaches 0 asymptotically.
  double threshold = 1.0 - rng.uniform();

  size_t next_sample = 0;
  while (next_sample < opt.sample_grid.size() &&
         opt.sample_grid[next_sample] < opt.t0 - 1e-12)
    ++next_sample;

  VectorC before_step(dim), jump_state(dim), applied(dim);
  double t = opt.t0;

  auto record_sample = [&](const VectorC& y) {
    const double n2 = y.squaredNorm();
    for (int i = 0; i < dim; ++i)
      res.occupations((Eigen::Index)next_sample, i) = std::norm(y[i]) / n2;
    if (with_target)
      res.target_overlap[(Eigen::Index)next_sample] =
          std::norm(opt.target_state.dot(y)) / n2;
    ++next_sample;
  };

  while (t < opt.t1 - 1e-12) {
    const double stop = (next_sample < opt.sample_grid.size())
                            ? std::min(opt.sample_grid[next_sample], opt.t1)
                            : opt.t1;
    if (stop <= t + 1e-13) {
      // Sample time coincides with the current time.
      record_sample(ode.y());
      continue;
    }
    const double t_before = ode.t();
    before_step = ode.y();
    const double t_after = ode.step(stop);
    t = t_after;

    if (ode.y().squaredNorm() <= threshold) {
      // The threshold was crossed inside (t_before, t_after]: bisect, with a
      // fresh partial integration from the step start each probe.
      double lo = t_before, hi = t_after;
      double t_jump = t_after;
      jump_state = ode.y();
      double f_jump = jump_state.squaredNorm() - threshold;
      for (int iter = 0; iter < 200 && std::abs(f_jump) > opt.jump_norm_tol;
           ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // interval exhausted in floating point
        AdaptiveRK45<EffectiveRhs> probe(EffectiveRhs{&h}, t_before, before_step,
                                         opt.ode);
        probe.integrate_to(mid);
        const double f = probe.y().squaredNorm() - threshold;
        if (f > 0)
          lo = mid;
        else
          hi = mid;
        t_jump = mid;
        jump_state = probe.y();
        f_jump = f;
      }

      // Channel rates at the jump time.
      const int nc = (int)channels.size();
      std::vector<double> rates(nc);
      double total = 0.0;
      for (int c = 0; c < nc; ++c) {
        applied.noalias() = channels[c].op * jump_state;
        rates[c] = applied.squaredNorm();
        total += rates[c];
      }
      if (total < opt.degenerate_rate_tol * jump_state.squaredNorm()) {
        // Zero-rate crossing: advance without a jump and redraw the threshold.
        ++res.degenerate_jumps;
        threshold = (1.0 - rng.uniform()) * jump_state.squaredNorm();
        ode.set_state(t_jump, jump_state);
        t = t_jump;
        continue;
      }
      const double u = rng.uniform() * total;
      int chosen = nc - 1;
      double acc = 0.0;
      for (int c = 0; c < nc; ++c) {
        acc += rates[c];
        if (u < acc) {
          chosen = c;
          break;
        }
      }
      applied.noalias() = channels[chosen].op * jump_state;
      applied /= applied.norm();
      res.events.push_back({t_jump, chosen});
      threshold = 1.0 - rng.uniform();
      ode.set_state(t_jump, applied);
      t = t_jump;
      continue;
    }

    if (next_sample < opt.sample_grid.size() &&
        t_after >= opt.sample_grid[next_sample] - 1e-12)
      record_sample(ode.y());
  }

  while (next_sample < opt.sample_grid.size()) record_sample(ode.y());

  res.final_state = ode.y().normalized();
  return res;
}

}  // namespace capsim
