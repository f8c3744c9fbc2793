#include "capsim/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "capsim/atom_analyzer.hpp"

namespace capsim {

namespace {

TrajectoryRecord make_record(const TrajectoryResult& tr, const Basis& basis) {
  TrajectoryRecord rec;
  rec.seed = tr.seed;
  rec.events = tr.events;
  rec.degenerate_jumps = tr.degenerate_jumps;
  rec.atom_sign = tr.atom_sign;
  for (int i = 0; i < basis.dimension(); ++i) {
    const double p = std::norm(tr.final_state[i]);
    if (p > 1e-9) rec.final_probs.emplace_back(i, p);
  }
  return rec;
}

}  // namespace

Eigen::MatrixXd EnsembleResult::stderr_of_mean() const {
  if (n < 2) return Eigen::MatrixXd::Zero(m2.rows(), m2.cols());
  return (m2 / ((double)n * (n - 1))).cwiseSqrt();
}

Eigen::VectorXd EnsembleResult::target_stderr() const {
  if (n < 2 || target_m2.size() == 0)
    return Eigen::VectorXd::Zero(target_m2.size());
  return (target_m2 / ((double)n * (n - 1))).cwiseSqrt();
}

EnsembleResult run_ensemble(const Hamiltonian& h,
                            const std::vector<CollapseChannel>& channels,
                            const VectorC& psi0, std::uint64_t base_seed,
                            const EnsembleOptions& opt) {
  const int dim = h.dimension();
  const int grid_n = (int)opt.trajectory.sample_grid.size();
  const bool with_target = opt.target_state.size() == dim;

  EnsembleResult out;
  out.times = opt.trajectory.sample_grid;
  if (opt.keep_occupations) {
    out.mean = Eigen::MatrixXd::Zero(grid_n, dim);
    out.m2 = Eigen::MatrixXd::Zero(grid_n, dim);
  }
  if (with_target) {
    out.target_mean = Eigen::VectorXd::Zero(grid_n);
    out.target_m2 = Eigen::VectorXd::Zero(grid_n);
  }
  if (opt.keep_records) out.records.reserve(opt.n_traj);

  TrajectoryOptions traj_opt = opt.trajectory;
  if (with_target) traj_opt.target_state = opt.target_state;

  // Runs worker-side, immediately after a trajectory finishes: the analyzer
  // outcome is drawn from its own stream derived from the trajectory seed, so
  // results do not depend on scheduling.
  std::atomic<int> atom_warnings{0};
  auto attach_atom = [&](TrajectoryResult& tr) {
    if (!opt.measure_atom) return;
    Rng rng(derive_seed(tr.seed, 0x61746f6dULL));  // independent analyzer draw
    const AtomMeasurement m =
        atom_measurement(h.basis(), tr.final_state, opt.atom_theta, rng);
    tr.atom_sign = m.sign;
    if (m.residual_warning) atom_warnings.fetch_add(1);
  };

  // Welford update, applied strictly in trajectory-index order.
  auto commit = [&](const TrajectoryResult& tr) {
    ++out.n;
    const double inv_n = 1.0 / out.n;
    if (opt.keep_occupations) {
      for (int g = 0; g < grid_n; ++g)
        for (int i = 0; i < dim; ++i) {
          const double x = tr.occupations(g, i);
          const double d = x - out.mean(g, i);
          out.mean(g, i) += d * inv_n;
          out.m2(g, i) += d * (x - out.mean(g, i));
        }
    }
    if (with_target) {
      for (int g = 0; g < grid_n; ++g) {
        const double x = tr.target_overlap[g];
        const double d = x - out.target_mean[g];
        out.target_mean[g] += d * inv_n;
        out.target_m2[g] += d * (x - out.target_mean[g]);
      }
    }
    out.total_jumps += (long)tr.events.size();
    out.degenerate_jumps += tr.degenerate_jumps;
    if (opt.keep_records) out.records.push_back(make_record(tr, h.basis()));
  };

  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1) {
    for (int i = 0; i < opt.n_traj; ++i) {
      TrajectoryResult tr =
          run_trajectory(h, channels, psi0, derive_seed(base_seed, i), traj_opt);
      attach_atom(tr);
      commit(tr);
    }
    out.atom_residual_warnings = atom_warnings.load();
    return out;
  }

  // Bounded reorder window: workers park finished trajectories; the committer
  // drains them in index order so floating-point reduction order is fixed.
  const int window = 2 * jobs + 2;
  std::vector<TrajectoryResult> slots(window);
  std::vector<char> ready(window, 0);
  std::mutex mu;
  std::condition_variable cv_ready, cv_space;
  std::atomic<int> next_index{0};
  int committed = 0;

  auto worker = [&]() {
    for (;;) {
      const int i = next_index.fetch_add(1);
      if (i >= opt.n_traj) return;
      TrajectoryResult tr =
          run_trajectory(h, channels, psi0, derive_seed(base_seed, i), traj_opt);
      attach_atom(tr);
      std::unique_lock<std::mutex> lk(mu);
      cv_space.wait(lk, [&] { return i - committed < window; });
      slots[i % window] = std::move(tr);
      ready[i % window] = 1;
      cv_ready.notify_all();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
  {
    std::unique_lock<std::mutex> lk(mu);
    while (committed < opt.n_traj) {
      cv_ready.wait(lk, [&] { return ready[committed % window] == 1; });
      TrajectoryResult tr = std::move(slots[committed % window]);
      ready[committed % window] = 0;
      lk.unlock();
      commit(tr);
      lk.lock();
      ++committed;
      cv_space.notify_all();
    }
  }
  for (auto& th : pool) th.join();
  out.atom_residual_warnings = atom_warnings.load();
  return out;
}

}  // namespace capsim
