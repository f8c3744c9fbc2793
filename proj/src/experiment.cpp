#include "capsim/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "capsim/correlations.hpp"
#include "capsim/master.hpp"
#include "capsim/rng.hpp"
#include "capsim/spectral.hpp"
#include "json.hpp"

namespace capsim {

namespace {

using nlohmann::json;

std::vector<double> uniform_grid(double t0, double t1, double dt) {
  std::vector<double> grid;
  const int n = (int)std::llround(std::floor((t1 - t0) / dt + 1e-9));
  grid.reserve(n + 1);
  for (int i = 0; i <= n; ++i) grid.push_back(t0 + i * dt);
  if (grid.empty() || grid.back() < t1 - 1e-9 * (1.0 + std::abs(t1)))
    grid.push_back(t1);
  else
    grid.back() = t1;
  return grid;
}

int resolved_jobs(const ExperimentSpec& spec) {
  if (spec.jobs > 0) return spec.jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? (int)hw : 1;
}

// Columns worth printing: occupation reaches the configured floor somewhere.
std::vector<int> visible_columns(const Eigen::MatrixXd& occ, double floor) {
  std::vector<int> cols;
  for (int j = 0; j < occ.cols(); ++j)
    if (occ.col(j).maxCoeff() >= floor) cols.push_back(j);
  return cols;
}

std::string occupation_table(
    const Basis& basis, const std::vector<double>& times,
    const Eigen::MatrixXd& occ, double floor,
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& extra) {
  const std::vector<int> cols = visible_columns(occ, floor);
  std::vector<std::string> header{"t"};
  for (int j : cols) header.push_back(basis.label(j));
  for (const auto& [name, values] : extra) header.push_back(name);
  std::string out = csv_row(header);
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<std::string> row{format_double(times[i])};
    for (int j : cols) row.push_back(format_double(occ((Eigen::Index)i, j)));
    for (const auto& [name, values] : extra)
      row.push_back(format_double(values[(Eigen::Index)i]));
    out += csv_row(row);
  }
  return out;
}

// Population sitting at the photon cutoff; if it is visible the box is too
// small and the numbers cannot be trusted to the usual tolerances.
void check_cutoff_leakage(const Basis& basis, const Eigen::MatrixXd& occ,
                          std::vector<std::string>& warnings) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < occ.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < occ.cols(); ++j) {
      const BasisState st = basis.state(j);
      if (st.n_plus == basis.n_max() || st.n_minus == basis.n_max())
        s += occ(i, j);
    }
    worst = std::max(worst, s);
  }
  if (worst > 1e-3) {
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "photon cutoff leakage: population %.3g at n = n_max; "
                  "increase system.n_max",
                  worst);
    warnings.push_back(buf);
  }
}

json record_to_json(const Basis& basis,
                    const std::vector<CollapseChannel>& channels,
                    const TrajectoryRecord& rec) {
  json events = json::array();
  for (const JumpEvent& e : rec.events)
    events.push_back({{"t", e.t}, {"channel", channels[e.channel].name}});
  json probs = json::object();
  for (const auto& [idx, p] : rec.final_probs) probs[basis.label(idx)] = p;
  json j;
  j["seed"] = rec.seed;
  j["events"] = std::move(events);
  j["final_probs"] = std::move(probs);
  if (rec.atom_sign != 0) j["atom_sign"] = rec.atom_sign;
  if (rec.degenerate_jumps != 0) j["degenerate_jumps"] = rec.degenerate_jumps;
  return j;
}

std::string records_to_jsonl(const Basis& basis,
                             const std::vector<CollapseChannel>& channels,
                             const std::vector<TrajectoryRecord>& records,
                             const char* extra_key = nullptr,
                             double extra_value = 0.0) {
  std::string out;
  for (const TrajectoryRecord& rec : records) {
    json j = record_to_json(basis, channels, rec);
    if (extra_key) j[extra_key] = extra_value;
    out += j.dump();
    out += '\n';
  }
  return out;
}

struct KindOutput {
  std::string csv;
  std::string jsonl;  // empty -> no .jsonl file for this kind
  json results = json::object();
  std::vector<std::string> warnings;
};

TrajectoryOptions trajectory_options(const ExperimentSpec& spec,
                                     const std::vector<double>& grid,
                                     const VectorC& target) {
  TrajectoryOptions topt;
  topt.t0 = spec.t0;
  topt.t1 = spec.t1;
  topt.sample_grid = grid;
  topt.ode = spec.ode;
  topt.target_state = target;
  return topt;
}

KindOutput run_spectrum(const ExperimentSpec& spec, const Hamiltonian& h) {
  KindOutput out;
  const VectorC psi0 = initial_state(spec, h.basis());
  int start = 0;
  psi0.cwiseAbs().maxCoeff(&start);
  const std::vector<int> subspace = h.reachable_subspace(start);
  const std::vector<double> grid = uniform_grid(spec.t0, spec.t1, spec.dt_sample);
  const LevelTracks tracks = track_levels(h, grid, subspace);

  std::vector<std::string> header{"t"};
  for (Eigen::Index l = 0; l < tracks.energies.cols(); ++l)
    header.push_back("level" + std::to_string(l));
  out.csv = csv_row(header);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<std::string> row{format_double(grid[i])};
    for (Eigen::Index l = 0; l < tracks.energies.cols(); ++l)
      row.push_back(format_double(tracks.energies((Eigen::Index)i, l)));
    out.csv += csv_row(row);
  }
  out.results["levels"] = (long)tracks.energies.cols();
  out.results["subspace_dimension"] = (long)subspace.size();
  if (tracks.min_overlap.size() > 0 && tracks.min_overlap.minCoeff() < 0.4) {
    char buf[96];
    std::snprintf(buf, sizeof(buf),
                  "level tracking became ambiguous (overlap %.3f)",
                  tracks.min_overlap.minCoeff());
    out.warnings.push_back(buf);
  }
  return out;
}

KindOutput run_dark_states(const ExperimentSpec& spec, const Hamiltonian& h) {
  KindOutput out;
  const double gs = h.g(spec.evaluate_time);
  const double om = h.omega(spec.evaluate_time);
  out.csv = csv_row({"k", "residual", "zero_space_overlap"});
  for (int k = 0;; ++k) {
    VectorC v;
    try {
      v = analytic_dark_state(h.ops(), k, gs, om);
    } catch (const std::exception&) {
      if (k == 0) throw;  // no closed form for this level scheme at all
      break;
    }
    const double residual = (h.interaction_at(gs, om) * v).norm();
    int start = 0;
    v.cwiseAbs().maxCoeff(&start);
    const std::vector<int> subspace = h.reachable_subspace(start);
    const Spectrum sp = instantaneous_spectrum(h, spec.evaluate_time, subspace);
    VectorC v_sub(subspace.size());
    for (std::size_t i = 0; i < subspace.size(); ++i) v_sub[i] = v[subspace[i]];
    // The reachable manifold can hold several zero-energy states, and a
    // degenerate eigenbasis is arbitrary; project onto the whole near-zero
    // subspace instead of any single eigenvector.
    const double zero_tol =
        1e-6 * std::max(1.0, sp.energies.cwiseAbs().maxCoeff());
    double overlap_sq = 0.0;
    for (int i = 0; i < sp.energies.size(); ++i)
      if (std::abs(sp.energies[i]) <= zero_tol)
        overlap_sq += std::norm(v_sub.dot(sp.vectors.col(i)));
    out.csv += csv_row({std::to_string(k), format_double(residual),
                        format_double(std::sqrt(overlap_sq))});
  }
  return out;
}

KindOutput run_landau_zener(const ExperimentSpec& spec) {
  KindOutput out;
  // The two-level reduction is built on the first two zero-energy
  // superpositions of the full two-polarization coupling; make sure the
  // photon cutoff admits both, whatever the launching config was tuned for.
  SystemParams params = spec.system;
  params.single_polarization = false;
  params.n_max = std::max(params.n_max, (int)std::lround(params.F_ground) + 1);
  const Hamiltonian h(params);
  const double p = landau_zener_probability(h, spec.t0, spec.t1);
  out.csv = csv_row({"delta", "probability"});
  out.csv += csv_row({format_double(spec.system.delta_plus), format_double(p)});
  out.results["probability"] = p;
  return out;
}

KindOutput run_single_trajectory(const ExperimentSpec& spec,
                                 const Hamiltonian& h) {
  KindOutput out;
  const VectorC psi0 = initial_state(spec, h.basis());
  const VectorC target = resolve_target(spec, h.ops());
  const std::vector<double> grid = uniform_grid(spec.t0, spec.t1, spec.dt_sample);
  const auto channels =
      standard_collapse_set(h.ops(), spec.system.kappa, spec.system.gamma);
  const TrajectoryResult tr = run_trajectory(
      h, channels, psi0, spec.seed, trajectory_options(spec, grid, target));

  std::vector<std::pair<std::string, Eigen::VectorXd>> extra;
  if (target.size() > 0) extra.emplace_back("target", tr.target_overlap);
  out.csv = occupation_table(h.basis(), grid, tr.occupations,
                             spec.csv_min_occupation, extra);
  check_cutoff_leakage(h.basis(), tr.occupations, out.warnings);

  TrajectoryRecord rec;
  rec.seed = tr.seed;
  rec.events = tr.events;
  rec.degenerate_jumps = tr.degenerate_jumps;
  for (int i = 0; i < tr.final_state.size(); ++i) {
    const double p = std::norm(tr.final_state[i]);
    if (p > 1e-9) rec.final_probs.emplace_back(i, p);
  }
  out.jsonl = records_to_jsonl(h.basis(), channels, {rec});
  out.results["jumps"] = (long)tr.events.size();
  return out;
}

KindOutput run_ensemble_kind(const ExperimentSpec& spec, const Hamiltonian& h) {
  KindOutput out;
  const VectorC psi0 = initial_state(spec, h.basis());
  const VectorC target = resolve_target(spec, h.ops());
  const std::vector<double> grid = uniform_grid(spec.t0, spec.t1, spec.dt_sample);
  const auto channels =
      standard_collapse_set(h.ops(), spec.system.kappa, spec.system.gamma);

  EnsembleOptions eopt;
  eopt.n_traj = spec.n_traj;
  eopt.jobs = resolved_jobs(spec);
  eopt.trajectory = trajectory_options(spec, grid, target);
  eopt.target_state = target;
  const EnsembleResult res = run_ensemble(h, channels, psi0, spec.seed, eopt);

  std::vector<std::pair<std::string, Eigen::VectorXd>> extra;
  if (target.size() > 0) {
    extra.emplace_back("target", res.target_mean);
    extra.emplace_back("target_stderr", res.target_stderr());
  }
  out.csv = occupation_table(h.basis(), grid, res.mean, spec.csv_min_occupation,
                             extra);
  check_cutoff_leakage(h.basis(), res.mean, out.warnings);
  out.jsonl = records_to_jsonl(h.basis(), channels, res.records);
  out.results["total_jumps"] = res.total_jumps;
  if (target.size() > 0)
    out.results["final_target_probability"] =
        res.target_mean[res.target_mean.size() - 1];
  return out;
}

KindOutput run_master_kind(const ExperimentSpec& spec, const Hamiltonian& h) {
  KindOutput out;
  const VectorC psi0 = initial_state(spec, h.basis());
  const VectorC target = resolve_target(spec, h.ops());
  const auto channels =
      standard_collapse_set(h.ops(), spec.system.kappa, spec.system.gamma);

  MasterOptions mopt;
  mopt.t0 = spec.t0;
  mopt.t1 = spec.t1;
  mopt.sample_grid = uniform_grid(spec.t0, spec.t1, spec.dt_sample);
  mopt.ode = spec.ode;
  const MasterResult res = solve_master_equation(h, channels, psi0, mopt);

  out.csv = occupation_table(h.basis(), res.times, res.occupations,
                             spec.csv_min_occupation, {});
  check_cutoff_leakage(h.basis(), res.occupations, out.warnings);
  if (res.trace_warning) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "density-matrix trace drifted by %.3g",
                  res.max_trace_drift);
    out.warnings.push_back(buf);
  }
  if (target.size() > 0 && res.final_density.size() > 0)
    out.results["final_target_probability"] =
        (target.adjoint() * res.final_density * target)(0, 0).real();
  return out;
}

KindOutput run_sweep_detuning(const ExperimentSpec& spec) {
  KindOutput out;
  out.csv = csv_row({"delta", "probability", "std_error", "method"});
  const bool both =
      spec.sweep_parameter.empty() || spec.sweep_parameter == "delta";

  auto run_point = [&](double delta, std::size_t i) {
    SystemParams params = spec.system;
    params.delta_plus = delta;
    if (both) params.delta_minus = delta;
    const Hamiltonian h(params);
    const VectorC psi0 = initial_state(spec, h.basis());
    const VectorC target = resolve_target(spec, h.ops());
    if (target.size() == 0)
      throw std::invalid_argument("sweep-detuning requires a target state");
    const auto channels =
        standard_collapse_set(h.ops(), params.kappa, params.gamma);

    if (h.dimension() <= MasterOptions().dimension_guard) {
      MasterOptions mopt;
      mopt.t0 = spec.t0;
      mopt.t1 = spec.t1;
      mopt.sample_grid = {spec.t1};
      mopt.ode = spec.ode;
      const MasterResult res = solve_master_equation(h, channels, psi0, mopt);
      const double p =
          (target.adjoint() * res.final_density * target)(0, 0).real();
      out.csv += csv_row({format_double(delta), format_double(p),
                          format_double(0.0), "master"});
    } else {
      EnsembleOptions eopt;
      eopt.n_traj = spec.n_traj;
      eopt.jobs = resolved_jobs(spec);
      eopt.trajectory = trajectory_options(spec, {spec.t1}, target);
      eopt.target_state = target;
      eopt.keep_records = false;
      const EnsembleResult res = run_ensemble(
          h, channels, psi0, derive_seed(spec.seed, (std::uint64_t)i), eopt);
      const double p = res.target_mean[res.target_mean.size() - 1];
      const double se = res.target_stderr()[res.target_mean.size() - 1];
      out.csv += csv_row({format_double(delta), format_double(p),
                          format_double(se), "ensemble"});
    }
  };

  for (std::size_t i = 0; i < spec.sweep_values.size(); ++i) {
    try {
      run_point(spec.sweep_values[i], i);
    } catch (const std::invalid_argument&) {
      throw;  // configuration problems are not tied to one sweep point
    } catch (const std::exception& e) {
      throw std::runtime_error("delta = " + format_double(spec.sweep_values[i]) +
                               ": " + e.what());
    }
  }
  return out;
}

KindOutput run_correlate_ghz(const ExperimentSpec& spec) {
  KindOutput out;
  const Hamiltonian h(spec.system);
  const VectorC psi0 = initial_state(spec, h.basis());
  const int stations = (int)spec.analyzers.angles.size();
  PostSelectionRule rule;
  rule.required_total = stations;
  rule.max_per_analyzer = 1;

  std::vector<double> shifts = spec.sweep_values;
  if (shifts.empty()) shifts.push_back(0.0);

  out.csv = csv_row(
      {"angle", "mean", "std_error", "n_accepted", "n_total", "ideal"});
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    AnalyzerConfig an = spec.analyzers;
    for (double& a : an.angles) a += shifts[i];
    const auto channels = detector_collapse_set(h.ops(), spec.system.kappa,
                                                spec.system.gamma, an);
    EnsembleOptions eopt;
    eopt.n_traj = spec.n_traj;
    eopt.jobs = resolved_jobs(spec);
    eopt.trajectory = trajectory_options(spec, {spec.t1}, VectorC());
    eopt.keep_occupations = false;
    const EnsembleResult res = run_ensemble(
        h, channels, psi0, derive_seed(spec.seed, (std::uint64_t)i), eopt);
    const CorrelationEstimate est =
        estimate_triple_correlation(res.records, channels, rule);
    const double ideal = ghz_expectation(stations, 1.0 / std::sqrt(2.0),
                                         1.0 / std::sqrt(2.0), an.angles);
    out.csv += csv_row({format_double(shifts[i]), format_double(est.mean),
                        format_double(est.std_error),
                        std::to_string(est.n_accepted),
                        std::to_string(est.n_total), format_double(ideal)});
    out.jsonl += records_to_jsonl(h.basis(), channels, res.records, "angle",
                                  shifts[i]);
  }
  return out;
}

KindOutput run_correlate_atom_photon(const ExperimentSpec& spec) {
  KindOutput out;
  const Hamiltonian h(spec.system);
  const VectorC psi0 = initial_state(spec, h.basis());
  const int stations = (int)spec.analyzers.angles.size();
  PostSelectionRule rule;
  rule.required_total = stations;
  rule.max_per_analyzer = 1;

  std::vector<double> thetas = spec.sweep_values;
  if (thetas.empty()) thetas.push_back(spec.analyzers.theta);
  const double angle_sum =
      spec.analyzers.angles[0] + spec.analyzers.angles[1];

  out.csv = csv_row(
      {"theta", "mean", "std_error", "n_accepted", "n_total", "ideal"});
  int residuals = 0;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    AnalyzerConfig an = spec.analyzers;
    an.theta = thetas[i];
    const auto channels = detector_collapse_set(h.ops(), spec.system.kappa,
                                                spec.system.gamma, an);
    EnsembleOptions eopt;
    eopt.n_traj = spec.n_traj;
    eopt.jobs = resolved_jobs(spec);
    eopt.trajectory = trajectory_options(spec, {spec.t1}, VectorC());
    eopt.keep_occupations = false;
    eopt.measure_atom = true;
    eopt.atom_theta = thetas[i];
    const EnsembleResult res = run_ensemble(
        h, channels, psi0, derive_seed(spec.seed, (std::uint64_t)i), eopt);
    residuals += res.atom_residual_warnings;
    const CorrelationEstimate est =
        estimate_atom_photon_correlation(res.records, channels, rule);
    out.csv += csv_row({format_double(thetas[i]), format_double(est.mean),
                        format_double(est.std_error),
                        std::to_string(est.n_accepted),
                        std::to_string(est.n_total),
                        format_double(std::cos(angle_sum + thetas[i]))});
    out.jsonl += records_to_jsonl(h.basis(), channels, res.records, "theta",
                                  thetas[i]);
  }
  if (residuals > 0) {
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "%d final states kept excited-level population above the "
                  "atomic analyzer tolerance",
                  residuals);
    out.warnings.push_back(buf);
  }
  return out;
}

KindOutput run_photon_histogram(const ExperimentSpec& spec) {
  KindOutput out;
  std::vector<double> kappas = spec.sweep_values;
  if (kappas.empty()) kappas.push_back(spec.system.kappa);

  out.csv = csv_row({"kappa", "count", "probability"});
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    SystemParams params = spec.system;
    params.kappa = kappas[i];
    const Hamiltonian h(params);
    const VectorC psi0 = initial_state(spec, h.basis());
    const auto channels =
        standard_collapse_set(h.ops(), params.kappa, params.gamma);
    EnsembleOptions eopt;
    eopt.n_traj = spec.n_traj;
    eopt.jobs = resolved_jobs(spec);
    eopt.trajectory = trajectory_options(spec, {spec.t1}, VectorC());
    eopt.keep_occupations = false;
    const EnsembleResult res = run_ensemble(
        h, channels, psi0, derive_seed(spec.seed, (std::uint64_t)i), eopt);
    const std::vector<double> hist =
        photon_count_histogram(res.records, channels);
    for (std::size_t c = 0; c < hist.size(); ++c)
      out.csv += csv_row({format_double(kappas[i]), std::to_string(c),
                          format_double(hist[c])});
    out.jsonl += records_to_jsonl(h.basis(), channels, res.records, "kappa",
                                  kappas[i]);
  }
  return out;
}

}  // namespace

RunOutcome run_experiment(const ExperimentSpec& spec) {
  if (spec.out_prefix.empty())
    throw std::invalid_argument("out: an output path prefix is required");
  const auto t_start = std::chrono::steady_clock::now();

  json manifest;
  manifest["version"] = kToolVersion;
  manifest["rng"] = "mt19937_64";
  manifest["kind"] = spec.kind;
  manifest["config"] = json::parse(spec_to_json(spec));

  RunOutcome outcome;
  KindOutput result;
  try {
    const ExperimentSpec& s = spec;
    if (s.kind == "spectrum") {
      result = run_spectrum(s, Hamiltonian(s.system));
    } else if (s.kind == "dark-states") {
      result = run_dark_states(s, Hamiltonian(s.system));
    } else if (s.kind == "landau-zener") {
      result = run_landau_zener(s);
    } else if (s.kind == "trajectory") {
      result = run_single_trajectory(s, Hamiltonian(s.system));
    } else if (s.kind == "ensemble") {
      result = run_ensemble_kind(s, Hamiltonian(s.system));
    } else if (s.kind == "master") {
      result = run_master_kind(s, Hamiltonian(s.system));
    } else if (s.kind == "sweep-detuning") {
      result = run_sweep_detuning(s);
    } else if (s.kind == "correlate-ghz") {
      result = run_correlate_ghz(s);
    } else if (s.kind == "correlate-atom-photon") {
      result = run_correlate_atom_photon(s);
    } else if (s.kind == "photon-histogram") {
      result = run_photon_histogram(s);
    } else {
      throw std::invalid_argument("unknown experiment kind '" + s.kind + "'");
    }
  } catch (const std::exception& e) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
    manifest["status"] = "failed";
    manifest["error"] = e.what();
    manifest["duration_seconds"] = secs;
    manifest["outputs"] = json::array();
    write_file_atomic(spec.out_prefix + ".manifest.json",
                      manifest.dump(2) + "\n");
    throw;
  }

  auto emit = [&](const std::string& path, const std::string& content) {
    write_file_atomic(path, content);
    OutputFile f;
    f.path = path;
    f.digest = fnv1a64(content);
    f.bytes = content.size();
    outcome.files.push_back(f);
  };
  emit(spec.out_prefix + ".csv", result.csv);
  if (!result.jsonl.empty()) emit(spec.out_prefix + ".jsonl", result.jsonl);

  outcome.warnings = result.warnings;
  outcome.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  manifest["status"] = "ok";
  manifest["duration_seconds"] = outcome.seconds;
  manifest["warnings"] = outcome.warnings;
  if (!result.results.empty()) manifest["results"] = result.results;
  json outputs = json::array();
  for (const OutputFile& f : outcome.files) {
    char digest[24];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  (unsigned long long)f.digest);
    outputs.push_back(
        {{"path", f.path}, {"bytes", f.bytes}, {"fnv1a64", digest}});
  }
  manifest["outputs"] = outputs;

  const std::string manifest_path = spec.out_prefix + ".manifest.json";
  const std::string manifest_text = manifest.dump(2) + "\n";
  write_file_atomic(manifest_path, manifest_text);
  OutputFile mf;
  mf.path = manifest_path;
  mf.digest = fnv1a64(manifest_text);
  mf.bytes = manifest_text.size();
  outcome.files.push_back(mf);
  return outcome;
}

}  // namespace capsim
