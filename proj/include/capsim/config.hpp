#pragma once
// Experiment configuration: a JSON document (line comments allowed) describing
// what to run and with which physical parameters.  Named presets resolve from
// a table compiled into the binary, user keys deep-override preset keys, and
// the resolved spec re-serializes to a canonical echo that parses back to an
// identical spec.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "capsim/collapse.hpp"
#include "capsim/hamiltonian.hpp"
#include "capsim/ode.hpp"

namespace capsim {

struct ExperimentSpec {
  std::string kind;  // spectrum | dark-states | landau-zener | trajectory |
                     // ensemble | master | sweep-detuning | correlate-ghz |
                     // correlate-atom-photon | photon-histogram
  std::string description;  // free-text note carried through to the manifest

  SystemParams system;

  // Initial state: either one basis label or a normalized superposition.
  std::string initial_label;  // empty -> ground edge state |g_{-F}, 0, 0>
  std::vector<std::pair<std::string, Cplx>> initial_superposition;

  double t0 = 0.0, t1 = 40.0, dt_sample = 0.25;
  IntegratorOptions ode;

  AnalyzerConfig analyzers;

  // Target state: basis label, "ghz" (edge-state + photon-pair superposition),
  // or "dark<k>" (analytic zero-energy state evaluated at evaluate_time).
  std::string target;
  double evaluate_time = 20.0;  // instant for spectrum/dark-state evaluation

  std::string sweep_parameter;  // "delta" | "delta_plus" | "kappa" | "angle" | "theta"
  std::vector<double> sweep_values;

  int n_traj = 2000;
  std::uint64_t seed = 1;
  int jobs = 0;  // 0 -> all available cores
  std::string out_prefix;
  double csv_min_occupation = 1e-4;  // column filter for occupation tables
};

// Parse a config document; resolves "preset" references and validates.
// Throws std::invalid_argument listing unknown keys, missing required keys,
// or range violations (quoting the violated bound).
ExperimentSpec parse_experiment(const std::string& config_text);

// Canonical serialization; parse_experiment(spec_to_json(s)) reproduces s.
std::string spec_to_json(const ExperimentSpec& spec);

// Names of the compiled-in presets.
std::vector<std::string> preset_names();

// Resolve the configured initial state in the given basis (normalized).
VectorC initial_state(const ExperimentSpec& spec, const Basis& basis);

// Resolve the configured target state; empty vector when no target applies.
VectorC resolve_target(const ExperimentSpec& spec, const SystemOperators& ops);

}  // namespace capsim
