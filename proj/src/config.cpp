#include "capsim/config.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "capsim/preset_data.hpp"
#include "capsim/spectral.hpp"
#include "json.hpp"

namespace capsim {

namespace {

using nlohmann::json;

const std::set<std::string>& valid_kinds() {
  static const std::set<std::string> kinds = {
      "spectrum",        "dark-states", "landau-zener",
      "trajectory",      "ensemble",    "master",
      "sweep-detuning",  "correlate-ghz", "correlate-atom-photon",
      "photon-histogram"};
  return kinds;
}

// Allowed keys per object path ("" = document root).  Keys not listed under a
// known object path are reported as unknown.
const std::map<std::string, std::set<std::string>>& key_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"",
       {"preset", "kind", "description", "seed", "n_traj", "jobs", "out",
        "system", "initial", "time", "ode", "analyzers", "target",
        "evaluate_time", "sweep", "csv_min_occupation"}},
      {"system",
       {"F_ground", "F_excited", "n_max", "delta_plus", "delta_minus", "kappa",
        "gamma", "single_polarization", "g", "omega"}},
      {"system.g", {"amplitude", "center", "fwhm"}},
      {"system.omega", {"amplitude", "center", "fwhm"}},
      {"time", {"t0", "t1", "dt_sample"}},
      {"ode", {"rtol", "atol"}},
      {"analyzers", {"angles", "theta"}},
      {"sweep", {"parameter", "values"}},
      {"initial", {"superposition"}},
      {"initial.superposition[]", {"state", "amplitude"}},
  };
  return schema;
}

void collect_unknown(const json& node, const std::string& path,
                     std::vector<std::string>& unknown) {
  if (!node.is_object()) return;
  const auto& schema = key_schema();
  const auto it = schema.find(path);
  if (it == schema.end()) return;  // free-form subtree (none at present)
  for (const auto& [key, value] : node.items()) {
    if (!it->second.count(key)) {
      unknown.push_back(path.empty() ? key : path + "." + key);
      continue;
    }
    const std::string child = path.empty() ? key : path + "." + key;
    if (value.is_object()) {
      collect_unknown(value, child, unknown);
    } else if (value.is_array() && schema.count(child + "[]")) {
      for (const auto& item : value) collect_unknown(item, child + "[]", unknown);
    }
  }
}

struct Reader {
  std::vector<std::string> errors;

  void fail(const std::string& msg) { errors.push_back(msg); }

  bool finite(double x) { return std::isfinite(x); }

  double number(const json& obj, const std::string& path, const char* key,
                double fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      fail(path + key + ": expected a number");
      return fallback;
    }
    const double x = v.get<double>();
    if (!finite(x)) fail(path + key + ": value must be finite");
    return x;
  }

  // Numeric field with a lower bound; `strict` excludes the bound itself.
  double bounded(const json& obj, const std::string& path, const char* key,
                 double fallback, double lo, bool strict) {
    const double x = number(obj, path, key, fallback);
    if ((strict && !(x > lo)) || (!strict && !(x >= lo))) {
      std::ostringstream os;
      os << path << key << " = " << x << " violates the bound " << path << key
         << (strict ? " > " : " >= ") << lo;
      fail(os.str());
    }
    return x;
  }

  long long integer(const json& obj, const std::string& path, const char* key,
                    long long fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (v.is_number_integer() || v.is_number_unsigned())
      return v.get<long long>();
    fail(path + key + ": expected an integer");
    return fallback;
  }

  bool boolean(const json& obj, const std::string& path, const char* key,
               bool fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (v.is_boolean()) return v.get<bool>();
    fail(path + key + ": expected true or false");
    return fallback;
  }

  std::string text(const json& obj, const std::string& path, const char* key,
                   const std::string& fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (v.is_string()) return v.get<std::string>();
    fail(path + key + ": expected a string");
    return fallback;
  }
};

GaussianPulse read_pulse(Reader& r, const json& sys, const char* key,
                         const GaussianPulse& fallback, const std::string& path) {
  GaussianPulse p = fallback;
  if (!sys.is_object() || !sys.contains(key)) return p;
  const json& obj = sys.at(key);
  if (!obj.is_object()) {
    r.fail(path + key + ": expected an object {amplitude, center, fwhm}");
    return p;
  }
  const std::string sub = path + key + ".";
  p.amplitude = r.bounded(obj, sub, "amplitude", p.amplitude, 0.0, false);
  p.center = r.number(obj, sub, "center", p.center);
  p.fwhm = r.bounded(obj, sub, "fwhm", p.fwhm, 0.0, true);
  return p;
}

bool half_integer_spin(double f) {
  return f >= 0.0 && std::abs(2.0 * f - std::lround(2.0 * f)) < 1e-9;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : preset_table()) names.push_back(name);
  return names;
}

ExperimentSpec parse_experiment(const std::string& config_text) {
  json doc;
  try {
    doc = json::parse(config_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") +
                                e.what());
  }
  if (!doc.is_object())
    throw std::invalid_argument("config must be a JSON object");

  if (doc.contains("preset")) {
    if (!doc.at("preset").is_string())
      throw std::invalid_argument("preset: expected a preset name string");
    const std::string name = doc.at("preset").get<std::string>();
    const auto& table = preset_table();
    const auto it = table.find(name);
    if (it == table.end()) {
      std::string msg = "unknown preset '" + name + "'; available:";
      for (const auto& [n, t] : table) msg += " " + n;
      throw std::invalid_argument(msg);
    }
    json base = json::parse(it->second, nullptr, true, /*ignore_comments=*/true);
    if (base.contains("preset"))
      throw std::invalid_argument("preset '" + name +
                                  "' itself names a preset; chaining is not "
                                  "supported");
    doc.erase("preset");
    base.merge_patch(doc);
    doc = std::move(base);
  }

  std::vector<std::string> unknown;
  collect_unknown(doc, "", unknown);
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw std::invalid_argument(msg);
  }

  Reader r;
  ExperimentSpec spec;

  spec.kind = r.text(doc, "", "kind", "");
  if (spec.kind.empty()) {
    r.fail("kind: required key missing");
  } else if (!valid_kinds().count(spec.kind)) {
    std::string msg = "kind '" + spec.kind + "' is not one of:";
    for (const auto& k : valid_kinds()) msg += " " + k;
    r.fail(msg);
  }
  spec.description = r.text(doc, "", "description", "");

  const long long seed = r.integer(doc, "", "seed", 1);
  if (seed < 0)
    r.fail("seed = " + std::to_string(seed) + " violates the bound seed >= 0");
  spec.seed = (std::uint64_t)seed;
  const long long n_traj = r.integer(doc, "", "n_traj", 2000);
  if (n_traj < 1)
    r.fail("n_traj = " + std::to_string(n_traj) +
           " violates the bound n_traj >= 1");
  spec.n_traj = (int)n_traj;
  const long long jobs = r.integer(doc, "", "jobs", 0);
  if (jobs < 0)
    r.fail("jobs = " + std::to_string(jobs) + " violates the bound jobs >= 0");
  spec.jobs = (int)jobs;
  spec.out_prefix = r.text(doc, "", "out", "");
  spec.csv_min_occupation =
      r.bounded(doc, "", "csv_min_occupation", 1e-4, 0.0, false);
  spec.evaluate_time = r.number(doc, "", "evaluate_time", 20.0);

  const json sys = doc.contains("system") ? doc.at("system") : json::object();
  if (!sys.is_object()) r.fail("system: expected an object");
  const json sys_obj = sys.is_object() ? sys : json::object();
  spec.system.F_ground = r.number(sys_obj, "system.", "F_ground", 3.0);
  spec.system.F_excited = r.number(sys_obj, "system.", "F_excited", 3.0);
  if (!half_integer_spin(spec.system.F_ground))
    r.fail("system.F_ground must be a nonnegative integer or half-integer");
  if (!half_integer_spin(spec.system.F_excited))
    r.fail("system.F_excited must be a nonnegative integer or half-integer");
  const long long n_max = r.integer(sys_obj, "system.", "n_max", 7);
  if (n_max < 1)
    r.fail("system.n_max = " + std::to_string(n_max) +
           " violates the bound system.n_max >= 1");
  spec.system.n_max = (int)n_max;
  spec.system.delta_plus = r.number(sys_obj, "system.", "delta_plus", 0.0);
  spec.system.delta_minus = r.number(sys_obj, "system.", "delta_minus", 0.0);
  spec.system.kappa = r.bounded(sys_obj, "system.", "kappa", 0.0, 0.0, false);
  spec.system.gamma = r.bounded(sys_obj, "system.", "gamma", 1.0, 0.0, true);
  spec.system.single_polarization =
      r.boolean(sys_obj, "system.", "single_polarization", false);
  spec.system.g = read_pulse(r, sys_obj, "g", GaussianPulse{25.0, 17.0, 10.0},
                             "system.");
  spec.system.omega = read_pulse(r, sys_obj, "omega",
                                 GaussianPulse{50.0, 23.0, 10.0}, "system.");

  const json time_obj = doc.contains("time") ? doc.at("time") : json::object();
  if (!time_obj.is_object()) {
    r.fail("time: expected an object");
  } else {
    spec.t0 = r.number(time_obj, "time.", "t0", 0.0);
    spec.t1 = r.number(time_obj, "time.", "t1", 40.0);
    spec.dt_sample = r.bounded(time_obj, "time.", "dt_sample", 0.25, 0.0, true);
    if (!(spec.t1 > spec.t0)) r.fail("time.t1 must satisfy time.t1 > time.t0");
  }

  const json ode_obj = doc.contains("ode") ? doc.at("ode") : json::object();
  if (!ode_obj.is_object()) {
    r.fail("ode: expected an object");
  } else {
    spec.ode.rtol = r.bounded(ode_obj, "ode.", "rtol", 1e-8, 0.0, true);
    spec.ode.atol = r.bounded(ode_obj, "ode.", "atol", 1e-12, 0.0, true);
  }

  if (doc.contains("analyzers")) {
    const json& an = doc.at("analyzers");
    if (!an.is_object()) {
      r.fail("analyzers: expected an object");
    } else {
      spec.analyzers.theta = r.number(an, "analyzers.", "theta", 0.0);
      if (an.contains("angles")) {
        const json& angles = an.at("angles");
        if (!angles.is_array()) {
          r.fail("analyzers.angles: expected an array of numbers");
        } else {
          for (const auto& a : angles) {
            if (!a.is_number() || !std::isfinite(a.get<double>())) {
              r.fail("analyzers.angles: every entry must be a finite number");
              break;
            }
            spec.analyzers.angles.push_back(a.get<double>());
          }
        }
      }
    }
  }

  spec.target = r.text(doc, "", "target", "");

  if (doc.contains("sweep")) {
    const json& sw = doc.at("sweep");
    if (!sw.is_object()) {
      r.fail("sweep: expected an object");
    } else {
      spec.sweep_parameter = r.text(sw, "sweep.", "parameter", "");
      if (sw.contains("values")) {
        const json& vals = sw.at("values");
        if (!vals.is_array()) {
          r.fail("sweep.values: expected an array of numbers");
        } else {
          for (const auto& v : vals) {
            if (!v.is_number() || !std::isfinite(v.get<double>())) {
              r.fail("sweep.values: every entry must be a finite number");
              break;
            }
            spec.sweep_values.push_back(v.get<double>());
          }
        }
      }
      if (spec.sweep_values.empty())
        r.fail("sweep.values: at least one value is required when sweeping");
    }
  }

  // Initial state: label string or {"superposition": [{state, amplitude}]}.
  if (doc.contains("initial")) {
    const json& init = doc.at("initial");
    if (init.is_string()) {
      spec.initial_label = init.get<std::string>();
    } else if (init.is_object() && init.contains("superposition")) {
      const json& terms = init.at("superposition");
      if (!terms.is_array() || terms.empty()) {
        r.fail("initial.superposition: expected a nonempty array");
      } else {
        for (const auto& term : terms) {
          if (!term.is_object() || !term.contains("state") ||
              !term.contains("amplitude") || !term.at("state").is_string() ||
              !term.at("amplitude").is_array() ||
              term.at("amplitude").size() != 2) {
            r.fail(
                "initial.superposition: each term needs a state label and an "
                "amplitude [re, im]");
            break;
          }
          const double re = term.at("amplitude").at(0).get<double>();
          const double im = term.at("amplitude").at(1).get<double>();
          if (!std::isfinite(re) || !std::isfinite(im)) {
            r.fail("initial.superposition: amplitudes must be finite");
            break;
          }
          spec.initial_superposition.emplace_back(
              term.at("state").get<std::string>(), Cplx(re, im));
        }
      }
    } else {
      r.fail("initial: expected a basis label string or a superposition object");
    }
  }

  // Kind-specific requirements and label validation against the basis.
  const bool spins_ok = half_integer_spin(spec.system.F_ground) &&
                        half_integer_spin(spec.system.F_excited) && n_max >= 1;
  if (spins_ok) {
    const Basis basis((int)std::lround(2 * spec.system.F_ground),
                      (int)std::lround(2 * spec.system.F_excited),
                      spec.system.n_max);
    if (spec.initial_label.empty() && spec.initial_superposition.empty())
      spec.initial_label = basis.label(basis.index_of(
          0, -(int)std::lround(2 * spec.system.F_ground), 0, 0));
    if (spec.kind == "sweep-detuning" && spec.target.empty()) {
      // Default sweep observable: the fully transferred product state with
      // all photons in one circular mode.
      const int f = basis.two_F_ground() / 2;
      const int idx = basis.index_of(0, 0, 0, f);
      if (basis.two_F_ground() % 2 == 0 && idx >= 0)
        spec.target = basis.label(idx);
    }
    if (!spec.initial_label.empty() &&
        basis.parse_label(spec.initial_label) < 0)
      r.fail("initial: '" + spec.initial_label + "' is not a basis label");
    for (const auto& [label, amp] : spec.initial_superposition)
      if (basis.parse_label(label) < 0)
        r.fail("initial.superposition: '" + label + "' is not a basis label");
    if (!spec.target.empty() && spec.target != "ghz" &&
        spec.target.rfind("dark", 0) != 0 && basis.parse_label(spec.target) < 0)
      r.fail("target: '" + spec.target +
             "' is neither a basis label nor 'ghz'/'dark<k>'");
  }

  if (spec.kind == "sweep-detuning") {
    if (spec.sweep_values.empty())
      r.fail("sweep-detuning requires sweep.values");
    if (!spec.sweep_parameter.empty() && spec.sweep_parameter != "delta" &&
        spec.sweep_parameter != "delta_plus")
      r.fail("sweep-detuning sweeps 'delta' (both modes) or 'delta_plus'");
  }
  if (spec.kind == "correlate-ghz" && spec.analyzers.angles.size() != 3)
    r.fail("correlate-ghz requires analyzers.angles with exactly 3 entries");
  if (spec.kind == "correlate-atom-photon" &&
      spec.analyzers.angles.size() != 2)
    r.fail("correlate-atom-photon requires analyzers.angles with exactly 2 "
           "entries");
  if (spec.kind == "photon-histogram" && !spec.sweep_parameter.empty() &&
      spec.sweep_parameter != "kappa")
    r.fail("photon-histogram sweeps only 'kappa'");

  if (!r.errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : r.errors) msg += "\n  - " + e;
    throw std::invalid_argument(msg);
  }
  return spec;
}

std::string spec_to_json(const ExperimentSpec& spec) {
  json j;
  j["kind"] = spec.kind;
  if (!spec.description.empty()) j["description"] = spec.description;
  j["seed"] = spec.seed;
  j["n_traj"] = spec.n_traj;
  j["jobs"] = spec.jobs;
  if (!spec.out_prefix.empty()) j["out"] = spec.out_prefix;
  j["csv_min_occupation"] = spec.csv_min_occupation;
  j["evaluate_time"] = spec.evaluate_time;

  json sys;
  sys["F_ground"] = spec.system.F_ground;
  sys["F_excited"] = spec.system.F_excited;
  sys["n_max"] = spec.system.n_max;
  sys["delta_plus"] = spec.system.delta_plus;
  sys["delta_minus"] = spec.system.delta_minus;
  sys["kappa"] = spec.system.kappa;
  sys["gamma"] = spec.system.gamma;
  sys["single_polarization"] = spec.system.single_polarization;
  sys["g"] = {{"amplitude", spec.system.g.amplitude},
              {"center", spec.system.g.center},
              {"fwhm", spec.system.g.fwhm}};
  sys["omega"] = {{"amplitude", spec.system.omega.amplitude},
                  {"center", spec.system.omega.center},
                  {"fwhm", spec.system.omega.fwhm}};
  j["system"] = sys;

  if (!spec.initial_superposition.empty()) {
    json terms = json::array();
    for (const auto& [label, amp] : spec.initial_superposition)
      terms.push_back(
          {{"state", label}, {"amplitude", {amp.real(), amp.imag()}}});
    j["initial"] = {{"superposition", terms}};
  } else {
    j["initial"] = spec.initial_label;
  }

  j["time"] = {{"t0", spec.t0}, {"t1", spec.t1}, {"dt_sample", spec.dt_sample}};
  j["ode"] = {{"rtol", spec.ode.rtol}, {"atol", spec.ode.atol}};
  if (!spec.analyzers.angles.empty() || spec.analyzers.theta != 0.0)
    j["analyzers"] = {{"angles", spec.analyzers.angles},
                      {"theta", spec.analyzers.theta}};
  if (!spec.target.empty()) j["target"] = spec.target;
  if (!spec.sweep_values.empty()) {
    json sw;
    if (!spec.sweep_parameter.empty()) sw["parameter"] = spec.sweep_parameter;
    sw["values"] = spec.sweep_values;
    j["sweep"] = sw;
  }
  return j.dump(2) + "\n";
}

VectorC initial_state(const ExperimentSpec& spec, const Basis& basis) {
  VectorC psi = VectorC::Zero(basis.dimension());
  if (!spec.initial_superposition.empty()) {
    for (const auto& [label, amp] : spec.initial_superposition) {
      const int idx = basis.parse_label(label);
      if (idx < 0)
        throw std::invalid_argument("initial state label '" + label +
                                    "' not in basis");
      psi[idx] += amp;
    }
  } else {
    const int idx = basis.parse_label(spec.initial_label);
    if (idx < 0)
      throw std::invalid_argument("initial state label '" + spec.initial_label +
                                  "' not in basis");
    psi[idx] = 1.0;
  }
  const double n = psi.norm();
  if (n <= 0.0)
    throw std::invalid_argument("initial state has zero norm");
  return psi / n;
}

VectorC resolve_target(const ExperimentSpec& spec, const SystemOperators& ops) {
  const Basis& basis = ops.basis;
  if (spec.target.empty()) return VectorC();
  if (spec.target == "ghz") {
    const int two_F = basis.two_F_ground();
    if (two_F % 2 != 0)
      throw std::invalid_argument("ghz target needs integer ground spin");
    const int F = two_F / 2;
    if (basis.n_max() < F)
      throw std::invalid_argument(
          "ghz target needs the photon cutoff at or above the ground spin");
    int left, right;
    if (basis.two_F_excited() == two_F) {
      // Same-spin scheme: both passage branches return the atom to m = 0 and
      // the photon multiplet alone carries the entanglement.
      left = basis.index_of(0, 0, F, 0);
      right = basis.index_of(0, 0, 0, F);
    } else {
      // Lowered-spin scheme: the passage starts at m = 0 and the atom stays
      // entangled with the photon pair.
      left = basis.index_of(0, -two_F, F, 0);
      right = basis.index_of(0, two_F, 0, F);
    }
    VectorC psi = VectorC::Zero(basis.dimension());
    psi[left] = 1.0 / std::sqrt(2.0);
    psi[right] = 1.0 / std::sqrt(2.0);
    return psi;
  }
  if (spec.target.rfind("dark", 0) == 0) {
    const int k = std::stoi(spec.target.substr(4));
    return analytic_dark_state(ops, k, spec.system.g(spec.evaluate_time),
                               spec.system.omega(spec.evaluate_time));
  }
  const int idx = basis.parse_label(spec.target);
  if (idx < 0)
    throw std::invalid_argument("target state label '" + spec.target +
                                "' not in basis");
  VectorC psi = VectorC::Zero(basis.dimension());
  psi[idx] = 1.0;
  return psi;
}

}  // namespace capsim
