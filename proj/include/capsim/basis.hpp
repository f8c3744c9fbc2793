#pragma once
// Product basis for one multilevel atom coupled to two cavity polarization
// modes: |x_m, n_plus, n_minus> with x in {ground, excited} Zeeman manifolds.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace capsim {

struct BasisState {
  int level;    // 0 = ground manifold, 1 = excited manifold
  int twom;     // doubled magnetic quantum number
  int n_plus;   // sigma+ mode photon number
  int n_minus;  // sigma- mode photon number
};

// Enumerates atom (x) tensor field (n_plus) tensor field (n_minus) states in a
// fixed canonical order: level-major (all ground states first), then m
// ascending, then n_plus ascending, then n_minus ascending.
class Basis {
 public:
  Basis(int two_F_ground, int two_F_excited, int n_max);

  int dimension() const { return (int)states_.size(); }
  const BasisState& state(int i) const { return states_[i]; }
  int two_F_ground() const { return two_Fg_; }
  int two_F_excited() const { return two_Fe_; }
  int n_max() const { return n_max_; }

  // Index of |level, twom, n_plus, n_minus>, or -1 if outside the basis.
  int index_of(int level, int twom, int n_plus, int n_minus) const;

  // Human-readable label, e.g. "g-3|0,0", "e+1/2|2,1".  Used for CSV column
  // headers and record keys; parse_label inverts it.
  std::string label(int i) const;
  static std::string label_of(const BasisState& s);
  // Returns the index for a label, or -1 if it does not name a basis state.
  int parse_label(const std::string& label) const;

  // Doubled conserved sector charge 2Q = twom + 2*(n_plus - n_minus).
  int charge_times_two(int i) const {
    const BasisState& s = states_[i];
    return s.twom + 2 * (s.n_plus - s.n_minus);
  }

 private:
  int two_Fg_, two_Fe_, n_max_;
  std::vector<BasisState> states_;
  std::unordered_map<std::uint64_t, int> index_;
  static std::uint64_t key(int level, int twom, int n_plus, int n_minus);
};

// Free-function form; F values given as 2F (use basis_from_spins for plain F).
inline Basis enumerate_basis2(int two_Fg, int two_Fe, int n_max) {
  return Basis(two_Fg, two_Fe, n_max);
}

// F values as doubles (integer or half-integer): enumerate_basis(3, 3, 7).
Basis enumerate_basis(double F_ground, double F_excited, int n_max);

}  // namespace capsim
