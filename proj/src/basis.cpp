#include "capsim/basis.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace capsim {

std::uint64_t Basis::key(int level, int twom, int n_plus, int n_minus) {
  // twom ranges over small signed values; bias it into unsigned space.
  return (std::uint64_t)(level & 1) << 48 | (std::uint64_t)(twom + 512) << 32 |
         (std::uint64_t)(n_plus & 0xffff) << 16 | (std::uint64_t)(n_minus & 0xffff);
}

Basis::Basis(int two_F_ground, int two_F_excited, int n_max)
    : two_Fg_(two_F_ground), two_Fe_(two_F_excited), n_max_(n_max) {
  if (two_Fg_ < 0 || two_Fe_ < 0 || n_max_ < 0)
    throw std::invalid_argument("Basis: negative argument");
  for (int level = 0; level <= 1; ++level) {
    const int twoF = (level == 0) ? two_Fg_ : two_Fe_;
    for (int twom = -twoF; twom <= twoF; twom += 2) {
      for (int np = 0; np <= n_max_; ++np) {
        for (int nm = 0; nm <= n_max_; ++nm) {
          index_[key(level, twom, np, nm)] = (int)states_.size();
          states_.push_back(BasisState{level, twom, np, nm});
        }
      }
    }
  }
}

int Basis::index_of(int level, int twom, int n_plus, int n_minus) const {
  auto it = index_.find(key(level, twom, n_plus, n_minus));
  return it == index_.end() ? -1 : it->second;
}

std::string Basis::label_of(const BasisState& s) {
  char m_part[16];
  if (s.twom % 2 == 0)
    std::snprintf(m_part, sizeof m_part, "%+d", s.twom / 2);
  else
    std::snprintf(m_part, sizeof m_part, "%+d/2", s.twom);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%c%s|%d,%d", s.level == 0 ? 'g' : 'e', m_part,
                s.n_plus, s.n_minus);
  return buf;
}

std::string Basis::label(int i) const { return label_of(states_[i]); }

int Basis::parse_label(const std::string& label) const {
  if (label.size() < 6) return -1;
  int level;
  if (label[0] == 'g')
    level = 0;
  else if (label[0] == 'e')
    level = 1;
  else
    return -1;
  const auto bar = label.find('|');
  if (bar == std::string::npos) return -1;
  const std::string m_part = label.substr(1, bar - 1);
  int twom;
  const auto slash = m_part.find('/');
  try {
    if (slash == std::string::npos)
      twom = 2 * std::stoi(m_part);
    else
      twom = std::stoi(m_part.substr(0, slash));
  } catch (...) {
    return -1;
  }
  int np, nm;
  if (std::sscanf(label.c_str() + bar + 1, "%d,%d", &np, &nm) != 2) return -1;
  return index_of(level, twom, np, nm);
}

Basis enumerate_basis(double F_ground, double F_excited, int n_max) {
  auto two = [](double x) {
    double t = 2.0 * x;
    double r = std::round(t);
    if (std::abs(t - r) > 1e-9)
      throw std::invalid_argument("enumerate_basis: F must be integer or half-integer");
    return (int)r;
  };
  return Basis(two(F_ground), two(F_excited), n_max);
}

}  // namespace capsim
