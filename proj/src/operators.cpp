#include "capsim/operators.hpp"

#include <cmath>
#include <vector>

#include "capsim/angular.hpp"

namespace capsim {

namespace {

using Triplet = Eigen::Triplet<Cplx>;

SparseC from_triplets(int dim, const std::vector<Triplet>& t) {
  SparseC m(dim, dim);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace

SystemOperators SystemOperators::build(const Basis& basis) {
  const int dim = basis.dimension();
  SystemOperators ops{basis};

  std::vector<Triplet> tp, tm;
  ops.n_plus = Eigen::VectorXd::Zero(dim);
  ops.n_minus = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < dim; ++i) {
    const BasisState& s = basis.state(i);
    ops.n_plus[i] = s.n_plus;
    ops.n_minus[i] = s.n_minus;
    if (s.n_plus > 0) {
      const int j = basis.index_of(s.level, s.twom, s.n_plus - 1, s.n_minus);
      tp.emplace_back(j, i, std::sqrt((double)s.n_plus));  // a|n> = sqrt(n)|n-1>
    }
    if (s.n_minus > 0) {
      const int j = basis.index_of(s.level, s.twom, s.n_plus, s.n_minus - 1);
      tm.emplace_back(j, i, std::sqrt((double)s.n_minus));
    }
  }
  ops.a_plus = from_triplets(dim, tp);
  ops.a_minus = from_triplets(dim, tm);

  const int two_Fg = basis.two_F_ground(), two_Fe = basis.two_F_excited();
  for (int sigma = -1; sigma <= 1; ++sigma) {
    std::vector<Triplet> ta;
    for (int i = 0; i < dim; ++i) {
      const BasisState& s = basis.state(i);
      if (s.level != 1) continue;  // lowering acts on excited states
      const int twom_g = s.twom - 2 * sigma;
      if (std::abs(twom_g) > two_Fg) continue;
      const double c = dipole_cg(two_Fg, twom_g, sigma, two_Fe);
      if (c == 0.0) continue;
      const int j = basis.index_of(0, twom_g, s.n_plus, s.n_minus);
      ta.emplace_back(j, i, c);
    }
    ops.lowering[sigma + 1] = from_triplets(dim, ta);
  }

  const SparseC& Ap = ops.lowering_op(+1);
  const SparseC& Am = ops.lowering_op(-1);
  const SparseC& A0 = ops.lowering_op(0);
  SparseC plus_term = SparseC(ops.a_plus.adjoint()) * Ap;
  SparseC minus_term = SparseC(ops.a_minus.adjoint()) * Am;
  ops.coupling_structure_single = minus_term - SparseC(minus_term.adjoint());
  ops.coupling_structure =
      plus_term - SparseC(plus_term.adjoint()) + ops.coupling_structure_single;
  ops.pump_structure = A0 - SparseC(A0.adjoint());
  ops.coupling_structure.makeCompressed();
  ops.coupling_structure_single.makeCompressed();
  ops.pump_structure.makeCompressed();

  ops.excited_weight = Eigen::VectorXd::Zero(dim);
  for (int sigma = -1; sigma <= 1; ++sigma) {
    const SparseC& A = ops.lowering_op(sigma);
    SparseC AdA = SparseC(A.adjoint()) * A;
    for (int k = 0; k < AdA.outerSize(); ++k)
      for (SparseC::InnerIterator it(AdA, k); it; ++it)
        if (it.row() == it.col()) ops.excited_weight[it.row()] += it.value().real();
  }
  return ops;
}

Eigen::VectorXd SystemOperators::loss_diagonal(double kappa, double gamma) const {
  return kappa * (n_plus + n_minus) + 0.5 * gamma * excited_weight;
}

}  // namespace capsim
