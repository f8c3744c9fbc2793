#include "capsim/hamiltonian.hpp"

#include <queue>

namespace capsim {

Hamiltonian::Hamiltonian(const SystemParams& params) : params_(params) {
  const Basis basis = enumerate_basis(params.F_ground, params.F_excited, params.n_max);
  ops_ = std::make_shared<const SystemOperators>(SystemOperators::build(basis));
  detuning_ = params.delta_plus * ops_->n_plus + params.delta_minus * ops_->n_minus;
  loss_ = ops_->loss_diagonal(params.kappa, params.gamma);
}

SparseC Hamiltonian::interaction_at(double g_value, double omega_value) const {
  const Cplx I(0.0, 1.0);
  SparseC h = (-I * g_value) * coupling_structure() +
              (I * omega_value) * ops_->pump_structure;
  for (int i = 0; i < dimension(); ++i)
    if (detuning_[i] != 0.0) h.coeffRef(i, i) += detuning_[i];
  h.makeCompressed();
  return h;
}

void Hamiltonian::apply_effective(double t, const VectorC& psi, VectorC& out) const {
  const Cplx I(0.0, 1.0);
  // -i H_eff = -i diag(detuning) - diag(loss) - g G + Omega P
  out = (-I * detuning_.array() - loss_.array()).matrix().cwiseProduct(psi);
  out.noalias() -= g(t) * (coupling_structure() * psi);
  out.noalias() += omega(t) * (ops_->pump_structure * psi);
}

std::vector<int> Hamiltonian::reachable_subspace(int start) const {
  const int dim = dimension();
  std::vector<char> seen(dim, 0);
  std::queue<int> frontier;
  seen[start] = 1;
  frontier.push(start);
  const SparseC& G = coupling_structure();
  const SparseC& P = ops_->pump_structure;
  auto visit_column = [&](const SparseC& m, int col) {
    for (SparseC::InnerIterator it(m, col); it; ++it)
      if (!seen[it.row()]) {
        seen[it.row()] = 1;
        frontier.push((int)it.row());
      }
  };
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    visit_column(G, i);  // G, P are antisymmetric: columns cover both directions
    visit_column(P, i);
  }
  std::vector<int> out;
  for (int i = 0; i < dim; ++i)
    if (seen[i]) out.push_back(i);
  return out;
}

}  // namespace capsim
