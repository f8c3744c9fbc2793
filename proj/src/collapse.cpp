#include "capsim/collapse.hpp"

#include <cmath>

namespace capsim {

std::pair<SparseC, SparseC> rotated_mode_operators(const SystemOperators& ops,
                                                   double phi) {
  const Cplx I(0.0, 1.0);
  const Cplx ep = std::exp(-I * (phi / 4.0)) / std::sqrt(2.0);
  const Cplx em = std::exp(I * (phi / 4.0)) / std::sqrt(2.0);
  SparseC ax = ep * ops.a_plus + em * ops.a_minus;
  SparseC ay = I * (ep * ops.a_plus - em * ops.a_minus);
  ax.makeCompressed();
  ay.makeCompressed();
  return {ax, ay};
}

std::vector<CollapseChannel> standard_collapse_set(const SystemOperators& ops,
                                                   double kappa, double gamma) {
  std::vector<CollapseChannel> out;
  const double ck = std::sqrt(2.0 * kappa);
  const double cg = std::sqrt(gamma);
  out.push_back({"cavity+", SparseC(ck * ops.a_plus), true, 0, 0});
  out.push_back({"cavity-", SparseC(ck * ops.a_minus), true, 0, 0});
  out.push_back({"atom-1", SparseC(cg * ops.lowering_op(-1)), false, 0, 0});
  out.push_back({"atom0", SparseC(cg * ops.lowering_op(0)), false, 0, 0});
  out.push_back({"atom+1", SparseC(cg * ops.lowering_op(+1)), false, 0, 0});
  return out;
}

std::vector<CollapseChannel> detector_collapse_set(const SystemOperators& ops,
                                                   double kappa, double gamma,
                                                   const AnalyzerConfig& analyzers) {
  std::vector<CollapseChannel> out;
  const int ns = (int)analyzers.angles.size();
  const double w = std::sqrt(2.0 * kappa / ns);
  for (int k = 0; k < ns; ++k) {
    // The configured angle is a correlation angle; each photon passes half of
    // it through the mixer (the mixer parametrization halves it again).
    auto [ax, ay] = rotated_mode_operators(ops, 2.0 * analyzers.angles[k]);
    out.push_back({"det" + std::to_string(k + 1) + "x", SparseC(w * ax), true,
                   k + 1, +1});
    out.push_back({"det" + std::to_string(k + 1) + "y", SparseC(w * ay), true,
                   k + 1, -1});
  }
  const double cg = std::sqrt(gamma);
  out.push_back({"atom-1", SparseC(cg * ops.lowering_op(-1)), false, 0, 0});
  out.push_back({"atom0", SparseC(cg * ops.lowering_op(0)), false, 0, 0});
  out.push_back({"atom+1", SparseC(cg * ops.lowering_op(+1)), false, 0, 0});
  return out;
}

Eigen::VectorXd total_decay_diagonal(const std::vector<CollapseChannel>& channels) {
  if (channels.empty()) return Eigen::VectorXd();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(channels[0].op.rows());
  for (const auto& ch : channels) {
    SparseC cc = SparseC(ch.op.adjoint()) * ch.op;
    for (int k = 0; k < cc.outerSize(); ++k)
      for (SparseC::InnerIterator it(cc, k); it; ++it)
        if (it.row() == it.col()) d[it.row()] += it.value().real();
  }
  return d;
}

}  // namespace capsim
