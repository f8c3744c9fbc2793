#include "capsim/master.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace capsim {
namespace {

struct SectorLayout {
  std::vector<int> sector_of;             // full index -> sector id
  std::vector<int> pos_in;                // full index -> row within its sector
  std::vector<std::vector<int>> members;  // sector id -> full indices
  std::map<int, int> id_of_charge;        // 2Q -> sector id
  std::vector<int> charge;                // sector id -> 2Q
};

SectorLayout build_sectors(const Basis& basis) {
  SectorLayout lay;
  const int dim = basis.dimension();
  lay.sector_of.resize(dim);
  lay.pos_in.resize(dim);
  std::map<int, std::vector<int>> groups;  // ordered: stable sector ids
  for (int i = 0; i < dim; ++i) groups[basis.charge_times_two(i)].push_back(i);
  for (auto& [q, mem] : groups) {
    const int id = (int)lay.members.size();
    lay.id_of_charge.emplace(q, id);
    lay.charge.push_back(q);
    for (int k = 0; k < (int)mem.size(); ++k) {
      lay.sector_of[mem[k]] = id;
      lay.pos_in[mem[k]] = k;
    }
    lay.members.push_back(std::move(mem));
  }
  return lay;
}

// Split a sector-preserving square operator into one block per sector.
std::vector<SparseC> restrict_square(const SparseC& full, const SectorLayout& lay) {
  const int ns = (int)lay.members.size();
  std::vector<std::vector<Eigen::Triplet<Cplx>>> trip(ns);
  for (int col = 0; col < full.outerSize(); ++col)
    for (SparseC::InnerIterator it(full, col); it; ++it) {
      const int s = lay.sector_of[it.col()];
      if (lay.sector_of[it.row()] != s)
        throw std::logic_error("coherent generator must preserve charge sectors");
      trip[s].emplace_back(lay.pos_in[it.row()], lay.pos_in[it.col()], it.value());
    }
  std::vector<SparseC> out(ns);
  for (int s = 0; s < ns; ++s) {
    const int d = (int)lay.members[s].size();
    out[s].resize(d, d);
    out[s].setFromTriplets(trip[s].begin(), trip[s].end());
    out[s].makeCompressed();
  }
  return out;
}

struct ChannelBlocks {
  int dq = 0;                      // uniform charge shift 2*(Q_out - Q_in)
  std::vector<int> target;         // source sector -> target sector id, or -1
  std::vector<SparseC> block;      // source sector -> (target dim x source dim)
  std::vector<SparseC> block_adj;  // materialized adjoints
  bool empty = true;
};

ChannelBlocks split_channel(const CollapseChannel& ch, const SectorLayout& lay) {
  ChannelBlocks out;
  const int ns = (int)lay.members.size();
  out.target.assign(ns, -1);
  out.block.resize(ns);
  out.block_adj.resize(ns);
  bool have_shift = false;
  std::vector<std::vector<Eigen::Triplet<Cplx>>> trip(ns);
  for (int col = 0; col < ch.op.outerSize(); ++col)
    for (SparseC::InnerIterator it(ch.op, col); it; ++it) {
      const int ss = lay.sector_of[it.col()], ts = lay.sector_of[it.row()];
      const int dq = lay.charge[ts] - lay.charge[ss];
      if (!have_shift) {
        out.dq = dq;
        have_shift = true;
      } else if (dq != out.dq) {
        throw std::invalid_argument(
            "collapse channel '" + ch.name +
            "' couples different charge shifts; density-matrix evolution "
            "requires the sector-shifting standard set (analyzer sets generate "
            "the identical dissipator and can be replaced by it)");
      }
      trip[ss].emplace_back(lay.pos_in[it.row()], lay.pos_in[it.col()], it.value());
    }
  out.empty = !have_shift;
  if (out.empty) return out;
  for (int s = 0; s < ns; ++s) {
    const auto t_it = lay.id_of_charge.find(lay.charge[s] + out.dq);
    if (t_it == lay.id_of_charge.end()) {
      if (!trip[s].empty())
        throw std::logic_error("channel maps into a missing charge sector");
      continue;
    }
    out.target[s] = t_it->second;
    const int rows = (int)lay.members[t_it->second].size();
    const int cols = (int)lay.members[s].size();
    out.block[s].resize(rows, cols);
    out.block[s].setFromTriplets(trip[s].begin(), trip[s].end());
    out.block[s].makeCompressed();
    out.block_adj[s] = SparseC(out.block[s].adjoint());
    if (out.block[s].nonZeros() == 0) out.target[s] = -1;  // nothing flows
  }
  return out;
}

struct BlockInfo {
  int sa, sb;  // row sector, column sector
  long off;
  int rows, cols;
};

struct Ctx {
  const Hamiltonian* h = nullptr;
  SectorLayout lay;
  std::vector<SparseC> G, P;                // per-sector coherent structure
  std::vector<VectorC> mdiag, mdiag_conj;   // -i*detuning - loss, per sector
  std::vector<ChannelBlocks> channels;
  std::vector<BlockInfo> blocks;
  std::vector<int> block_at;  // sa*ns+sb -> index into blocks, or -1
  long total = 0;

  int block_index(int sa, int sb) const {
    return block_at[(long)sa * (long)lay.members.size() + sb];
  }
};

struct MasterRhs {
  const Ctx* c;

  void operator()(double t, const VectorC& y, VectorC& dydt) const {
    using CMapM = Eigen::Map<const Eigen::MatrixXcd>;
    using MapM = Eigen::Map<Eigen::MatrixXcd>;
    const double g = c->h->g(t);
    const double om = c->h->omega(t);
    dydt.setZero();
    for (const auto& B : c->blocks) {
      CMapM rho(y.data() + B.off, B.rows, B.cols);
      MapM out(dydt.data() + B.off, B.rows, B.cols);
      // M rho with M = diag(-i*detuning - loss) - g G + om P.
      out.noalias() += c->mdiag[B.sa].asDiagonal() * rho;
      if (g != 0.0) out.noalias() -= g * (c->G[B.sa] * rho);
      if (om != 0.0) out.noalias() += om * (c->P[B.sa] * rho);
      // rho M^dag; G and P are real antisymmetric, so their adjoints flip sign.
      out.noalias() += rho * c->mdiag_conj[B.sb].asDiagonal();
      if (g != 0.0) out.noalias() += g * (rho * c->G[B.sb]);
      if (om != 0.0) out.noalias() -= om * (rho * c->P[B.sb]);
    }
    // Refill: C rho C^dag lands in the block shifted by the channel's charge.
    Eigen::MatrixXcd tmp;
    for (const auto& B : c->blocks) {
      CMapM rho(y.data() + B.off, B.rows, B.cols);
      for (const auto& ch : c->channels) {
        if (ch.empty) continue;
        const int ta = ch.target[B.sa], tb = ch.target[B.sb];
        if (ta < 0 || tb < 0) continue;
        const int bi = c->block_index(ta, tb);
        if (bi < 0) continue;  // closure guarantees presence; guard regardless
        const BlockInfo& T = c->blocks[bi];
        MapM out(dydt.data() + T.off, T.rows, T.cols);
        tmp.noalias() = ch.block[B.sa] * rho;
        out.noalias() += tmp * ch.block_adj[B.sb];
      }
    }
  }
};

}  // namespace

MasterResult solve_master_equation(const Hamiltonian& h,
                                   const std::vector<CollapseChannel>& channels,
                                   const Eigen::MatrixXcd& rho0,
                                   const MasterOptions& opt) {
  const int dim = h.dimension();
  if (rho0.rows() != dim || rho0.cols() != dim)
    throw std::invalid_argument("initial density matrix has the wrong shape");
  if (dim > opt.dimension_guard) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "density-matrix evolution refused: dimension %d exceeds the "
                  "guard %d (quadratic memory/time growth)",
                  dim, opt.dimension_guard);
    throw std::invalid_argument(msg);
  }

  Ctx ctx;
  ctx.h = &h;
  ctx.lay = build_sectors(h.basis());
  const int ns = (int)ctx.lay.members.size();
  ctx.G = restrict_square(h.coupling_structure(), ctx.lay);
  ctx.P = restrict_square(h.ops().pump_structure, ctx.lay);
  ctx.mdiag.resize(ns);
  ctx.mdiag_conj.resize(ns);
  for (int s = 0; s < ns; ++s) {
    const auto& mem = ctx.lay.members[s];
    VectorC d(mem.size());
    for (int k = 0; k < (int)mem.size(); ++k)
      d[k] = Cplx(-h.loss_diagonal()[mem[k]], -h.detuning_diagonal()[mem[k]]);
    ctx.mdiag[s] = d;
    ctx.mdiag_conj[s] = d.conjugate();
  }
  ctx.channels.reserve(channels.size());
  for (const auto& ch : channels) ctx.channels.push_back(split_channel(ch, ctx.lay));

  // Active blocks: nonzero sector pairs of rho0, closed under channel shifts.
  std::vector<char> active((long)ns * ns, 0);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i)
      if (rho0(i, j) != Cplx(0.0, 0.0))
        active[(long)ctx.lay.sector_of[i] * ns + ctx.lay.sector_of[j]] = 1;
  for (bool grew = true; grew;) {
    grew = false;
    for (int sa = 0; sa < ns; ++sa)
      for (int sb = 0; sb < ns; ++sb) {
        if (!active[(long)sa * ns + sb]) continue;
        for (const auto& ch : ctx.channels) {
          if (ch.empty) continue;
          const int ta = ch.target[sa], tb = ch.target[sb];
          if (ta < 0 || tb < 0) continue;
          char& slot = active[(long)ta * ns + tb];
          if (!slot) {
            slot = 1;
            grew = true;
          }
        }
      }
  }
  ctx.block_at.assign((long)ns * ns, -1);
  long off = 0;
  for (int sa = 0; sa < ns; ++sa)
    for (int sb = 0; sb < ns; ++sb)
      if (active[(long)sa * ns + sb]) {
        BlockInfo b;
        b.sa = sa;
        b.sb = sb;
        b.off = off;
        b.rows = (int)ctx.lay.members[sa].size();
        b.cols = (int)ctx.lay.members[sb].size();
        ctx.block_at[(long)sa * ns + sb] = (int)ctx.blocks.size();
        ctx.blocks.push_back(b);
        off += (long)b.rows * b.cols;
      }
  ctx.total = off;

  VectorC y0 = VectorC::Zero(ctx.total);
  for (const auto& B : ctx.blocks) {
    Eigen::Map<Eigen::MatrixXcd> blk(y0.data() + B.off, B.rows, B.cols);
    for (int cidx = 0; cidx < B.cols; ++cidx)
      for (int ridx = 0; ridx < B.rows; ++ridx)
        blk(ridx, cidx) =
            rho0(ctx.lay.members[B.sa][ridx], ctx.lay.members[B.sb][cidx]);
  }

  std::vector<double> grid = opt.sample_grid;
  if (grid.empty()) {
    const int n = std::max(2, (int)std::lround((opt.t1 - opt.t0) / 0.25) + 1);
    grid.resize(n);
    for (int i = 0; i < n; ++i)
      grid[i] = opt.t0 + (opt.t1 - opt.t0) * (double)i / (double)(n - 1);
  }

  MasterResult res;
  res.times = grid;
  res.occupations.setZero((int)grid.size(), dim);

  MasterRhs rhs{&ctx};
  AdaptiveRK45<MasterRhs> ode(rhs, opt.t0, std::move(y0), opt.ode);

  const auto populations = [&](const VectorC& y, Eigen::VectorXd& out) {
    out.setZero(dim);
    for (const auto& B : ctx.blocks) {
      if (B.sa != B.sb) continue;
      Eigen::Map<const Eigen::MatrixXcd> blk(y.data() + B.off, B.rows, B.cols);
      for (int k = 0; k < B.rows; ++k)
        out[ctx.lay.members[B.sa][k]] = blk(k, k).real();
    }
  };

  Eigen::VectorXd pop;
  populations(ode.y(), pop);
  const double trace0 = pop.sum();
  double max_drift = 0.0;
  for (int gi = 0; gi < (int)grid.size(); ++gi) {
    if (grid[gi] > ode.t()) ode.integrate_to(grid[gi]);
    populations(ode.y(), pop);
    res.occupations.row(gi) = pop.transpose();
    const double drift = std::abs(pop.sum() - trace0);
    max_drift = std::max(max_drift, drift);
    if (drift > opt.trace_abort_tol * std::max(1.0, std::abs(trace0))) {
      char msg[160];
      std::snprintf(msg, sizeof msg,
                    "density-matrix trace drifted by %.3e at t=%.6f "
                    "(abort tolerance %.1e): integration untrustworthy",
                    drift, grid[gi], opt.trace_abort_tol);
      throw std::runtime_error(msg);
    }
  }
  res.max_trace_drift = max_drift;
  res.trace_warning = max_drift > opt.trace_warn_tol * std::max(1.0, std::abs(trace0));
  res.stats = ode.stats;

  if (opt.keep_final_density) {
    res.final_density.setZero(dim, dim);
    for (const auto& B : ctx.blocks) {
      Eigen::Map<const Eigen::MatrixXcd> blk(ode.y().data() + B.off, B.rows, B.cols);
      for (int cidx = 0; cidx < B.cols; ++cidx)
        for (int ridx = 0; ridx < B.rows; ++ridx)
          res.final_density(ctx.lay.members[B.sa][ridx],
                            ctx.lay.members[B.sb][cidx]) = blk(ridx, cidx);
    }
  }
  return res;
}

MasterResult solve_master_equation(const Hamiltonian& h,
                                   const std::vector<CollapseChannel>& channels,
                                   const VectorC& psi0, const MasterOptions& opt) {
  Eigen::MatrixXcd rho0 = psi0 * psi0.adjoint();
  return solve_master_equation(h, channels, rho0, opt);
}

}  // namespace capsim
