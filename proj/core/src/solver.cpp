#include "pidopt/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace pidopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Instance: the polytope {q >= 0, q_{s,y,*} = p_{s,y,*}, q_{s,*,z} = p_{s,*,z}}
// reduced to its admissible cells. Slices s whose admissible grid degenerates
// to a single row or column are forced (their cells equal marginal values);
// the rest are free variables. One (s,z) constraint per free slice is
// redundant and dropped.
// ---------------------------------------------------------------------------

struct Instance {
  int ns = 0, ny = 0, nz = 0;
  std::vector<double> msy, msz, ps;
  std::vector<std::uint8_t> admissible;  // dense grid mask

  std::vector<std::vector<int>> ys, zs;  // admissible y's / z's per slice
  std::vector<std::uint8_t> forced;      // slice forced flag (ps>0, min grid dim == 1)
  std::vector<double> forced_q;          // dense grid; 0 on free/inadmissible cells

  struct Cell {
    int s, y, z;
    int block;
  };
  std::vector<Cell> cells;        // free cells
  std::vector<int> cell_at;       // dense grid -> free cell id or -1

  struct Block {
    int y, z;
    double forced_mass = 0.0;
    std::vector<int> members;  // free cell ids
  };
  std::vector<Block> blocks;
  std::vector<int> block_at;  // ny*nz -> block id or -1

  struct Row {
    int kind;  // 0: (s,y) row, 1: (s,z) row
    int s, a;
    double rhs;
  };
  std::vector<Row> rows;
  std::vector<int> row_sy, row_sz;  // ns*ny / ns*nz -> row id or -1

  int index(int s, int y, int z) const { return (s * ny + y) * nz + z; }
  int nfree() const { return int(cells.size()); }
  int nrows() const { return int(rows.size()); }
};

Instance build_instance(const JointDistribution& p) {
  Instance in;
  in.ns = p.ns();
  in.ny = p.ny();
  in.nz = p.nz();
  in.msy = p.marginal_sy();
  in.msz = p.marginal_sz();
  in.ps = p.marginal_s();
  in.admissible.assign(p.cell_count(), 0);
  in.forced_q.assign(p.cell_count(), 0.0);
  in.cell_at.assign(p.cell_count(), -1);
  in.block_at.assign(std::size_t(in.ny) * in.nz, -1);
  in.row_sy.assign(in.msy.size(), -1);
  in.row_sz.assign(in.msz.size(), -1);

  in.ys.resize(in.ns);
  in.zs.resize(in.ns);
  in.forced.assign(in.ns, 0);
  for (int s = 0; s < in.ns; ++s) {
    for (int y = 0; y < in.ny; ++y)
      if (in.msy[s * in.ny + y] > 0.0) in.ys[s].push_back(y);
    for (int z = 0; z < in.nz; ++z)
      if (in.msz[s * in.nz + z] > 0.0) in.zs[s].push_back(z);
    if (in.ps[s] > 0.0 && (in.ys[s].size() == 1 || in.zs[s].size() == 1)) in.forced[s] = 1;
  }

  for (int s = 0; s < in.ns; ++s)
    for (int y : in.ys[s])
      for (int z : in.zs[s]) {
        int i = in.index(s, y, z);
        in.admissible[i] = 1;
        int& b = in.block_at[y * in.nz + z];
        if (b < 0) {
          b = int(in.blocks.size());
          in.blocks.push_back({y, z, 0.0, {}});
        }
        if (in.forced[s]) {
          double v = in.ys[s].size() == 1 ? in.msz[s * in.nz + z] : in.msy[s * in.ny + y];
          in.forced_q[i] = v;
          in.blocks[b].forced_mass += v;
        } else {
          in.cell_at[i] = int(in.cells.size());
          in.cells.push_back({s, y, z, b});
          in.blocks[b].members.push_back(int(in.cells.size()) - 1);
        }
      }

  for (int s = 0; s < in.ns; ++s) {
    if (in.forced[s] || in.ps[s] <= 0.0) continue;
    for (int y : in.ys[s]) {
      in.row_sy[s * in.ny + y] = int(in.rows.size());
      in.rows.push_back({0, s, y, in.msy[s * in.ny + y]});
    }
    for (std::size_t k = 0; k + 1 < in.zs[s].size(); ++k) {  // drop the last z per slice
      int z = in.zs[s][k];
      in.row_sz[s * in.nz + z] = int(in.rows.size());
      in.rows.push_back({1, s, z, in.msz[s * in.nz + z]});
    }
  }
  return in;
}

// ---------------------------------------------------------------------------
// Shared kernels on free-cell vectors
// ---------------------------------------------------------------------------

std::vector<double> block_totals(const Instance& in, const std::vector<double>& x) {
  std::vector<double> tot(in.blocks.size());
  for (std::size_t b = 0; b < in.blocks.size(); ++b) {
    double t = in.blocks[b].forced_mass;
    for (int c : in.blocks[b].members) t += x[c];
    tot[b] = t;
  }
  return tot;
}

double primal_residual(const Instance& in, const std::vector<double>& x) {
  double r = 0.0;
  for (const auto& row : in.rows) {
    double sum = 0.0;
    if (row.kind == 0) {
      for (int z : in.zs[row.s]) {
        int c = in.cell_at[in.index(row.s, row.a, z)];
        if (c >= 0) sum += x[c];
      }
    } else {
      for (int y : in.ys[row.s]) {
        int c = in.cell_at[in.index(row.s, y, row.a)];
        if (c >= 0) sum += x[c];
      }
    }
    r = std::max(r, std::abs(sum - row.rhs));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Barrier phase: infeasible-start Newton on the scaled central-path system
//   ln(x/tot) - 1/(t x) + A^T nu = 0,   Ax = b,
// i.e. the KKT conditions of  min f(x) - (1/t) sum ln x  s.t. Ax = b, with nu
// the multiplier estimate in final units (lambda = -nu directly). Solving the
// full KKT system with the residual right-hand side keeps feasibility drift
// self-correcting at every t.
// ---------------------------------------------------------------------------

struct BarrierState {
  std::vector<double> x;
  std::vector<double> nu;  // scaled row multipliers
  double t = 1.0;
  int iterations = 0;
  int stages = 0;
  bool budget_exhausted = false;
};

void rows_of_cell(const Instance& in, int c, int& r1, int& r2) {
  const auto& cell = in.cells[c];
  r1 = in.row_sy[cell.s * in.ny + cell.y];
  r2 = in.row_sz[cell.s * in.nz + cell.z];
}

void barrier_residuals(const Instance& in, const std::vector<double>& x,
                       const std::vector<double>& nu, double t, std::vector<double>& rd,
                       std::vector<double>& rp) {
  auto tot = block_totals(in, x);
  rd.resize(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    int r1, r2;
    rows_of_cell(in, int(c), r1, r2);
    double v = std::log(x[c] / tot[in.cells[c].block]) - 1.0 / (t * x[c]);
    if (r1 >= 0) v += nu[r1];
    if (r2 >= 0) v += nu[r2];
    rd[c] = v;
  }
  rp.assign(in.rows.size(), 0.0);
  for (std::size_t c = 0; c < x.size(); ++c) {
    int r1, r2;
    rows_of_cell(in, int(c), r1, r2);
    if (r1 >= 0) rp[r1] += x[c];
    if (r2 >= 0) rp[r2] += x[c];
  }
  for (std::size_t r = 0; r < in.rows.size(); ++r) rp[r] -= in.rows[r].rhs;
}

double norm2sq(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (double v : a) s += v * v;
  for (double v : b) s += v * v;
  return s;
}

// One infeasible-start Newton step; returns max(|rd|, |rp|) before the step.
double newton_step_barrier(const Instance& in, std::vector<double>& x, std::vector<double>& nu,
                           double t) {
  const int nv = in.nfree();
  const int nr = in.nrows();
  const int dim = nv + nr;
  auto tot = block_totals(in, x);

  std::vector<double> rd, rp;
  barrier_residuals(in, x, nu, t, rd, rp);

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs(dim);
  for (int c = 0; c < nv; ++c) {
    K(c, c) += 1.0 / x[c] + 1.0 / (t * x[c] * x[c]);
    int r1, r2;
    rows_of_cell(in, c, r1, r2);
    if (r1 >= 0) {
      K(c, nv + r1) = 1.0;
      K(nv + r1, c) = 1.0;
    }
    if (r2 >= 0) {
      K(c, nv + r2) = 1.0;
      K(nv + r2, c) = 1.0;
    }
    rhs(c) = -rd[c];
  }
  for (const auto& blk : in.blocks) {
    if (blk.members.empty()) continue;
    double invtot = 1.0 / tot[in.block_at[blk.y * in.nz + blk.z]];
    for (int a : blk.members)
      for (int b : blk.members) K(a, b) -= invtot;
  }
  for (int r = 0; r < nr; ++r) rhs(nv + r) = -rp[r];

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
  Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) sol = Eigen::FullPivLU<Eigen::MatrixXd>(K).solve(rhs);

  double before = 0.0;
  for (double v : rd) before = std::max(before, std::abs(v));
  for (double v : rp) before = std::max(before, std::abs(v));

  double amax = kInf;
  for (int c = 0; c < nv; ++c)
    if (sol(c) < 0.0) amax = std::min(amax, -x[c] / sol(c));
  double alpha = std::min(1.0, 0.99 * amax);

  const double base_norm = norm2sq(rd, rp);
  std::vector<double> xt(nv), nut(nr), rdt, rpt;
  for (int bt = 0; bt < 40; ++bt) {
    for (int c = 0; c < nv; ++c) xt[c] = x[c] + alpha * sol(c);
    for (int r = 0; r < nr; ++r) nut[r] = nu[r] + alpha * sol(nv + r);
    barrier_residuals(in, xt, nut, t, rdt, rpt);
    if (norm2sq(rdt, rpt) <= (1.0 - 0.01 * alpha) * base_norm + 1e-300) break;
    alpha *= 0.5;
  }
  x = xt;
  nu = nut;
  return before;
}

BarrierState run_barrier(const Instance& in, const SolveOptions& opts,
                         const std::vector<double>& x0, const std::vector<double>& nu0,
                         double t_start, double gap_target, int iter_budget) {
  BarrierState st;
  st.x = x0;
  st.nu = nu0;
  if (st.nu.size() != in.rows.size()) st.nu.assign(in.rows.size(), 0.0);
  st.t = t_start;
  const double n = double(in.nfree());
  const double t_cap = 1e15;
  std::vector<double> rd, rp;
  while (true) {
    for (int k = 0; k < 60; ++k) {
      if (st.iterations >= iter_budget) {
        st.budget_exhausted = true;
        break;
      }
      newton_step_barrier(in, st.x, st.nu, st.t);
      ++st.iterations;
      barrier_residuals(in, st.x, st.nu, st.t, rd, rp);
      double rdmax = 0.0, rpmax = 0.0;
      for (double v : rd) rdmax = std::max(rdmax, std::abs(v));
      for (double v : rp) rpmax = std::max(rpmax, std::abs(v));
      if (rdmax <= 1e-9 && rpmax <= 1e-13) break;
    }
    ++st.stages;
    if (st.budget_exhausted) break;
    if (n / st.t <= gap_target || st.t >= t_cap) break;
    st.t = std::min(st.t * opts.barrier_multiplier, t_cap);
  }
  return st;
}

// ---------------------------------------------------------------------------
// Certificate assembly helpers
// ---------------------------------------------------------------------------

// Multipliers for forced slices follow directly from condition (a) on their
// (always positive) cells; gauge pinned by lambda = 0 on the single y (resp.
// mu = 0 on the single z).
void complete_forced_multipliers(const Instance& in, const std::vector<double>& qdense,
                                 std::vector<double>& lambda, std::vector<double>& mu) {
  std::vector<double> tot(std::size_t(in.ny) * in.nz, 0.0);
  for (int s = 0; s < in.ns; ++s)
    for (int y = 0; y < in.ny; ++y)
      for (int z = 0; z < in.nz; ++z) tot[y * in.nz + z] += qdense[in.index(s, y, z)];
  for (int s = 0; s < in.ns; ++s) {
    if (!in.forced[s]) continue;
    if (in.ys[s].size() == 1) {
      int y0 = in.ys[s][0];
      lambda[s * in.ny + y0] = 0.0;
      for (int z : in.zs[s]) {
        double q = qdense[in.index(s, y0, z)];
        mu[s * in.nz + z] = std::log(q / tot[y0 * in.nz + z]);
      }
    } else {
      int z0 = in.zs[s][0];
      mu[s * in.nz + z0] = 0.0;
      for (int y : in.ys[s]) {
        double q = qdense[in.index(s, y, z0)];
        lambda[s * in.ny + y] = std::log(q / tot[y * in.nz + z0]);
      }
    }
  }
}

std::vector<double> assemble_dense_q(const Instance& in, const std::vector<double>& x) {
  std::vector<double> q = in.forced_q;
  for (std::size_t c = 0; c < x.size(); ++c) {
    const auto& cell = in.cells[c];
    q[in.index(cell.s, cell.y, cell.z)] = x[c];
  }
  return q;
}

double entropy_of_coupling(const Instance& in, const std::vector<double>& qdense) {
  std::vector<double> tot(std::size_t(in.ny) * in.nz, 0.0);
  for (int s = 0; s < in.ns; ++s)
    for (int y = 0; y < in.ny; ++y)
      for (int z = 0; z < in.nz; ++z) tot[y * in.nz + z] += qdense[in.index(s, y, z)];
  double h = 0.0;
  for (int s = 0; s < in.ns; ++s)
    for (int y = 0; y < in.ny; ++y)
      for (int z = 0; z < in.nz; ++z) {
        double q = qdense[in.index(s, y, z)];
        if (q > 0.0) h -= q * std::log(q / tot[y * in.nz + z]);
      }
  return h;
}

void multipliers_from_rows(const Instance& in, const std::vector<double>& w, double scale,
                           std::vector<double>& lambda, std::vector<double>& mu) {
  lambda.assign(std::size_t(in.ns) * in.ny, kNaN);
  mu.assign(std::size_t(in.ns) * in.nz, kNaN);
  for (int s = 0; s < in.ns; ++s) {
    if (in.forced[s] || in.ps[s] <= 0.0) continue;
    for (int y : in.ys[s]) lambda[s * in.ny + y] = 0.0;
    for (int z : in.zs[s]) mu[s * in.nz + z] = 0.0;
  }
  for (std::size_t r = 0; r < in.rows.size(); ++r) {
    const auto& row = in.rows[r];
    double v = -w[r] * scale;
    if (row.kind == 0)
      lambda[row.s * in.ny + row.a] = v;
    else
      mu[row.s * in.nz + row.a] = v;
  }
}

// ---------------------------------------------------------------------------
// Crossover: exact equality-constrained Newton on the alive support.
// ---------------------------------------------------------------------------

struct Crossover {
  bool ok = false;
  std::vector<double> qdense;
  std::vector<double> lambda, mu;
  int iterations = 0;
  bool any_dead = false;
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

Crossover run_crossover(const Instance& in, const std::vector<double>& x_barrier,
                        const std::vector<double>& lam_b, const std::vector<double>& mu_b,
                        double split_threshold, int iter_budget) {
  Crossover out;
  auto tot = block_totals(in, x_barrier);
  std::vector<std::uint8_t> alive_block(in.blocks.size(), 0);
  for (std::size_t b = 0; b < in.blocks.size(); ++b)
    alive_block[b] = (tot[b] > split_threshold || in.blocks[b].forced_mass > 0.0) ? 1 : 0;

  std::vector<int> alive_cells;
  for (std::size_t c = 0; c < in.cells.size(); ++c)
    if (alive_block[in.cells[c].block]) alive_cells.push_back(int(c));
  out.any_dead = alive_cells.size() != in.cells.size();

  // every constraint row must keep at least one alive cell
  {
    std::vector<std::uint8_t> row_ok(in.rows.size(), 0);
    std::vector<std::uint8_t> zlast_ok(std::size_t(in.ns), 0);
    for (int c : alive_cells) {
      int r1, r2;
      rows_of_cell(in, c, r1, r2);
      if (r1 >= 0) row_ok[r1] = 1;
      if (r2 >= 0) row_ok[r2] = 1;
      const auto& cell = in.cells[c];
      if (!in.zs[cell.s].empty() && cell.z == in.zs[cell.s].back()) zlast_ok[cell.s] = 1;
    }
    for (std::size_t r = 0; r < in.rows.size(); ++r)
      if (!row_ok[r]) return out;
    for (int s = 0; s < in.ns; ++s)
      if (!in.forced[s] && in.ps[s] > 0.0 && !zlast_ok[s]) return out;
  }

  // per-slice connected components of the alive bipartite graph (y ~ z)
  const int nv = int(alive_cells.size());
  std::vector<int> comp_of_cell(nv, -1);
  std::vector<int> comp_rep;  // representative node id per component
  std::vector<std::vector<int>> comp_cells;
  {
    UnionFind uf(in.ns * (in.ny + in.nz));
    auto ynode = [&](int s, int y) { return s * (in.ny + in.nz) + y; };
    auto znode = [&](int s, int z) { return s * (in.ny + in.nz) + in.ny + z; };
    for (int c : alive_cells) {
      const auto& cell = in.cells[c];
      uf.unite(ynode(cell.s, cell.y), znode(cell.s, cell.z));
    }
    std::vector<int> comp_id(in.ns * (in.ny + in.nz), -1);
    for (int k = 0; k < nv; ++k) {
      const auto& cell = in.cells[alive_cells[k]];
      int root = uf.find(ynode(cell.s, cell.y));
      if (comp_id[root] < 0) {
        comp_id[root] = int(comp_rep.size());
        comp_rep.push_back(root);
        comp_cells.emplace_back();
      }
      comp_of_cell[k] = comp_id[root];
      comp_cells[comp_id[root]].push_back(k);
    }
  }

  // rows: all (s,y); all (s,z) except one dropped per component (largest z)
  struct XRow {
    int kind, s, a;
    double rhs;
  };
  std::vector<XRow> rows;
  std::vector<int> xrow_sy(std::size_t(in.ns) * in.ny, -1);
  std::vector<int> xrow_sz(std::size_t(in.ns) * in.nz, -1);
  {
    std::vector<std::uint8_t> have_y(std::size_t(in.ns) * in.ny, 0);
    std::vector<std::uint8_t> have_z(std::size_t(in.ns) * in.nz, 0);
    std::vector<int> drop_z(comp_rep.size(), -1);  // encoded s*nz+z
    for (int k = 0; k < nv; ++k) {
      const auto& cell = in.cells[alive_cells[k]];
      have_y[cell.s * in.ny + cell.y] = 1;
      have_z[cell.s * in.nz + cell.z] = 1;
      int code = cell.s * in.nz + cell.z;
      if (code > drop_z[comp_of_cell[k]]) drop_z[comp_of_cell[k]] = code;
    }
    std::vector<std::uint8_t> dropped(std::size_t(in.ns) * in.nz, 0);
    for (int d : drop_z)
      if (d >= 0) dropped[d] = 1;
    for (int s = 0; s < in.ns; ++s) {
      if (in.forced[s] || in.ps[s] <= 0.0) continue;
      for (int y : in.ys[s])
        if (have_y[s * in.ny + y]) {
          xrow_sy[s * in.ny + y] = int(rows.size());
          rows.push_back({0, s, y, in.msy[s * in.ny + y]});
        }
      for (int z : in.zs[s])
        if (have_z[s * in.nz + z] && !dropped[s * in.nz + z]) {
          xrow_sz[s * in.nz + z] = int(rows.size());
          rows.push_back({1, s, z, in.msz[s * in.nz + z]});
        }
    }
  }
  const int nr = int(rows.size());

  // block structure restricted to alive cells
  std::vector<int> block_of(nv);
  std::vector<std::vector<int>> block_members(in.blocks.size());
  for (int k = 0; k < nv; ++k) {
    block_of[k] = in.cells[alive_cells[k]].block;
    block_members[block_of[k]].push_back(k);
  }

  std::vector<double> x(nv);
  for (int k = 0; k < nv; ++k) x[k] = std::max(x_barrier[alive_cells[k]], 1e-300);

  auto totals = [&]() {
    std::vector<double> t(in.blocks.size(), 0.0);
    for (std::size_t b = 0; b < in.blocks.size(); ++b) t[b] = in.blocks[b].forced_mass;
    for (int k = 0; k < nv; ++k) t[block_of[k]] += x[k];
    return t;
  };
  auto cell_rows = [&](int k, int& r1, int& r2) {
    const auto& cell = in.cells[alive_cells[k]];
    r1 = xrow_sy[cell.s * in.ny + cell.y];
    r2 = xrow_sz[cell.s * in.nz + cell.z];
  };

  Eigen::VectorXd nu = Eigen::VectorXd::Zero(nr);
  const int dim = nv + nr;
  Eigen::MatrixXd K(dim, dim);
  Eigen::VectorXd rhs(dim);
  double stat_res = kInf, feas_res = kInf;
  for (int it = 0; it < std::max(iter_budget, 12); ++it) {
    auto tot = totals();
    // residuals at (x, nu)
    stat_res = 0.0;
    for (int k = 0; k < nv; ++k) {
      int r1, r2;
      cell_rows(k, r1, r2);
      double g = std::log(x[k] / tot[block_of[k]]);
      if (r1 >= 0) g += nu(r1);
      if (r2 >= 0) g += nu(r2);
      stat_res = std::max(stat_res, std::abs(g));
    }
    feas_res = 0.0;
    {
      std::vector<double> sums(nr, 0.0);
      for (int k = 0; k < nv; ++k) {
        int r1, r2;
        cell_rows(k, r1, r2);
        if (r1 >= 0) sums[r1] += x[k];
        if (r2 >= 0) sums[r2] += x[k];
      }
      for (int r = 0; r < nr; ++r) feas_res = std::max(feas_res, std::abs(sums[r] - rows[r].rhs));
    }
    ++out.iterations;
    if (stat_res <= 1e-12 && feas_res <= 1e-13) break;

    K.setZero();
    rhs.setZero();
    for (int k = 0; k < nv; ++k) {
      K(k, k) += 1.0 / x[k];
      int r1, r2;
      cell_rows(k, r1, r2);
      if (r1 >= 0) {
        K(k, nv + r1) = 1.0;
        K(nv + r1, k) = 1.0;
      }
      if (r2 >= 0) {
        K(k, nv + r2) = 1.0;
        K(nv + r2, k) = 1.0;
      }
      rhs(k) = -std::log(x[k] / tot[block_of[k]]);
    }
    for (std::size_t b = 0; b < in.blocks.size(); ++b) {
      if (block_members[b].empty()) continue;
      double invtot = tot[b] > 0.0 ? 1.0 / tot[b] : 0.0;
      for (int k : block_members[b])
        for (int j : block_members[b]) K(k, j) -= invtot;
    }
    {
      std::vector<double> sums(nr, 0.0);
      for (int k = 0; k < nv; ++k) {
        int r1, r2;
        cell_rows(k, r1, r2);
        if (r1 >= 0) sums[r1] += x[k];
        if (r2 >= 0) sums[r2] += x[k];
      }
      for (int r = 0; r < nr; ++r) rhs(nv + r) = rows[r].rhs - sums[r];
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
    Eigen::VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite()) {
      sol = Eigen::FullPivLU<Eigen::MatrixXd>(K).solve(rhs);
      if (!sol.allFinite()) return out;
    }

    double amax = kInf;
    for (int k = 0; k < nv; ++k)
      if (sol(k) < 0.0) amax = std::min(amax, -x[k] / sol(k));
    double alpha = std::min(1.0, 0.995 * amax);
    for (int k = 0; k < nv; ++k) x[k] += alpha * sol(k);
    nu += alpha * (sol.tail(nr) - nu);
  }
  if (!(stat_res <= 1e-9 && feas_res <= 1e-11)) return out;

  // assemble multipliers; dropped (s,z) rows sit at mu = 0 in this gauge
  out.lambda.assign(std::size_t(in.ns) * in.ny, kNaN);
  out.mu.assign(std::size_t(in.ns) * in.nz, kNaN);
  for (int s = 0; s < in.ns; ++s) {
    if (in.forced[s] || in.ps[s] <= 0.0) continue;
    for (int y : in.ys[s]) out.lambda[s * in.ny + y] = 0.0;
    for (int z : in.zs[s]) out.mu[s * in.nz + z] = 0.0;
  }
  for (int r = 0; r < nr; ++r) {
    if (rows[r].kind == 0)
      out.lambda[rows[r].s * in.ny + rows[r].a] = -nu(r);
    else
      out.mu[rows[r].s * in.nz + rows[r].a] = -nu(r);
  }

  // align each (slice, component) gauge with the barrier multipliers; this is
  // what pins lambda + mu on dead cells joining two components (e.g. AND)
  {
    std::vector<double> num(comp_rep.size(), 0.0);
    std::vector<int> den(comp_rep.size(), 0);
    std::vector<std::uint8_t> seen_y(std::size_t(in.ns) * in.ny, 0);
    std::vector<std::uint8_t> seen_z(std::size_t(in.ns) * in.nz, 0);
    for (int k = 0; k < nv; ++k) {
      const auto& cell = in.cells[alive_cells[k]];
      int comp = comp_of_cell[k];
      if (!seen_y[cell.s * in.ny + cell.y]) {
        seen_y[cell.s * in.ny + cell.y] = 1;
        num[comp] += lam_b[cell.s * in.ny + cell.y] - out.lambda[cell.s * in.ny + cell.y];
        den[comp] += 1;
      }
      if (!seen_z[cell.s * in.nz + cell.z]) {
        seen_z[cell.s * in.nz + cell.z] = 1;
        num[comp] += out.mu[cell.s * in.nz + cell.z] - mu_b[cell.s * in.nz + cell.z];
        den[comp] += 1;
      }
    }
    std::vector<double> shift(comp_rep.size(), 0.0);
    for (std::size_t i = 0; i < comp_rep.size(); ++i)
      if (den[i] > 0 && std::isfinite(num[i])) shift[i] = num[i] / den[i];
    std::fill(seen_y.begin(), seen_y.end(), 0);
    std::fill(seen_z.begin(), seen_z.end(), 0);
    for (int k = 0; k < nv; ++k) {
      const auto& cell = in.cells[alive_cells[k]];
      int comp = comp_of_cell[k];
      if (!seen_y[cell.s * in.ny + cell.y]) {
        seen_y[cell.s * in.ny + cell.y] = 1;
        out.lambda[cell.s * in.ny + cell.y] += shift[comp];
      }
      if (!seen_z[cell.s * in.nz + cell.z]) {
        seen_z[cell.s * in.nz + cell.z] = 1;
        out.mu[cell.s * in.nz + cell.z] -= shift[comp];
      }
    }
  }

  std::vector<double> xfull(in.cells.size(), 0.0);
  for (int k = 0; k < nv; ++k) xfull[alive_cells[k]] = x[k];
  out.qdense = assemble_dense_q(in, xfull);
  complete_forced_multipliers(in, out.qdense, out.lambda, out.mu);
  out.ok = true;
  return out;
}

Coupling make_coupling(const Instance& in, std::vector<double> qdense) {
  Coupling c;
  c.ns = in.ns;
  c.ny = in.ny;
  c.nz = in.nz;
  c.q = std::move(qdense);
  c.admissible = in.admissible;
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public surface
// ---------------------------------------------------------------------------

Coupling feasible_start(const JointDistribution& p) {
  Instance in = build_instance(p);
  std::vector<double> q = in.forced_q;
  for (const auto& cell : in.cells)
    q[in.index(cell.s, cell.y, cell.z)] =
        in.msy[cell.s * in.ny + cell.y] * in.msz[cell.s * in.nz + cell.z] / in.ps[cell.s];
  return make_coupling(in, std::move(q));
}

KktCheck verify_kkt(const JointDistribution& p, const Coupling& coupling,
                    const KktCertificate& cert, const KktVerifyOptions& opts) {
  KktCheck out;
  const int ns = p.ns(), ny = p.ny(), nz = p.nz();
  const auto msy = p.marginal_sy();
  const auto msz = p.marginal_sz();

  for (double v : coupling.q) out.min_entry = std::min(out.min_entry, v);
  for (std::size_t i = 0; i < coupling.q.size(); ++i)
    if (!coupling.admissible[i])
      out.off_admissible_mass = std::max(out.off_admissible_mass, std::abs(coupling.q[i]));

  for (int s = 0; s < ns; ++s)
    for (int y = 0; y < ny; ++y) {
      double sum = 0.0;
      for (int z = 0; z < nz; ++z) sum += coupling.at(s, y, z);
      out.residual_primal = std::max(out.residual_primal, std::abs(sum - msy[s * ny + y]));
    }
  for (int s = 0; s < ns; ++s)
    for (int z = 0; z < nz; ++z) {
      double sum = 0.0;
      for (int y = 0; y < ny; ++y) sum += coupling.at(s, y, z);
      out.residual_primal = std::max(out.residual_primal, std::abs(sum - msz[s * nz + z]));
    }

  for (int y = 0; y < ny; ++y)
    for (int z = 0; z < nz; ++z) {
      double tot = 0.0;
      bool any_admissible = false;
      for (int s = 0; s < ns; ++s) {
        tot += coupling.at(s, y, z);
        any_admissible = any_admissible || coupling.is_admissible(s, y, z);
      }
      if (!any_admissible) continue;
      if (tot > opts.tau) {
        for (int s = 0; s < ns; ++s) {
          if (!coupling.is_admissible(s, y, z)) continue;
          double q = coupling.at(s, y, z);
          double lm = cert.lambda_at(s, y) + cert.mu_at(s, z);
          double res = (q > 0.0 && std::isfinite(lm)) ? std::abs(lm - std::log(q / tot)) : kInf;
          out.residual_stationarity = std::max(out.residual_stationarity, res);
        }
      } else {
        double sum = 0.0;
        for (int s = 0; s < ns; ++s) {
          if (!coupling.is_admissible(s, y, z)) continue;
          double lm = cert.lambda_at(s, y) + cert.mu_at(s, z);
          if (!std::isfinite(lm)) {
            sum = kInf;
            break;
          }
          sum += std::exp(lm);
        }
        out.residual_zero_cells = std::max(out.residual_zero_cells, std::max(0.0, sum - 1.0));
      }
    }

  out.feasible = out.residual_primal <= opts.tol_feas && out.min_entry >= -opts.tol_feas &&
                 out.off_admissible_mass <= opts.tol_feas;
  out.condition_a = out.residual_stationarity <= opts.tol_kkt;
  out.condition_b = out.residual_zero_cells <= opts.tol_kkt;
  out.pass = out.feasible && out.condition_a && out.condition_b;
  return out;
}

KktCheck verify_kkt(const JointDistribution& p, const Coupling& coupling,
                    const KktCertificate& cert, double tol) {
  KktVerifyOptions o;
  o.tol_kkt = tol;
  return verify_kkt(p, coupling, cert, o);
}

SolveReport solve(const JointDistribution& p, const SolveOptions& opts) {
  return solve(p, opts, nullptr);
}

SolveReport solve(const JointDistribution& p, const SolveOptions& opts,
                  const Coupling* warm_hint) {
  Instance in = build_instance(p);
  bool any_admissible = false;
  for (auto a : in.admissible) any_admissible = any_admissible || a;
  if (!any_admissible) throw DegenerateInstance("no admissible cells");

  SolveReport report;
  report.certificate.ns = in.ns;
  report.certificate.ny = in.ny;
  report.certificate.nz = in.nz;

  auto finish = [&](std::vector<double> qdense, std::vector<double> lambda,
                    std::vector<double> mu, int iterations, int stages) {
    report.coupling = make_coupling(in, std::move(qdense));
    report.certificate.lambda = std::move(lambda);
    report.certificate.mu = std::move(mu);
    report.iterations = iterations;
    report.barrier_stages = stages;
    report.M = entropy_of_coupling(in, report.coupling.q);
    KktVerifyOptions vo{opts.tol_kkt, opts.tol_feas, opts.tau};
    KktCheck check = verify_kkt(p, report.coupling, report.certificate, vo);
    report.certificate.residual_primal = check.residual_primal;
    report.certificate.residual_stationarity = check.residual_stationarity;
    report.certificate.residual_zero_cells = check.residual_zero_cells;
    report.certified = check.pass;
    report.strict_interior = true;
    for (std::size_t i = 0; i < report.coupling.q.size(); ++i)
      if (in.admissible[i] && report.coupling.q[i] <= opts.tau) report.strict_interior = false;
    return report;
  };

  // singleton feasible set: every slice forced
  if (in.nfree() == 0) {
    std::vector<double> lambda(std::size_t(in.ns) * in.ny, kNaN);
    std::vector<double> mu(std::size_t(in.ns) * in.nz, kNaN);
    std::vector<double> q = in.forced_q;
    complete_forced_multipliers(in, q, lambda, mu);
    return finish(std::move(q), std::move(lambda), std::move(mu), 0, 0);
  }

  // start point
  std::vector<double> x0(in.cells.size());
  for (std::size_t c = 0; c < in.cells.size(); ++c) {
    const auto& cell = in.cells[c];
    x0[c] = in.msy[cell.s * in.ny + cell.y] * in.msz[cell.s * in.nz + cell.z] / in.ps[cell.s];
  }
  double t_start = std::max(1.0, double(in.nfree()));
  if (warm_hint && warm_hint->q.size() == p.cell_count()) {
    bool usable = true;
    std::vector<double> xh(in.cells.size());
    for (std::size_t c = 0; c < in.cells.size() && usable; ++c) {
      const auto& cell = in.cells[c];
      double v = warm_hint->q[in.index(cell.s, cell.y, cell.z)];
      if (!(v > 0.0) || !std::isfinite(v)) usable = false;
      xh[c] = v;
    }
    if (usable && primal_residual(in, xh) < 1e-3) {
      // blend toward the product start for strict interiority, then let the
      // barrier phase re-center
      for (std::size_t c = 0; c < xh.size(); ++c) x0[c] = 0.9 * xh[c] + 0.1 * x0[c];
      t_start = std::max(t_start, 1e4);
    }
  }

  const double gap_target = std::min(opts.gap_target, 0.01 * opts.tol_kkt);
  BarrierState st = run_barrier(in, opts, x0, {}, t_start, gap_target, opts.max_iter);

  std::vector<double> lam_b, mu_b;
  multipliers_from_rows(in, st.nu, 1.0, lam_b, mu_b);
  std::vector<double> q_barrier = assemble_dense_q(in, st.x);
  complete_forced_multipliers(in, q_barrier, lam_b, mu_b);
  double h_barrier = entropy_of_coupling(in, q_barrier);

  if (!st.budget_exhausted) {
    double threshold = opts.split_threshold;
    for (int attempt = 0; attempt < 3; ++attempt) {
      Crossover cx = run_crossover(in, st.x, lam_b, mu_b, threshold, 30);
      if (cx.ok) {
        double h_cx = entropy_of_coupling(in, cx.qdense);
        if (h_cx >= h_barrier - 10.0 * (double(in.nfree()) / st.t) - 1e-12) {
          SolveReport r = finish(std::move(cx.qdense), std::move(cx.lambda), std::move(cx.mu),
                                 st.iterations + cx.iterations, st.stages);
          if (r.certified) return r;
        }
      }
      // push the barrier further and reclassify
      double t_next = std::min(st.t * 100.0, 1e15);
      if (t_next <= st.t) break;
      BarrierState ext = run_barrier(in, opts, st.x, st.nu, t_next,
                                     double(in.nfree()) / (t_next * 1.01),
                                     opts.max_iter - st.iterations);
      ext.iterations += st.iterations;
      ext.stages += st.stages;
      st = std::move(ext);
      if (st.budget_exhausted) break;
      multipliers_from_rows(in, st.nu, 1.0, lam_b, mu_b);
      q_barrier = assemble_dense_q(in, st.x);
      complete_forced_multipliers(in, q_barrier, lam_b, mu_b);
      h_barrier = entropy_of_coupling(in, q_barrier);
      threshold *= 0.3;
    }
  }

  // fall back to the barrier iterate; certified only if it happens to verify
  return finish(std::move(q_barrier), std::move(lam_b), std::move(mu_b), st.iterations, st.stages);
}

double bruteforce_M(const JointDistribution& p, const BruteforceOptions& opts) {
  const int ns = p.ns(), ny = p.ny(), nz = p.nz();
  const auto msy = p.marginal_sy();
  const auto msz = p.marginal_sz();
  const auto ps = p.marginal_s();

  // admissible cells and all constraint rows (rank deficiency is fine here,
  // the kernel basis absorbs it)
  std::vector<std::array<int, 3>> cells;
  std::vector<int> cell_at(p.cell_count(), -1);
  for (int s = 0; s < ns; ++s)
    for (int y = 0; y < ny; ++y)
      for (int z = 0; z < nz; ++z)
        if (msy[s * ny + y] > 0.0 && msz[s * nz + z] > 0.0) {
          cell_at[p.index(s, y, z)] = int(cells.size());
          cells.push_back({s, y, z});
        }
  const int n = int(cells.size());
  if (n == 0) throw DegenerateInstance("no admissible cells");

  std::vector<std::pair<int, int>> row_keys;  // kind, code
  for (int s = 0; s < ns; ++s) {
    for (int y = 0; y < ny; ++y)
      if (msy[s * ny + y] > 0.0) row_keys.push_back({0, s * ny + y});
    for (int z = 0; z < nz; ++z)
      if (msz[s * nz + z] > 0.0) row_keys.push_back({1, s * nz + z});
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(int(row_keys.size()), n);
  for (int c = 0; c < n; ++c) {
    auto [s, y, z] = cells[c];
    for (std::size_t r = 0; r < row_keys.size(); ++r) {
      auto [kind, code] = row_keys[r];
      if (kind == 0 && code == s * ny + y) A(int(r), c) = 1.0;
      if (kind == 1 && code == s * nz + z) A(int(r), c) = 1.0;
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  lu.setThreshold(1e-10);
  Eigen::MatrixXd N = lu.kernel();
  if (N.cols() == 1 && N.isZero(0)) N = Eigen::MatrixXd::Zero(n, 0);

  Eigen::VectorXd x(n);
  for (int c = 0; c < n; ++c) {
    auto [s, y, z] = cells[c];
    x(c) = msy[s * ny + y] * msz[s * nz + z] / ps[s];
  }

  auto eval_h = [&](const Eigen::VectorXd& v) {
    std::vector<double> tot(std::size_t(ny) * nz, 0.0);
    for (int c = 0; c < n; ++c) tot[cells[c][1] * nz + cells[c][2]] += std::max(v(c), 0.0);
    double h = 0.0;
    for (int c = 0; c < n; ++c) {
      double q = std::max(v(c), 0.0);
      if (q > 0.0) h -= q * std::log(q / tot[cells[c][1] * nz + cells[c][2]]);
    }
    return h;
  };

  double best = eval_h(x);
  if (N.cols() == 0) return best;

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd cur = x;
  for (int line = 0; line < opts.lines; ++line) {
    Eigen::VectorXd coeff(N.cols());
    for (int j = 0; j < N.cols(); ++j) coeff(j) = gauss(rng);
    Eigen::VectorXd d = N * coeff;
    double norm = d.norm();
    if (norm < 1e-14) continue;
    d /= norm;
    double lo = -kInf, hi = kInf;
    for (int c = 0; c < n; ++c) {
      if (d(c) > 1e-15) lo = std::max(lo, -cur(c) / d(c));
      if (d(c) < -1e-15) hi = std::min(hi, -cur(c) / d(c));
    }
    if (!(std::isfinite(lo) && std::isfinite(hi)) || hi <= lo) continue;
    double arg_best = 0.0, line_best = eval_h(cur);
    for (int k = 0; k < opts.line_grid; ++k) {
      double theta = lo + (hi - lo) * double(k) / double(opts.line_grid - 1);
      double h = eval_h(cur + theta * d);
      if (h > line_best) {
        line_best = h;
        arg_best = theta;
      }
    }
    cur += arg_best * d;
    for (int c = 0; c < n; ++c) cur(c) = std::max(cur(c), 0.0);
    best = std::max(best, line_best);
  }
  return best;
}

}  // namespace pidopt
