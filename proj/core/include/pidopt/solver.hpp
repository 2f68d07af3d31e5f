#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "pidopt/distribution.hpp"

namespace pidopt {

struct SolveOptions {
  double tol_kkt = 1e-7;    // certificate residual bound (conditions (a)/(b))
  double tol_feas = 1e-10;  // marginal feasibility bound
  int max_iter = 400;       // total Newton step budget
  // Barrier schedule: t grows by barrier_multiplier per stage until
  // n_free / t <= min(gap_target, 0.01 * tol_kkt).
  double barrier_multiplier = 10.0;
  double gap_target = 1e-11;
  double tau = 1e-12;             // block-positivity split for (a) vs (b)
  double split_threshold = 1e-8;  // alive/dead block classification after the barrier phase
};

// Feasible/optimal point of the coupling polytope, dense over p's grid.
// Cells outside admissible are identically zero; admissible means both the
// (s,y)- and (s,z)-marginal of p are positive.
struct Coupling {
  int ns = 0, ny = 0, nz = 0;
  std::vector<double> q;
  std::vector<std::uint8_t> admissible;

  int index(int s, int y, int z) const { return (s * ny + y) * nz + z; }
  double at(int s, int y, int z) const { return q[index(s, y, z)]; }
  bool is_admissible(int s, int y, int z) const { return admissible[index(s, y, z)] != 0; }
};

// Lagrange multipliers for the marginal constraints. lambda is indexed by
// (s,y), mu by (s,z); rows whose p-marginal is zero hold NaN and never enter
// any certified quantity.
struct KktCertificate {
  int ns = 0, ny = 0, nz = 0;
  std::vector<double> lambda;  // ns*ny
  std::vector<double> mu;      // ns*nz
  double residual_primal = std::numeric_limits<double>::infinity();
  double residual_stationarity = std::numeric_limits<double>::infinity();
  double residual_zero_cells = std::numeric_limits<double>::infinity();

  double lambda_at(int s, int y) const { return lambda[s * ny + y]; }
  double mu_at(int s, int z) const { return mu[s * nz + z]; }
};

struct SolveReport {
  double M = 0.0;  // max H(S|Y,Z), in nats, evaluated at coupling.q
  Coupling coupling;
  KktCertificate certificate;
  int iterations = 0;
  int barrier_stages = 0;
  bool strict_interior = false;  // q > tau on every admissible cell
  bool certified = false;
};

// Conditional-product start q0 = p_{s,y,*} p_{s,*,z} / p_{s,*,*}; strictly
// positive on all admissible cells and exactly feasible.
Coupling feasible_start(const JointDistribution& p);

// Maximize H(S|Y,Z) over couplings with the (S,Y)- and (S,Z)-marginals of p.
// Log-barrier interior point plus an exact Newton crossover on the detected
// optimal support; multipliers are read off the final KKT system. If the
// budget runs out the best iterate is returned with certified = false.
SolveReport solve(const JointDistribution& p, const SolveOptions& opts = {});
SolveReport solve(const JointDistribution& p, const SolveOptions& opts, const Coupling* warm_hint);

struct KktVerifyOptions {
  double tol_kkt = 1e-7;
  double tol_feas = 1e-10;
  double tau = 1e-12;
};

struct KktCheck {
  double residual_primal = 0.0;
  double residual_stationarity = 0.0;
  double residual_zero_cells = 0.0;
  double min_entry = 0.0;            // most negative coupling entry
  double off_admissible_mass = 0.0;  // largest |q| outside the admissible set
  bool feasible = false;
  bool condition_a = false;
  bool condition_b = false;
  bool pass = false;
};

// Checks feasibility plus Proposition-style optimality: on blocks (y,z) with
// q_{*,y,z} > tau, lambda_{s,y} + mu_{s,z} must match ln(q_{s,y,z}/q_{*,y,z});
// on blocks with q_{*,y,z} <= tau the certificate must satisfy
// sum_s exp(lambda + mu) <= 1 over admissible s. Independent of solve().
KktCheck verify_kkt(const JointDistribution& p, const Coupling& coupling,
                    const KktCertificate& cert, const KktVerifyOptions& opts = {});
KktCheck verify_kkt(const JointDistribution& p, const Coupling& coupling,
                    const KktCertificate& cert, double tol);

struct BruteforceOptions {
  int lines = 200;     // random feasible segments scanned
  int line_grid = 129; // samples per segment, endpoints included
  std::uint64_t seed = 20240601;
};

// Lower-bound oracle: best H(S|Y,Z) over sampled feasible points (segment
// grids through the polytope from the conditional-product start). Never
// exceeds the true optimum. Intended for small instances.
double bruteforce_M(const JointDistribution& p, const BruteforceOptions& opts = {});

}  // namespace pidopt
