#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pidopt/pid.hpp"

namespace pidopt {

struct ExtractionResult {
  double value = 0.0;  // nats, best SI(pi(p)) found
  StochasticMatrix argmax = StochasticMatrix::identity(1);
  std::vector<int> argmax_map;  // deterministic map for si_ext, empty otherwise

  struct TracePoint {
    int restart = 0;
    int iteration = 0;
    double objective = 0.0;  // nats
  };
  std::vector<TracePoint> trace;
  int restarts_used = 0;
  bool certified = false;  // true only for exhaustive enumeration
};

// Exact maximum of SI over deterministic garblings f: S -> [m] by exhaustive
// enumeration; m^|S| must stay within the guard (1e6).
ExtractionResult si_ext(const JointDistribution& p, int m);
ExtractionResult si_ext(const JointDistribution& p);  // m = |S|

struct ClubOptions {
  int restarts = 10;
  int max_steps = 500;
  std::uint64_t seed = 42;
  double eta0 = 1.0;
  SolveOptions solver;
};

// Projected supergradient ascent for SI over stochastic [m] x S matrices,
// best of restarts (Dirichlet(1) columns) plus one identity-padded start and
// any caller-provided starts. Heuristic: certified = false.
ExtractionResult si_club(const JointDistribution& p, int m, const ClubOptions& opts = {},
                         const std::vector<StochasticMatrix>& extra_starts = {});

// Euclidean projection onto the probability simplex (sorted-threshold rule).
std::vector<double> project_simplex(std::vector<double> v);

// Adds zero rows until the garbling has m rows.
StochasticMatrix pad_rows(const StochasticMatrix& pi, int m);

struct SandwichReport {
  double ext_value = 0.0;                          // si_ext(p, |S|)
  std::vector<std::pair<int, double>> club_values; // (m, value) for m0, m0+1, m0+2
  bool ext_le_club = false;
  bool monotone = false;
  bool ok = false;
};

// Checks si_ext(p,|S|) <= si_club(p,m0) + 1e-5 and monotonicity of si_club
// over m in {m0, m0+1, m0+2}, with padded warm starts carrying each maximizer
// into the next m.
SandwichReport check_sandwich(const JointDistribution& p, int m0, const ClubOptions& opts = {});

}  // namespace pidopt
