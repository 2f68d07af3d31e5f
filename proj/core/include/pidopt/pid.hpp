#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "pidopt/measures.hpp"
#include "pidopt/solver.hpp"

namespace pidopt {

inline constexpr double kLn2 = 0.6931471805599453;
inline double nats_to_bits(double nats) { return nats / kLn2; }

// Decomposition values in nats:
//   CI  = M - H(S|Y,Z)      SI  = M + MI(S;Y) - H(S|Z)
//   UIy = H(S|Z) - M        UIz = H(S|Y) - M
struct PidResult {
  double M = 0.0, CI = 0.0, SI = 0.0, UIy = 0.0, UIz = 0.0;
  double mi_s_yz = 0.0, mi_s_y = 0.0, mi_s_z = 0.0;
  bool certified = false;

  double value(MeasureSelector sel) const;
  double residual_total() const { return CI + SI + UIy + UIz - mi_s_yz; }
  double residual_y() const { return SI + UIy - mi_s_y; }
  double residual_z() const { return SI + UIz - mi_s_z; }
};

PidResult pid(const JointDistribution& p, const SolveOptions& opts = {});
PidResult pid_from_report(const JointDistribution& p, const SolveReport& report);

// Supergradient of M: -lambda_{s,y} - mu_{s,z} per cell. NaN on cells whose
// multipliers are undefined (never happens for full-support p). Requires a
// certified report.
std::vector<double> supergradient_M(const SolveReport& report);

// The Theorem's gradient vectors at a full-support p, in ambient coordinates
// (meaningful up to a multiple of the all-ones vector):
//   grad_M   = -lambda - mu
//   grad_CI  = ln(p_{s,y,z}/p_{*,y,z}) - lambda - mu
//   grad_SI  = -1 + ln(p_{s,y,*} p_{s,*,z} / (p_{s,*,*} p_{*,y,*} p_{*,*,z})) - lambda - mu
//   grad_UIy = ln(p_{*,*,z}/p_{s,*,z}) + lambda + mu
//   grad_UIz = ln(p_{*,y,*}/p_{s,y,*}) + lambda + mu
// smooth is set when the optimal coupling is strictly positive.
struct GradientBundle {
  std::vector<double> grad_M, grad_CI, grad_SI, grad_UIy, grad_UIz;
  bool smooth = false;

  const std::vector<double>& grad(MeasureSelector sel) const;
};

GradientBundle pid_gradients(const JointDistribution& p, const SolveReport& report);

// One-sided directional probes of the super/subgradient inequalities at step
// eps: for CI, SI (and M) require  [I(p+eps d)-I(p)]/eps <= g.d + tol, for
// UIy, UIz require >= g.d - tol, with tol = tol_scale*(1+|g.d|).
struct DirectionalCheckReport {
  struct Probe {
    double quotient = 0.0;
    double gdotd = 0.0;
    double slack = 0.0;  // signed margin, >= -tol means ok
    bool ok = false;
  };
  std::vector<Probe> probes;
  bool all_ok = true;
  double worst_slack = 0.0;
};

DirectionalCheckReport directional_check(MeasureSelector sel, const JointDistribution& p,
                                         const GradientBundle& bundle,
                                         const std::vector<std::vector<double>>& directions,
                                         double step = 1e-4, double tol_scale = 1e-5,
                                         const SolveOptions& opts = {});

DirectionalCheckReport directional_check_M(const JointDistribution& p,
                                           const SolveReport& report,
                                           const std::vector<std::vector<double>>& directions,
                                           double step = 1e-4, double tol_scale = 1e-5,
                                           const SolveOptions& opts = {});

// Random search for violations of midpoint concavity/convexity of a measure
// over full-support 2x2x2 distributions. margin is in nats.
struct ConvexityWitness {
  JointDistribution p1, p2;
  double theta = 0.5;
  double margin = 0.0;  // amount by which the midpoint inequality fails
};

struct SelectorWitnesses {
  std::optional<ConvexityWitness> concavity_violation;  // I(mid) < mix - margin
  std::optional<ConvexityWitness> convexity_violation;  // I(mid) > mix + margin
  int attempts_used = 0;
};

SelectorWitnesses nonconvexity_witness(MeasureSelector sel, int attempts, std::uint64_t seed,
                                       const SolveOptions& opts = {});

// Shared search for all four measures at once (cheaper than four passes).
std::array<SelectorWitnesses, 4> nonconvexity_witness_all(int attempts, std::uint64_t seed,
                                                          double min_margin = 1e-4,
                                                          const SolveOptions& opts = {});

}  // namespace pidopt
