#include "pidopt/pid.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace pidopt {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double PidResult::value(MeasureSelector sel) const {
  switch (sel) {
    case MeasureSelector::CI: return CI;
    case MeasureSelector::SI: return SI;
    case MeasureSelector::UIY: return UIy;
    default: return UIz;
  }
}

const std::vector<double>& GradientBundle::grad(MeasureSelector sel) const {
  switch (sel) {
    case MeasureSelector::CI: return grad_CI;
    case MeasureSelector::SI: return grad_SI;
    case MeasureSelector::UIY: return grad_UIy;
    default: return grad_UIz;
  }
}

PidResult pid_from_report(const JointDistribution& p, const SolveReport& report) {
  PidResult r;
  const double h_s_yz = conditional_entropy(p, {Axis::S}, {Axis::Y, Axis::Z});
  const double h_s_y = conditional_entropy(p, {Axis::S}, {Axis::Y});
  const double h_s_z = conditional_entropy(p, {Axis::S}, {Axis::Z});
  r.mi_s_y = mutual_information(p, {Axis::S}, {Axis::Y});
  r.mi_s_z = mutual_information(p, {Axis::S}, {Axis::Z});
  r.mi_s_yz = mutual_information(p, {Axis::S}, {Axis::Y, Axis::Z});
  r.M = report.M;
  r.CI = report.M - h_s_yz;
  r.SI = report.M + r.mi_s_y - h_s_z;
  r.UIy = h_s_z - report.M;
  r.UIz = h_s_y - report.M;
  r.certified = report.certified;
  return r;
}

PidResult pid(const JointDistribution& p, const SolveOptions& opts) {
  return pid_from_report(p, solve(p, opts));
}

std::vector<double> supergradient_M(const SolveReport& report) {
  if (!report.certified)
    throw UncertifiedSolution("supergradient_M needs a certified solve report");
  const auto& cert = report.certificate;
  std::vector<double> g(std::size_t(cert.ns) * cert.ny * cert.nz, kNaN);
  for (int s = 0; s < cert.ns; ++s)
    for (int y = 0; y < cert.ny; ++y)
      for (int z = 0; z < cert.nz; ++z) {
        double lm = cert.lambda_at(s, y) + cert.mu_at(s, z);
        if (std::isfinite(lm)) g[(s * cert.ny + y) * cert.nz + z] = -lm;
      }
  return g;
}

GradientBundle pid_gradients(const JointDistribution& p, const SolveReport& report) {
  if (!p.full_support())
    throw ZeroCellOnSupportRequired("pid_gradients needs full support; call restrict_support first");
  if (!report.certified)
    throw UncertifiedSolution("pid_gradients needs a certified solve report");

  const int ns = p.ns(), ny = p.ny(), nz = p.nz();
  const auto msy = p.marginal_sy();
  const auto msz = p.marginal_sz();
  const auto myz = p.marginal_yz();
  const auto ms = p.marginal_s();
  const auto my = p.marginal_y();
  const auto mz = p.marginal_z();
  const auto& cert = report.certificate;

  GradientBundle b;
  const std::size_t n = p.cell_count();
  b.grad_M.resize(n);
  b.grad_CI.resize(n);
  b.grad_SI.resize(n);
  b.grad_UIy.resize(n);
  b.grad_UIz.resize(n);
  b.smooth = report.strict_interior;

  for (int s = 0; s < ns; ++s)
    for (int y = 0; y < ny; ++y)
      for (int z = 0; z < nz; ++z) {
        const int i = p.index(s, y, z);
        const double lm = cert.lambda_at(s, y) + cert.mu_at(s, z);
        b.grad_M[i] = -lm;
        b.grad_CI[i] = std::log(p.at(s, y, z) / myz[y * nz + z]) - lm;
        b.grad_SI[i] = -1.0 +
                       std::log(msy[s * ny + y] * msz[s * nz + z] / (ms[s] * my[y] * mz[z])) - lm;
        b.grad_UIy[i] = std::log(mz[z] / msz[s * nz + z]) + lm;
        b.grad_UIz[i] = std::log(my[y] / msy[s * ny + y]) + lm;
      }
  return b;
}

namespace {

double measure_at(const JointDistribution& p, MeasureSelector sel, const SolveOptions& opts,
                  const Coupling* warm) {
  return pid_from_report(p, solve(p, opts, warm)).value(sel);
}

DirectionalCheckReport run_directional(const JointDistribution& p,
                                       const std::vector<double>& grad, bool super,
                                       const std::vector<std::vector<double>>& directions,
                                       double step, double tol_scale,
                                       std::function<double(const JointDistribution&)> eval) {
  DirectionalCheckReport rep;
  const double base = eval(p);
  for (const auto& d : directions) {
    DirectionalCheckReport::Probe probe;
    std::vector<double> q(p.pmf());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += step * d[i];
    const double shifted = eval(p.with_pmf(std::move(q)));
    probe.quotient = (shifted - base) / step;
    probe.gdotd = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) probe.gdotd += grad[i] * d[i];
    const double tol = tol_scale * (1.0 + std::abs(probe.gdotd));
    // supergradient: quotient <= g.d + tol; subgradient: quotient >= g.d - tol
    probe.slack = super ? probe.gdotd + tol - probe.quotient : probe.quotient - probe.gdotd + tol;
    probe.ok = probe.slack >= 0.0;
    rep.all_ok = rep.all_ok && probe.ok;
    rep.worst_slack = rep.probes.empty() ? probe.slack : std::min(rep.worst_slack, probe.slack);
    rep.probes.push_back(probe);
  }
  return rep;
}

}  // namespace

DirectionalCheckReport directional_check(MeasureSelector sel, const JointDistribution& p,
                                         const GradientBundle& bundle,
                                         const std::vector<std::vector<double>>& directions,
                                         double step, double tol_scale, const SolveOptions& opts) {
  const bool super = sel == MeasureSelector::CI || sel == MeasureSelector::SI;
  return run_directional(p, bundle.grad(sel), super, directions, step, tol_scale,
                         [&](const JointDistribution& q) { return measure_at(q, sel, opts, nullptr); });
}

DirectionalCheckReport directional_check_M(const JointDistribution& p, const SolveReport& report,
                                           const std::vector<std::vector<double>>& directions,
                                           double step, double tol_scale,
                                           const SolveOptions& opts) {
  std::vector<double> g = supergradient_M(report);
  return run_directional(p, g, /*super=*/true, directions, step, tol_scale,
                         [&](const JointDistribution& q) { return solve(q, opts).M; });
}

namespace {

JointDistribution random_full_support_222(std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> pmf(8);
  double sum = 0.0;
  for (double& v : pmf) {
    v = expo(rng);
    sum += v;
  }
  for (double& v : pmf) v = 0.98 * v / sum + 0.02 / 8.0;  // keep cells comfortably interior
  Labels bits{{"0", "1"}, {"0", "1"}, {"0", "1"}};
  return JointDistribution::from_pmf(bits, std::move(pmf));
}

}  // namespace

std::array<SelectorWitnesses, 4> nonconvexity_witness_all(int attempts, std::uint64_t seed,
                                                          double min_margin,
                                                          const SolveOptions& opts) {
  std::array<SelectorWitnesses, 4> out;
  std::mt19937_64 rng(seed);
  int done = 0;
  for (int attempt = 0; attempt < attempts && done < 8; ++attempt) {
    JointDistribution p1 = random_full_support_222(rng);
    JointDistribution p2 = random_full_support_222(rng);
    const double theta = 0.5;
    JointDistribution mid = JointDistribution::mix(p1, theta, p2, 1.0 - theta);
    PidResult r1 = pid(p1, opts);
    PidResult r2 = pid(p2, opts);
    PidResult rm = pid(mid, opts);
    if (!(r1.certified && r2.certified && rm.certified)) continue;
    for (int k = 0; k < 4; ++k) {
      MeasureSelector sel = kAllSelectors[k];
      const double mixv = theta * r1.value(sel) + (1.0 - theta) * r2.value(sel);
      const double midv = rm.value(sel);
      auto& slot = out[std::size_t(k)];
      slot.attempts_used = attempt + 1;
      if (!slot.concavity_violation && midv < mixv - min_margin) {
        slot.concavity_violation = ConvexityWitness{p1, p2, theta, mixv - midv};
        ++done;
      }
      if (!slot.convexity_violation && midv > mixv + min_margin) {
        slot.convexity_violation = ConvexityWitness{p1, p2, theta, midv - mixv};
        ++done;
      }
    }
  }
  return out;
}

SelectorWitnesses nonconvexity_witness(MeasureSelector sel, int attempts, std::uint64_t seed,
                                       const SolveOptions& opts) {
  auto all = nonconvexity_witness_all(attempts, seed, 1e-4, opts);
  return all[std::size_t(static_cast<int>(sel))];
}

}  // namespace pidopt
