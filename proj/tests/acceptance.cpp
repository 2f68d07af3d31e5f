// Acceptance suite: one line per criterion, nonzero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pidopt/extractable.hpp"
#include "pidopt/io.hpp"
#include "pidopt/pid.hpp"
#include "support.hpp"

using namespace pidopt;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int idx, const std::string& name, bool pass, const std::string& detail) {
  std::string dots(std::max<std::size_t>(2, 46 - name.size()), '.');
  std::printf("[%d] %s %s %s  (%s)\n", idx, name.c_str(), dots.c_str(), pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[256];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// --- 1: gate table ----------------------------------------------------------

void criterion_gate_table() {
  auto t0 = Clock::now();
  struct Row {
    const char* name;
    JointDistribution p;
    double ci, si, uiy, uiz;  // bits
  };
  std::vector<Row> rows;
  rows.push_back({"XOR", JointDistribution::xor_gate(), 1.0, 0.0, 0.0, 0.0});
  rows.push_back({"AND", JointDistribution::and_gate(), 0.5, 0.311278124459133, 0.0, 0.0});
  rows.push_back({"RDN", JointDistribution::rdn_gate(), 0.0, 1.0, 0.0, 0.0});
  rows.push_back({"UNQ", JointDistribution::unq_gate(), 0.0, 0.0, 1.0, 0.0});
  double max_err = 0.0, max_solve = 0.0;
  bool ok = true;
  for (auto& row : rows) {
    auto s0 = Clock::now();
    auto r = pid(row.p);
    max_solve = std::max(max_solve, seconds_since(s0));
    ok = ok && r.certified;
    for (auto [have, want] : {std::pair{r.CI, row.ci},
                              {r.SI, row.si},
                              {r.UIy, row.uiy},
                              {r.UIz, row.uiz}})
      max_err = std::max(max_err, std::abs(nats_to_bits(have) - want));
  }
  ok = ok && max_err <= 1e-5 && max_solve < 1.0;
  report(1, "gate table XOR/AND/RDN/UNQ", ok,
         fmt("max err %.2e bits, slowest solve %.1f ms", max_err, max_solve * 1e3));
}

// --- 2: KKT certification ---------------------------------------------------

void criterion_kkt() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(70801);
  double worst_a = 0.0, worst_b = 0.0, worst_primal = 0.0, worst_identity = 0.0;
  int certified = 0;
  const int total = 200;
  for (int trial = 0; trial < total; ++trial) {
    int ns = 2 + int(rng() % 2), ny = 2 + int(rng() % 2), nz = 2 + int(rng() % 2);
    auto p = testsup::random_full_support(rng, ns, ny, nz);
    auto rep = solve(p);
    if (rep.certified) ++certified;
    worst_a = std::max(worst_a, rep.certificate.residual_stationarity);
    worst_b = std::max(worst_b, rep.certificate.residual_zero_cells);
    worst_primal = std::max(worst_primal, rep.certificate.residual_primal);
    auto r = pid_from_report(p, rep);
    for (double v : {r.residual_total(), r.residual_y(), r.residual_z()})
      worst_identity = std::max(worst_identity, std::abs(v));
    for (double v : {r.CI, r.SI, r.UIy, r.UIz})  // nonnegativity
      worst_identity = std::max(worst_identity, std::max(0.0, -v));
  }
  // AND exercises condition (b) on the two zero-mass (y,z) blocks
  auto and_rep = solve(JointDistribution::and_gate());
  int zero_blocks = 0;
  for (int y = 0; y < 2; ++y)
    for (int z = 0; z < 2; ++z) {
      double tot = 0.0;
      for (int s = 0; s < 2; ++s) tot += and_rep.coupling.at(s, y, z);
      if (tot <= 1e-12) ++zero_blocks;
    }
  double elapsed = seconds_since(t0);
  bool ok = certified == total && worst_a <= 1e-7 && worst_b <= 1e-7 && worst_identity <= 1e-7 &&
            and_rep.certified && zero_blocks == 2 && elapsed < 30.0;
  report(2, "KKT certificates on 200 random instances", ok,
         fmt("%d/%d certified, res a %.1e, b %.1e, ids %.1e, AND zero-blocks %d, %.1f s",
             certified, total, worst_a, worst_b, worst_identity, zero_blocks, elapsed));
}

// --- 3: gradient audit ------------------------------------------------------

void criterion_gradient_audit() {
  std::mt19937_64 rng(30303);
  const double eps = 1e-5;
  int audited = 0, probes = 0;
  double worst = 0.0;  // deviation / (1 + |g.d|)
  while (audited < 20) {
    auto p = testsup::random_full_support(rng, 2, 2, 2, 0.05);
    auto rep = solve(p);
    if (!rep.certified || !rep.strict_interior) continue;
    ++audited;
    auto bundle = pid_gradients(p, rep);
    for (int k = 0; k < 20; ++k) {
      auto d = testsup::random_zero_sum_direction(rng, p.cell_count());
      std::vector<double> plus(p.pmf()), minus(p.pmf());
      for (std::size_t i = 0; i < plus.size(); ++i) {
        plus[i] += eps * d[i];
        minus[i] -= eps * d[i];
      }
      auto rp = pid(p.with_pmf(plus));
      auto rm = pid(p.with_pmf(minus));
      for (auto sel : kAllSelectors) {
        double fd = (rp.value(sel) - rm.value(sel)) / (2.0 * eps);
        double gd = testsup::dot(bundle.grad(sel), d);
        worst = std::max(worst, std::abs(fd - gd) / (1.0 + std::abs(gd)));
        ++probes;
      }
    }
  }
  bool ok = worst <= 1e-4;
  report(3, "gradient audit on 20 smooth instances", ok,
         fmt("%d probes, worst normalized deviation %.2e", probes, worst));
}

// --- 4: supergradient of M --------------------------------------------------

void criterion_supergradient_M() {
  std::mt19937_64 rng(40404);
  double worst_gap = 1e300;  // min slack of the global inequality
  for (int trial = 0; trial < 50; ++trial) {
    auto p = testsup::random_full_support(rng, 2, 2, 2);
    auto pp = testsup::random_full_support(rng, 2, 2, 2);
    auto rep = solve(p);
    auto g = supergradient_M(rep);
    double bound = rep.M;
    for (std::size_t i = 0; i < g.size(); ++i) bound += g[i] * (pp.pmf()[i] - p.pmf()[i]);
    worst_gap = std::min(worst_gap, bound + 1e-7 - solve(pp).M);
  }
  double worst_mid = 1e300;
  for (int trial = 0; trial < 50; ++trial) {
    auto p1 = testsup::random_full_support(rng, 2, 2, 2);
    auto p2 = testsup::random_full_support(rng, 2, 2, 2);
    double theta = 0.5;
    auto mid = JointDistribution::mix(p1, theta, p2, 1.0 - theta);
    double slack = solve(mid).M - theta * solve(p1).M - (1.0 - theta) * solve(p2).M;
    worst_mid = std::min(worst_mid, slack);
  }
  bool ok = worst_gap >= 0.0 && worst_mid >= -1e-7;
  report(4, "M supergradient + midpoint concavity", ok,
         fmt("min global slack %.2e, min midpoint slack %.2e", worst_gap, worst_mid));
}

// --- 5: directional inequalities --------------------------------------------

// The local super/subgradient claim for the four measures is about the points
// where they are not smooth; at smooth points the same measures are provably
// neither concave nor convex (criterion 6 finds witnesses), so the finite-step
// inequality cannot hold there. The sample is therefore drawn from gate
// perturbations verified to keep a non-strict optimal coupling; M, whose
// supergradient is global, is additionally probed at random smooth points.
void criterion_directional() {
  std::mt19937_64 rng(50505);
  std::exponential_distribution<double> expo(1.0);

  // Tilt the gate's support cells a little (seeded), then spread delta
  // uniformly over the off-support cells. Off-support cells stay >= delta/4,
  // comfortably above the probe step, and the optimal coupling keeps its
  // zeros for these deltas.
  std::uniform_real_distribution<double> tilt(0.8, 1.2);
  auto perturbed_gate = [&](const JointDistribution& gate, double delta, bool tilt_support) {
    std::vector<double> pmf(gate.pmf());
    double on_mass = 0.0;
    std::size_t off = 0;
    for (double& v : pmf) {
      if (v > 0.0) {
        if (tilt_support) v *= tilt(rng);
        on_mass += v;
      } else {
        ++off;
      }
    }
    for (double& v : pmf) v = v > 0.0 ? (1.0 - delta) * v / on_mass : delta / double(off);
    return gate.with_pmf(std::move(pmf));
  };

  std::vector<JointDistribution> points;
  {
    // AND keeps its optimal zeros under symmetric spreading only (its dual is
    // degenerate); RDN keeps them under tilted spreading too.
    int guard = 0;
    while (points.size() < 20 && guard < 200) {
      ++guard;
      bool use_and = points.size() % 2 == 0;
      double delta = 0.02 + 0.002 * double(points.size());
      auto p = use_and ? perturbed_gate(JointDistribution::and_gate(), delta, false)
                       : perturbed_gate(JointDistribution::rdn_gate(), delta, true);
      auto rep = solve(p);
      if (rep.certified && !rep.strict_interior) points.push_back(std::move(p));
    }
  }

  int nonsmooth = 0, checked = 0;
  double worst_slack = 1e300;
  bool ok = points.size() == 20;
  for (const auto& p : points) {
    auto rep = solve(p);
    if (!rep.certified) {
      ok = false;
      continue;
    }
    if (!rep.strict_interior) ++nonsmooth;
    auto bundle = pid_gradients(p, rep);
    std::vector<std::vector<double>> dirs;
    for (int k = 0; k < 50; ++k)
      dirs.push_back(testsup::random_zero_sum_direction(rng, p.cell_count()));
    for (auto sel : kAllSelectors) {
      auto check = directional_check(sel, p, bundle, dirs);
      ok = ok && check.all_ok;
      worst_slack = std::min(worst_slack, check.worst_slack);
      checked += int(check.probes.size());
    }
    auto m = directional_check_M(p, rep, dirs);
    ok = ok && m.all_ok;
    worst_slack = std::min(worst_slack, m.worst_slack);
    checked += int(m.probes.size());
  }
  // global M supergradient inequality also probed at smooth random points
  for (int k = 0; k < 10; ++k) {
    auto p = testsup::random_full_support(rng, 2, 2, 2);
    auto rep = solve(p);
    if (!rep.certified) {
      ok = false;
      continue;
    }
    std::vector<std::vector<double>> dirs;
    for (int j = 0; j < 50; ++j)
      dirs.push_back(testsup::random_zero_sum_direction(rng, p.cell_count()));
    auto m = directional_check_M(p, rep, dirs);
    ok = ok && m.all_ok;
    worst_slack = std::min(worst_slack, m.worst_slack);
    checked += int(m.probes.size());
  }
  ok = ok && nonsmooth == 20;
  report(5, "directional super/subgradient inequalities", ok,
         fmt("%d probes, %d non-smooth points + 10 smooth M-points, min slack %.2e", checked,
             nonsmooth, worst_slack));
}

// --- 6: non-convexity witnesses ---------------------------------------------

void criterion_witnesses() {
  auto all = nonconvexity_witness_all(10000, 42);
  bool found_all = true;
  double min_margin = 1e300;
  int used = 0;
  for (const auto& w : all) {
    found_all = found_all && w.concavity_violation.has_value() &&
                w.convexity_violation.has_value();
    if (w.concavity_violation) min_margin = std::min(min_margin, w.concavity_violation->margin);
    if (w.convexity_violation) min_margin = std::min(min_margin, w.convexity_violation->margin);
    used = std::max(used, w.attempts_used);
  }

  // frozen witnesses must still exhibit their margins
  bool regression_ok = true;
  int regressed = 0;
  try {
    auto j = nlohmann::json::parse(read_file(std::string(FIXTURES_DIR) + "/witnesses.json"));
    auto parse_dist = [](const nlohmann::json& arr) {
      std::vector<JointDistribution::Entry> entries;
      for (const auto& e : arr)
        entries.push_back({e["s"].get<std::string>(), e["y"].get<std::string>(),
                           e["z"].get<std::string>(), e["p"].get<double>()});
      return JointDistribution::validate(entries);
    };
    int k = 0;
    for (const char* name : {"CI", "SI", "UIy", "UIz"}) {
      auto sel = kAllSelectors[k++];
      for (const char* kind : {"concavity_violation", "convexity_violation"}) {
        const auto& w = j["witnesses"][name][kind];
        if (w.is_null()) {
          regression_ok = false;
          continue;
        }
        auto p1 = parse_dist(w["p1"]);
        auto p2 = parse_dist(w["p2"]);
        double theta = w["theta"].get<double>();
        auto mid = JointDistribution::mix(p1, theta, p2, 1.0 - theta);
        double v1 = pid(p1).value(sel), v2 = pid(p2).value(sel), vm = pid(mid).value(sel);
        double gap = vm - (theta * v1 + (1.0 - theta) * v2);
        bool holds = std::string(kind) == "concavity_violation" ? gap < -1e-4 : gap > 1e-4;
        regression_ok = regression_ok && holds;
        ++regressed;
      }
    }
  } catch (const std::exception&) {
    regression_ok = false;
  }

  bool ok = found_all && min_margin > 1e-4 && regression_ok && regressed == 8;
  report(6, "non-convexity witnesses for all measures", ok,
         fmt("live search <=%d attempts, min margin %.2e nats, %d frozen re-verified", used,
             min_margin, regressed));
}

// --- 7: extractable sandwich --------------------------------------------------

void criterion_sandwich() {
  auto t0 = Clock::now();
  ClubOptions opts;
  opts.restarts = 10;
  opts.seed = 42;

  bool ok = true;
  int instances = 0;
  auto run_one = [&](const JointDistribution& p) {
    auto rep = check_sandwich(p, p.ns(), opts);
    ok = ok && rep.ok;
    ++instances;
  };
  run_one(JointDistribution::xor_gate());
  run_one(JointDistribution::and_gate());
  run_one(JointDistribution::rdn_gate());
  run_one(JointDistribution::unq_gate());
  std::mt19937_64 rng(70707);
  for (int trial = 0; trial < 20; ++trial) run_one(testsup::random_full_support(rng, 3, 2, 2));

  auto rdn_club = si_club(JointDistribution::rdn_gate(), 2, opts);
  bool rdn_ok = nats_to_bits(rdn_club.value) >= 1.0 - 1e-4;
  double elapsed = seconds_since(t0);
  ok = ok && rdn_ok && elapsed < 300.0;
  report(7, "extractable sandwich + monotonicity", ok,
         fmt("%d instances, si_club(RDN,2) = %.6f bits, %.1f s", instances,
             nats_to_bits(rdn_club.value), elapsed));
}

// --- 8: oracle equivalence ----------------------------------------------------

void criterion_oracle() {
  std::mt19937_64 rng(80808);
  double worst = 1e300;
  for (int trial = 0; trial < 20; ++trial) {
    auto p = testsup::random_full_support(rng, 2, 2, 2);
    double lower = bruteforce_M(p);
    worst = std::min(worst, solve(p).M - (lower - 1e-6));
  }
  BruteforceOptions fine;
  fine.lines = 4;
  fine.line_grid = 10001;
  double and_brute = bruteforce_M(JointDistribution::and_gate(), fine);
  double and_m = solve(JointDistribution::and_gate()).M;
  double and_err = std::abs(and_m - 0.5 * std::log(2.0));
  bool ok = worst >= 0.0 && and_err <= 1e-7 && and_brute <= and_m + 1e-12;
  report(8, "solver vs bruteforce oracle", ok,
         fmt("min dominance slack %.2e, AND |M - ln2/2| = %.2e", worst, and_err));
}

}  // namespace

int main() {
  std::printf("acceptance suite (tolerances pinned in code)\n");
  auto t0 = Clock::now();
  criterion_gate_table();
  criterion_kkt();
  criterion_gradient_audit();
  criterion_supergradient_M();
  criterion_directional();
  criterion_witnesses();
  criterion_sandwich();
  criterion_oracle();
  std::printf("%d/8 criteria passed in %.1f s\n", 8 - g_failures, seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
