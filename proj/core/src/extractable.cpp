#include "pidopt/extractable.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pidopt {

namespace {

// SI value of pi(p), computed on the support restriction of the pushforward.
double si_of_pushforward(const JointDistribution& p, const StochasticMatrix& pi,
                         const SolveOptions& opts, SolveReport* report_out = nullptr,
                         JointDistribution* restricted_out = nullptr) {
  JointDistribution push = pushforward(pi, p).restrict_support();
  SolveReport rep = solve(push, opts);
  PidResult r = pid_from_report(push, rep);
  if (report_out) *report_out = std::move(rep);
  if (restricted_out) *restricted_out = push;
  return r.SI;
}

// Chain-rule ascent direction D_{t,s} = sum_{y,z} gSI(pi(p))_{t,y,z} p_{s,y,z}.
// Rows of pi(p) that died, and cells whose marginals or multipliers are
// undefined, contribute 0; restarts take care of escaping those faces.
std::vector<double> ascent_direction(const JointDistribution& p, const StochasticMatrix& pi,
                                     const JointDistribution& restricted,
                                     const SolveReport& report) {
  const int m = pi.rows();
  const int ns = p.ns(), ny = p.ny(), nz = p.nz();
  const int rt = restricted.ns(), ry = restricted.ny(), rz = restricted.nz();

  auto index_of = [](const std::vector<std::string>& labels, const std::string& v) {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == v) return int(i);
    return -1;
  };
  std::vector<int> tmap(m, -1), ymap(ny, -1), zmap(nz, -1);
  for (int t = 0; t < m; ++t) tmap[t] = index_of(restricted.labels(Axis::S), std::to_string(t));
  for (int y = 0; y < ny; ++y) ymap[y] = index_of(restricted.labels(Axis::Y), p.labels(Axis::Y)[y]);
  for (int z = 0; z < nz; ++z) zmap[z] = index_of(restricted.labels(Axis::Z), p.labels(Axis::Z)[z]);

  const auto msy = restricted.marginal_sy();
  const auto msz = restricted.marginal_sz();
  const auto ms = restricted.marginal_s();
  const auto my = restricted.marginal_y();
  const auto mz = restricted.marginal_z();
  const auto& cert = report.certificate;

  std::vector<double> gsi(std::size_t(rt) * ry * rz, 0.0);
  for (int t = 0; t < rt; ++t)
    for (int y = 0; y < ry; ++y)
      for (int z = 0; z < rz; ++z) {
        if (!(msy[t * ry + y] > 0.0 && msz[t * rz + z] > 0.0 && ms[t] > 0.0 && my[y] > 0.0 &&
              mz[z] > 0.0))
          continue;
        double lm = cert.lambda_at(t, y) + cert.mu_at(t, z);
        if (!std::isfinite(lm)) continue;
        gsi[(t * ry + y) * rz + z] =
            -1.0 + std::log(msy[t * ry + y] * msz[t * rz + z] / (ms[t] * my[y] * mz[z])) - lm;
      }

  std::vector<double> d(std::size_t(m) * ns, 0.0);
  for (int t = 0; t < m; ++t) {
    if (tmap[t] < 0) continue;
    for (int s = 0; s < ns; ++s) {
      double acc = 0.0;
      for (int y = 0; y < ny; ++y) {
        if (ymap[y] < 0) continue;
        for (int z = 0; z < nz; ++z) {
          if (zmap[z] < 0) continue;
          double w = p.at(s, y, z);
          if (w > 0.0) acc += gsi[(tmap[t] * ry + ymap[y]) * rz + zmap[z]] * w;
        }
      }
      d[std::size_t(t) * ns + s] = acc;
    }
  }
  return d;
}

StochasticMatrix project_columns(int m, int ns, const std::vector<double>& raw) {
  std::vector<double> entries(raw.size());
  std::vector<double> col(m);
  for (int s = 0; s < ns; ++s) {
    for (int t = 0; t < m; ++t) col[t] = raw[std::size_t(t) * ns + s];
    std::vector<double> proj = project_simplex(col);
    for (int t = 0; t < m; ++t) entries[std::size_t(t) * ns + s] = proj[t];
  }
  return StochasticMatrix::validate(m, ns, std::move(entries));
}

StochasticMatrix identity_padded_start(int m, int ns) {
  std::vector<int> map(ns);
  for (int s = 0; s < ns; ++s) map[s] = m >= ns ? s : s % m;
  return StochasticMatrix::from_map(map, m);
}

StochasticMatrix dirichlet_start(int m, int ns, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> e(std::size_t(m) * ns);
  for (int s = 0; s < ns; ++s) {
    double sum = 0.0;
    for (int t = 0; t < m; ++t) {
      double v = expo(rng);
      e[std::size_t(t) * ns + s] = v;
      sum += v;
    }
    for (int t = 0; t < m; ++t) e[std::size_t(t) * ns + s] /= sum;
  }
  return StochasticMatrix::validate(m, ns, std::move(e));
}

}  // namespace

std::vector<double> project_simplex(std::vector<double> v) {
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidDistribution("project_simplex needs finite entries");
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    double cand = (cumsum - 1.0) / double(j + 1);
    if (u[j] - cand > 0.0) theta = cand;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
  return v;
}

StochasticMatrix pad_rows(const StochasticMatrix& pi, int m) {
  if (m < pi.rows()) throw InvalidDistribution("pad_rows cannot shrink a garbling");
  std::vector<double> e(std::size_t(m) * pi.cols(), 0.0);
  for (int t = 0; t < pi.rows(); ++t)
    for (int s = 0; s < pi.cols(); ++s) e[std::size_t(t) * pi.cols() + s] = pi.at(t, s);
  return StochasticMatrix::validate(m, pi.cols(), std::move(e));
}

ExtractionResult si_ext(const JointDistribution& p, int m) {
  if (m < 1) throw InvalidDistribution("si_ext needs m >= 1");
  const int ns = p.ns();
  double count = std::pow(double(m), double(ns));
  if (count > 1e6)
    throw EnumerationTooLarge("si_ext would enumerate " + std::to_string(count) + " maps");

  SolveOptions opts;
  ExtractionResult best;
  best.value = -std::numeric_limits<double>::infinity();
  std::vector<int> map(ns, 0);
  while (true) {
    StochasticMatrix pi = StochasticMatrix::from_map(map, m);
    double si = si_of_pushforward(p, pi, opts);
    if (si > best.value) {
      best.value = si;
      best.argmax = pi;
      best.argmax_map = map;
    }
    int k = 0;
    while (k < ns && ++map[k] == m) map[k++] = 0;
    if (k == ns) break;
  }
  best.certified = true;
  return best;
}

ExtractionResult si_ext(const JointDistribution& p) { return si_ext(p, p.ns()); }

ExtractionResult si_club(const JointDistribution& p, int m, const ClubOptions& opts,
                         const std::vector<StochasticMatrix>& extra_starts) {
  if (m < 1) throw InvalidDistribution("si_club needs m >= 1");
  const int ns = p.ns();

  std::vector<StochasticMatrix> starts;
  starts.push_back(identity_padded_start(m, ns));
  for (const auto& e : extra_starts) {
    if (e.cols() != ns || e.rows() != m)
      throw LabelMismatch("si_club extra start has the wrong shape");
    starts.push_back(e);
  }
  for (int r = 0; r < opts.restarts; ++r) {
    std::mt19937_64 rng(opts.seed + std::uint64_t(r) * 0x9E3779B97F4A7C15ULL);
    starts.push_back(dirichlet_start(m, ns, rng));
  }

  ExtractionResult out;
  out.value = -std::numeric_limits<double>::infinity();
  out.restarts_used = int(starts.size());

  for (std::size_t start_idx = 0; start_idx < starts.size(); ++start_idx) {
    StochasticMatrix pi = starts[start_idx];
    SolveReport rep;
    JointDistribution restricted = p;  // overwritten below
    double cur = si_of_pushforward(p, pi, opts.solver, &rep, &restricted);
    double restart_best = cur;
    StochasticMatrix restart_arg = pi;
    out.trace.push_back({int(start_idx), 0, cur});

    std::vector<double> best_history{restart_best};
    for (int step = 1; step <= opts.max_steps; ++step) {
      std::vector<double> dir = ascent_direction(p, pi, restricted, rep);
      double dnorm = 0.0;
      for (double v : dir) dnorm = std::max(dnorm, std::abs(v));
      if (dnorm < 1e-14) break;

      // backtracking from eta0; diminishing fallback after 20 halvings
      double eta = opts.eta0;
      StochasticMatrix next = pi;
      double next_val = cur;
      SolveReport next_rep;
      JointDistribution next_restricted = restricted;
      bool accepted = false;
      for (int bt = 0; bt < 20; ++bt) {
        std::vector<double> raw(pi.entries());
        for (std::size_t i = 0; i < raw.size(); ++i) raw[i] += eta * dir[i];
        StochasticMatrix cand = project_columns(m, ns, raw);
        double val = si_of_pushforward(p, cand, opts.solver, &next_rep, &next_restricted);
        if (val >= cur - 1e-12) {
          next = cand;
          next_val = val;
          accepted = true;
          break;
        }
        eta *= 0.5;
      }
      if (!accepted) {
        eta = opts.eta0 / std::sqrt(double(step));
        std::vector<double> raw(pi.entries());
        for (std::size_t i = 0; i < raw.size(); ++i) raw[i] += eta * dir[i];
        next = project_columns(m, ns, raw);
        next_val = si_of_pushforward(p, next, opts.solver, &next_rep, &next_restricted);
      }

      pi = next;
      cur = next_val;
      rep = std::move(next_rep);
      restricted = std::move(next_restricted);
      if (cur > restart_best) {
        restart_best = cur;
        restart_arg = pi;
      }
      out.trace.push_back({int(start_idx), step, cur});

      best_history.push_back(restart_best);
      if (best_history.size() >= 6) {
        double prev = best_history[best_history.size() - 6];
        if (restart_best - prev < 1e-9 * std::max(1.0, std::abs(restart_best))) break;
      }
    }

    if (restart_best > out.value) {
      out.value = restart_best;
      out.argmax = restart_arg;
    }
  }

  // recompute at the winner so the reported value is reproducible by
  // pushforward + pid alone
  out.value = si_of_pushforward(p, out.argmax, opts.solver);
  out.certified = false;
  return out;
}

SandwichReport check_sandwich(const JointDistribution& p, int m0, const ClubOptions& opts) {
  if (m0 < p.ns()) throw InvalidDistribution("check_sandwich needs m0 >= |S|");
  SandwichReport rep;
  ExtractionResult ext = si_ext(p, p.ns());
  rep.ext_value = ext.value;

  StochasticMatrix carry = pad_rows(ext.argmax, m0);
  double prev = -std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (int m = m0; m <= m0 + 2; ++m) {
    ExtractionResult club = si_club(p, m, opts, {carry});
    rep.club_values.push_back({m, club.value});
    if (m > m0) monotone = monotone && club.value >= prev - 1e-5;
    prev = club.value;
    if (m < m0 + 2) carry = pad_rows(club.argmax, m + 1);
  }
  rep.ext_le_club = rep.ext_value <= rep.club_values.front().second + 1e-5;
  rep.monotone = monotone;
  rep.ok = rep.ext_le_club && rep.monotone;
  return rep;
}

}  // namespace pidopt
