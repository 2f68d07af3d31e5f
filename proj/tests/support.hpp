#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "pidopt/distribution.hpp"

namespace testsup {

using pidopt::JointDistribution;
using pidopt::Labels;

inline Labels make_labels(int ns, int ny, int nz) {
  Labels l;
  for (int i = 0; i < ns; ++i) l.s.push_back(std::to_string(i));
  for (int i = 0; i < ny; ++i) l.y.push_back(std::to_string(i));
  for (int i = 0; i < nz; ++i) l.z.push_back(std::to_string(i));
  return l;
}

// Dirichlet(1) pmf blended with the uniform one so every cell stays
// comfortably interior; full support by construction.
inline JointDistribution random_full_support(std::mt19937_64& rng, int ns, int ny, int nz,
                                             double uniform_blend = 0.02) {
  std::exponential_distribution<double> expo(1.0);
  std::size_t n = std::size_t(ns) * ny * nz;
  std::vector<double> pmf(n);
  double sum = 0.0;
  for (double& v : pmf) {
    v = expo(rng);
    sum += v;
  }
  for (double& v : pmf) v = (1.0 - uniform_blend) * v / sum + uniform_blend / double(n);
  return JointDistribution::from_pmf(make_labels(ns, ny, nz), std::move(pmf));
}

// Gate pushed to full support: mass 1-delta on the gate, delta spread
// uniformly over the off-support cells.
inline JointDistribution perturb_full_support(const JointDistribution& p, double delta) {
  std::size_t off = p.cell_count() - p.support().size();
  std::vector<double> pmf(p.pmf());
  for (double& v : pmf)
    v = v > 0.0 ? v * (1.0 - delta) : delta / double(off);
  return p.with_pmf(std::move(pmf));
}

// Zero-sum direction with unit sup-norm (support-preserving for
// full-support p).
inline std::vector<double> random_zero_sum_direction(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> d(n);
  double mean = 0.0;
  for (double& v : d) {
    v = gauss(rng);
    mean += v;
  }
  mean /= double(n);
  double norm = 0.0;
  for (double& v : d) {
    v -= mean;
    norm = std::max(norm, std::abs(v));
  }
  for (double& v : d) v /= norm;
  return d;
}

// Central finite difference of a scalar functional along direction d.
template <typename F>
double central_difference(const JointDistribution& p, const std::vector<double>& d, double eps,
                          F&& eval) {
  std::vector<double> plus(p.pmf()), minus(p.pmf());
  for (std::size_t i = 0; i < plus.size(); ++i) {
    plus[i] += eps * d[i];
    minus[i] -= eps * d[i];
  }
  return (eval(p.with_pmf(std::move(plus))) - eval(p.with_pmf(std::move(minus)))) / (2.0 * eps);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace testsup
