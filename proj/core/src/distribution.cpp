#include "pidopt/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

namespace pidopt {

namespace {

constexpr double kNegativeTol = 1e-15;   // entries below this are an error
constexpr double kMassTolInput = 1e-9;   // |sum - 1| allowed on input
constexpr double kMassTolInternal = 1e-12;

int find_label(const std::vector<std::string>& labels, const std::string& v) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == v) return int(i);
  return -1;
}

int find_or_add(std::vector<std::string>& labels, const std::string& v) {
  int i = find_label(labels, v);
  if (i >= 0) return i;
  labels.push_back(v);
  return int(labels.size()) - 1;
}

}  // namespace

int JointDistribution::axis_size(Axis a) const {
  switch (a) {
    case Axis::S: return ns();
    case Axis::Y: return ny();
    default: return nz();
  }
}

const std::vector<std::string>& JointDistribution::labels(Axis a) const {
  switch (a) {
    case Axis::S: return labels_.s;
    case Axis::Y: return labels_.y;
    default: return labels_.z;
  }
}

void JointDistribution::finalize() {
  if (labels_.s.empty() || labels_.y.empty() || labels_.z.empty())
    throw InvalidDistribution("every axis needs at least one label");
  double sum = 0.0;
  for (double& v : pmf_) {
    if (v < -kNegativeTol) throw NegativeMass("negative probability entry " + std::to_string(v));
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  if (std::abs(sum - 1.0) > kMassTolInput)
    throw MassNotOne("total mass " + std::to_string(sum) + " is not 1");
  if (std::abs(sum - 1.0) > kMassTolInternal)
    for (double& v : pmf_) v /= sum;
  support_.clear();
  for (int s = 0; s < ns(); ++s)
    for (int y = 0; y < ny(); ++y)
      for (int z = 0; z < nz(); ++z)
        if (at(s, y, z) > 0.0) support_.push_back({s, y, z});
}

JointDistribution JointDistribution::validate(std::span<const Entry> entries) {
  Labels labels;
  for (const Entry& e : entries) {
    find_or_add(labels.s, e.s);
    find_or_add(labels.y, e.y);
    find_or_add(labels.z, e.z);
  }
  return validate(entries, std::move(labels));
}

JointDistribution JointDistribution::validate(std::span<const Entry> entries, Labels labels) {
  JointDistribution d;
  d.labels_ = std::move(labels);
  d.pmf_.assign(std::size_t(d.ns()) * d.ny() * d.nz(), 0.0);
  std::vector<bool> seen(d.pmf_.size(), false);
  for (const Entry& e : entries) {
    int s = find_label(d.labels_.s, e.s);
    int y = find_label(d.labels_.y, e.y);
    int z = find_label(d.labels_.z, e.z);
    if (s < 0 || y < 0 || z < 0)
      throw LabelMismatch("entry (" + e.s + "," + e.y + "," + e.z + ") uses an unknown label");
    int i = d.index(s, y, z);
    if (seen[i])
      throw DuplicateOutcome("duplicate outcome (" + e.s + "," + e.y + "," + e.z + ")");
    seen[i] = true;
    d.pmf_[i] = e.p;
  }
  d.finalize();
  return d;
}

JointDistribution JointDistribution::from_pmf(Labels labels, std::vector<double> pmf) {
  JointDistribution d;
  d.labels_ = std::move(labels);
  std::size_t want = std::size_t(d.labels_.s.size()) * d.labels_.y.size() * d.labels_.z.size();
  if (pmf.size() != want)
    throw InvalidDistribution("pmf has " + std::to_string(pmf.size()) + " cells, expected " +
                              std::to_string(want));
  d.pmf_ = std::move(pmf);
  d.finalize();
  return d;
}

JointDistribution JointDistribution::with_pmf(std::vector<double> new_pmf) const {
  return from_pmf(labels_, std::move(new_pmf));
}

namespace {

JointDistribution gate_from(const std::vector<std::array<int, 3>>& atoms) {
  Labels bits{{"0", "1"}, {"0", "1"}, {"0", "1"}};
  std::vector<double> pmf(8, 0.0);
  for (const auto& a : atoms) pmf[(a[0] * 2 + a[1]) * 2 + a[2]] = 1.0 / double(atoms.size());
  return JointDistribution::from_pmf(bits, std::move(pmf));
}

}  // namespace

JointDistribution JointDistribution::xor_gate() {
  return gate_from({{0, 0, 0}, {1, 0, 1}, {1, 1, 0}, {0, 1, 1}});
}

JointDistribution JointDistribution::and_gate() {
  return gate_from({{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {1, 1, 1}});
}

JointDistribution JointDistribution::rdn_gate() {
  return gate_from({{0, 0, 0}, {1, 1, 1}});
}

JointDistribution JointDistribution::unq_gate() {
  return gate_from({{0, 0, 0}, {0, 0, 1}, {1, 1, 0}, {1, 1, 1}});
}

JointDistribution JointDistribution::mix(const JointDistribution& a, double wa,
                                         const JointDistribution& b, double wb) {
  if (a.ns() != b.ns() || a.ny() != b.ny() || a.nz() != b.nz())
    throw LabelMismatch("mix needs same-shape distributions");
  std::vector<double> pmf(a.pmf());
  for (std::size_t i = 0; i < pmf.size(); ++i) pmf[i] = wa * pmf[i] + wb * b.pmf()[i];
  return from_pmf(a.labels_, std::move(pmf));
}

MarginalTable JointDistribution::marginal(AxisSet axes) const {
  if (axes.empty()) throw InvalidDistribution("marginal needs a nonempty axis set");
  MarginalTable t;
  t.axes = axes;
  std::size_t total = 1;
  for (Axis a : {Axis::S, Axis::Y, Axis::Z})
    if (axes.contains(a)) {
      t.dims.push_back(axis_size(a));
      total *= std::size_t(axis_size(a));
    }
  t.values.assign(total, 0.0);
  for (int s = 0; s < ns(); ++s)
    for (int y = 0; y < ny(); ++y)
      for (int z = 0; z < nz(); ++z) {
        std::size_t idx = 0;
        if (axes.contains(Axis::S)) idx = std::size_t(s);
        if (axes.contains(Axis::Y)) idx = idx * std::size_t(ny()) + std::size_t(y);
        if (axes.contains(Axis::Z)) idx = idx * std::size_t(nz()) + std::size_t(z);
        t.values[idx] += at(s, y, z);
      }
  return t;
}

std::vector<double> JointDistribution::marginal_sy() const {
  std::vector<double> m(std::size_t(ns()) * ny(), 0.0);
  for (int s = 0; s < ns(); ++s)
    for (int y = 0; y < ny(); ++y)
      for (int z = 0; z < nz(); ++z) m[s * ny() + y] += at(s, y, z);
  return m;
}

std::vector<double> JointDistribution::marginal_sz() const {
  std::vector<double> m(std::size_t(ns()) * nz(), 0.0);
  for (int s = 0; s < ns(); ++s)
    for (int y = 0; y < ny(); ++y)
      for (int z = 0; z < nz(); ++z) m[s * nz() + z] += at(s, y, z);
  return m;
}

std::vector<double> JointDistribution::marginal_yz() const {
  std::vector<double> m(std::size_t(ny()) * nz(), 0.0);
  for (int s = 0; s < ns(); ++s)
    for (int y = 0; y < ny(); ++y)
      for (int z = 0; z < nz(); ++z) m[y * nz() + z] += at(s, y, z);
  return m;
}

std::vector<double> JointDistribution::marginal_s() const {
  std::vector<double> m(ns(), 0.0);
  for (const Triple& t : support_) m[t.s] += at(t.s, t.y, t.z);
  return m;
}

std::vector<double> JointDistribution::marginal_y() const {
  std::vector<double> m(ny(), 0.0);
  for (const Triple& t : support_) m[t.y] += at(t.s, t.y, t.z);
  return m;
}

std::vector<double> JointDistribution::marginal_z() const {
  std::vector<double> m(nz(), 0.0);
  for (const Triple& t : support_) m[t.z] += at(t.s, t.y, t.z);
  return m;
}

JointDistribution JointDistribution::restrict_support() const {
  auto ms = marginal_s();
  auto my = marginal_y();
  auto mz = marginal_z();
  auto keep = [](const std::vector<double>& m) {
    std::vector<int> kept;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i] > 0.0) kept.push_back(int(i));
    return kept;
  };
  std::vector<int> ks = keep(ms), ky = keep(my), kz = keep(mz);
  if (int(ks.size()) == ns() && int(ky.size()) == ny() && int(kz.size()) == nz()) return *this;

  JointDistribution d;
  for (int s : ks) d.labels_.s.push_back(labels_.s[s]);
  for (int y : ky) d.labels_.y.push_back(labels_.y[y]);
  for (int z : kz) d.labels_.z.push_back(labels_.z[z]);
  d.pmf_.reserve(ks.size() * ky.size() * kz.size());
  for (int s : ks)
    for (int y : ky)
      for (int z : kz) d.pmf_.push_back(at(s, y, z));
  d.finalize();
  return d;
}

StochasticMatrix StochasticMatrix::validate(int rows, int cols, std::vector<double> entries) {
  if (rows < 1 || cols < 1) throw InvalidDistribution("stochastic matrix needs positive dimensions");
  if (entries.size() != std::size_t(rows) * std::size_t(cols))
    throw InvalidDistribution("stochastic matrix entry count mismatch");
  StochasticMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  for (double& v : entries) {
    if (v < -kNegativeTol) throw NegativeMass("negative stochastic matrix entry");
    if (v < 0.0) v = 0.0;
  }
  for (int s = 0; s < cols; ++s) {
    double col = 0.0;
    for (int t = 0; t < rows; ++t) col += entries[std::size_t(t) * cols + s];
    if (std::abs(col - 1.0) > kMassTolInput)
      throw MassNotOne("column " + std::to_string(s) + " sums to " + std::to_string(col));
    if (std::abs(col - 1.0) > kMassTolInternal)
      for (int t = 0; t < rows; ++t) entries[std::size_t(t) * cols + s] /= col;
  }
  m.entries_ = std::move(entries);
  return m;
}

StochasticMatrix StochasticMatrix::identity(int n) {
  std::vector<double> e(std::size_t(n) * n, 0.0);
  for (int i = 0; i < n; ++i) e[std::size_t(i) * n + i] = 1.0;
  return validate(n, n, std::move(e));
}

StochasticMatrix StochasticMatrix::from_map(std::span<const int> map, int rows) {
  std::vector<double> e(std::size_t(rows) * map.size(), 0.0);
  for (std::size_t s = 0; s < map.size(); ++s) {
    if (map[s] < 0 || map[s] >= rows) throw InvalidDistribution("map target out of range");
    e[std::size_t(map[s]) * map.size() + s] = 1.0;
  }
  return validate(rows, int(map.size()), std::move(e));
}

JointDistribution pushforward(const StochasticMatrix& pi, const JointDistribution& p) {
  if (pi.cols() != p.ns())
    throw LabelMismatch("garbling has " + std::to_string(pi.cols()) + " columns, source has " +
                        std::to_string(p.ns()) + " labels");
  Labels labels;
  labels.s.reserve(pi.rows());
  for (int t = 0; t < pi.rows(); ++t) labels.s.push_back(std::to_string(t));
  labels.y = p.labels(Axis::Y);
  labels.z = p.labels(Axis::Z);
  std::vector<double> pmf(std::size_t(pi.rows()) * p.ny() * p.nz(), 0.0);
  for (int t = 0; t < pi.rows(); ++t)
    for (int s = 0; s < p.ns(); ++s) {
      double w = pi.at(t, s);
      if (w == 0.0) continue;
      for (int y = 0; y < p.ny(); ++y)
        for (int z = 0; z < p.nz(); ++z)
          pmf[(std::size_t(t) * p.ny() + y) * p.nz() + z] += w * p.at(s, y, z);
    }
  return JointDistribution::from_pmf(std::move(labels), std::move(pmf));
}

}  // namespace pidopt
