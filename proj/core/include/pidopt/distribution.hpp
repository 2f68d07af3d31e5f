#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "pidopt/errors.hpp"

namespace pidopt {

enum class Axis : int { S = 0, Y = 1, Z = 2 };

// Subset of {S, Y, Z}.
class AxisSet {
 public:
  constexpr AxisSet() = default;
  constexpr AxisSet(std::initializer_list<Axis> axes) {
    for (Axis a : axes) bits_ |= bit(a);
  }
  static constexpr AxisSet all() { return AxisSet{Axis::S, Axis::Y, Axis::Z}; }

  constexpr bool contains(Axis a) const { return (bits_ & bit(a)) != 0;  }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int count() const {
    return int(bits_ & 1u) + int((bits_ >> 1) & 1u) + int((bits_ >> 2) & 1u);
  }
  constexpr bool intersects(AxisSet o) const { return (bits_ & o.bits_) != 0; }
  constexpr AxisSet operator|(AxisSet o) const {
    AxisSet r;
    r.bits_ = bits_ | o.bits_;
    return r;
  }
  constexpr bool operator==(const AxisSet&) const = default;

 private:
  static constexpr unsigned bit(Axis a) { return 1u << static_cast<int>(a); }
  unsigned bits_ = 0;
};

struct Triple {
  int s = 0, y = 0, z = 0;
  constexpr bool operator==(const Triple&) const = default;
};

struct Labels {
  std::vector<std::string> s, y, z;
};

// Dense table over a nonempty subset of the axes, row-major in S<Y<Z order
// of the kept axes. Produced by JointDistribution::marginal.
struct MarginalTable {
  AxisSet axes;
  std::vector<int> dims;
  std::vector<double> values;
};

// Validated pmf over S x Y x Z. Immutable after construction.
class JointDistribution {
 public:
  struct Entry {
    std::string s, y, z;
    double p = 0.0;
  };

  // Validates raw entries keyed by label triples. Labels inferred from the
  // entries in first-appearance order, or given explicitly (entries must then
  // reference known labels only). Entries are normalized by the total mass.
  static JointDistribution validate(std::span<const Entry> entries);
  static JointDistribution validate(std::span<const Entry> entries, Labels labels);

  // Dense pmf in row-major (s, y, z) order; validated like `validate`.
  static JointDistribution from_pmf(Labels labels, std::vector<double> pmf);

  // Canonical test gates on bits. XOR: s = y^z with (y,z) uniform; AND:
  // s = y&z; RDN: s = y = z uniform; UNQ: s = y uniform, z an independent bit.
  static JointDistribution xor_gate();
  static JointDistribution and_gate();
  static JointDistribution rdn_gate();
  static JointDistribution unq_gate();

  // Convex combination wa*a + wb*b of same-shape distributions.
  static JointDistribution mix(const JointDistribution& a, double wa,
                               const JointDistribution& b, double wb);

  int ns() const { return int(labels_.s.size()); }
  int ny() const { return int(labels_.y.size()); }
  int nz() const { return int(labels_.z.size()); }
  std::size_t cell_count() const { return pmf_.size(); }
  int axis_size(Axis a) const;

  int index(int s, int y, int z) const { return (s * ny() + y) * nz() + z; }
  double at(int s, int y, int z) const { return pmf_[index(s, y, z)]; }
  const std::vector<double>& pmf() const { return pmf_; }
  const Labels& labels() const { return labels_; }
  const std::vector<std::string>& labels(Axis a) const;

  const std::vector<Triple>& support() const { return support_; }
  bool full_support() const { return support_.size() == pmf_.size(); }

  // Sum over the dropped axes; kept axes per `axes` (nonempty).
  MarginalTable marginal(AxisSet axes) const;

  // Dense marginal helpers used by the numeric kernels.
  std::vector<double> marginal_sy() const;  // ns*ny, index s*ny+y
  std::vector<double> marginal_sz() const;  // ns*nz, index s*nz+z
  std::vector<double> marginal_yz() const;  // ny*nz, index y*nz+z
  std::vector<double> marginal_s() const;
  std::vector<double> marginal_y() const;
  std::vector<double> marginal_z() const;

  // Drops axis labels with zero marginal mass; pmf values are preserved.
  JointDistribution restrict_support() const;

  // Same labels, new values (re-validated, renormalized).
  JointDistribution with_pmf(std::vector<double> new_pmf) const;

 private:
  JointDistribution() = default;
  void finalize();  // normalize, recompute support, check invariants

  Labels labels_;
  std::vector<double> pmf_;
  std::vector<Triple> support_;
};

// Column-stochastic garbling matrix: rows indexed 0..m-1, columns indexed by
// the source labels; every column sums to 1.
class StochasticMatrix {
 public:
  // Entries row-major, index t*cols + s.
  static StochasticMatrix validate(int rows, int cols, std::vector<double> entries);
  static StochasticMatrix identity(int n);
  // Deterministic garbling: column s carries a 1 in row map[s].
  static StochasticMatrix from_map(std::span<const int> map, int rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double at(int t, int s) const { return entries_[t * cols_ + s]; }
  const std::vector<double>& entries() const { return entries_; }

 private:
  StochasticMatrix() = default;
  int rows_ = 0, cols_ = 0;
  std::vector<double> entries_;
};

// (Pi(p))_{t,y,z} = sum_s Pi_{t,s} p_{s,y,z}. Rows with zero mass keep their
// label but drop out of the support.
JointDistribution pushforward(const StochasticMatrix& pi, const JointDistribution& p);

}  // namespace pidopt
