#include "pidopt/measures.hpp"

#include <cmath>

namespace pidopt {

const char* selector_name(MeasureSelector sel) {
  switch (sel) {
    case MeasureSelector::CI: return "CI";
    case MeasureSelector::SI: return "SI";
    case MeasureSelector::UIY: return "UIy";
    default: return "UIz";
  }
}

double entropy(std::span<const double> dist) {
  double sum = 0.0, h = 0.0;
  for (double x : dist) {
    if (x < -1e-15) throw InvalidDistribution("entropy of a table with negative entries");
    if (x > 0.0) h -= x * std::log(x);
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InvalidDistribution("entropy of a table with mass " + std::to_string(sum));
  return h < 0.0 ? 0.0 : h;
}

double entropy(const MarginalTable& table) { return entropy(std::span(table.values)); }

namespace {

double joint_entropy(const JointDistribution& p, AxisSet axes) {
  if (axes == AxisSet::all()) return entropy(std::span(p.pmf()));
  return entropy(p.marginal(axes));
}

void require_disjoint(AxisSet a, AxisSet b, const char* what) {
  if (a.intersects(b)) throw AxisOverlap(std::string(what) + ": axis sets overlap");
}

}  // namespace

double conditional_entropy(const JointDistribution& p, AxisSet target, AxisSet given) {
  if (target.empty()) throw InvalidDistribution("conditional_entropy: empty target");
  require_disjoint(target, given, "conditional_entropy");
  if (given.empty()) return joint_entropy(p, target);
  return joint_entropy(p, target | given) - joint_entropy(p, given);
}

double mutual_information(const JointDistribution& p, AxisSet a, AxisSet b) {
  if (a.empty() || b.empty()) throw InvalidDistribution("mutual_information: empty axis set");
  require_disjoint(a, b, "mutual_information");
  return joint_entropy(p, a) + joint_entropy(p, b) - joint_entropy(p, a | b);
}

double conditional_mutual_information(const JointDistribution& p, AxisSet a, AxisSet b,
                                      AxisSet given) {
  if (a.empty() || b.empty())
    throw InvalidDistribution("conditional_mutual_information: empty axis set");
  require_disjoint(a, b, "conditional_mutual_information");
  require_disjoint(a, given, "conditional_mutual_information");
  require_disjoint(b, given, "conditional_mutual_information");
  if (given.empty()) return mutual_information(p, a, b);
  return joint_entropy(p, a | given) + joint_entropy(p, b | given) - joint_entropy(p, given) -
         joint_entropy(p, a | b | given);
}

double co_information(const JointDistribution& p) {
  return mutual_information(p, {Axis::S}, {Axis::Y}) -
         conditional_mutual_information(p, {Axis::S}, {Axis::Y}, {Axis::Z});
}

double g_value(const JointDistribution& p, MeasureSelector sel) {
  switch (sel) {
    case MeasureSelector::CI:
      return conditional_entropy(p, {Axis::S}, {Axis::Y, Axis::Z});
    case MeasureSelector::SI:
      return mutual_information(p, {Axis::S}, {Axis::Y}) -
             conditional_entropy(p, {Axis::S}, {Axis::Z});
    case MeasureSelector::UIY:
      return conditional_entropy(p, {Axis::S}, {Axis::Z});
    default:
      return conditional_entropy(p, {Axis::S}, {Axis::Y});
  }
}

std::vector<double> g_gradient(const JointDistribution& p, MeasureSelector sel) {
  if (!p.full_support())
    throw ZeroCellOnSupportRequired("g_gradient needs full support; call restrict_support first");
  const int ns = p.ns(), ny = p.ny(), nz = p.nz();
  const auto msy = p.marginal_sy();
  const auto msz = p.marginal_sz();
  const auto myz = p.marginal_yz();
  const auto ms = p.marginal_s();
  const auto my = p.marginal_y();
  const auto mz = p.marginal_z();
  std::vector<double> g(p.cell_count());
  for (int s = 0; s < ns; ++s)
    for (int y = 0; y < ny; ++y)
      for (int z = 0; z < nz; ++z) {
        double v = 0.0;
        switch (sel) {
          case MeasureSelector::CI:
            v = std::log(myz[y * nz + z] / p.at(s, y, z));
            break;
          case MeasureSelector::SI:
            v = -1.0 + std::log(msy[s * ny + y] * msz[s * nz + z] /
                                (ms[s] * my[y] * mz[z]));
            break;
          case MeasureSelector::UIY:
            v = std::log(mz[z] / msz[s * nz + z]);
            break;
          default:
            v = std::log(my[y] / msy[s * ny + y]);
            break;
        }
        g[p.index(s, y, z)] = v;
      }
  return g;
}

}  // namespace pidopt
