#pragma once

#include <span>
#include <vector>

#include "pidopt/distribution.hpp"

namespace pidopt {

// The four decomposition measures. Everything below works in nats.
enum class MeasureSelector { CI, SI, UIY, UIZ };

inline constexpr MeasureSelector kAllSelectors[] = {MeasureSelector::CI, MeasureSelector::SI,
                                                    MeasureSelector::UIY, MeasureSelector::UIZ};

const char* selector_name(MeasureSelector sel);

// Shannon entropy -sum x ln x with 0 ln 0 = 0. The table must be nonnegative
// and sum to 1 within 1e-9.
double entropy(std::span<const double> dist);
double entropy(const MarginalTable& table);

// H(target | given) = H(target,given) - H(given). `given` may be empty.
double conditional_entropy(const JointDistribution& p, AxisSet target, AxisSet given);

double mutual_information(const JointDistribution& p, AxisSet a, AxisSet b);
double conditional_mutual_information(const JointDistribution& p, AxisSet a, AxisSet b,
                                      AxisSet given);

// CoI(S;Y;Z) = MI(S;Y) - MI(S;Y|Z); may be negative.
double co_information(const JointDistribution& p);

// The p-only part of each measure's split into (value at p) = +-M(p) +- g:
//   CI : H(S|Y,Z)        SI : MI(S;Y) - H(S|Z)
//   UIY: H(S|Z)          UIZ: H(S|Y)
double g_value(const JointDistribution& p, MeasureSelector sel);

// Ambient-coordinate gradient of g_value over the S x Y x Z cells, meaningful
// up to a multiple of the all-ones vector. Requires full support.
std::vector<double> g_gradient(const JointDistribution& p, MeasureSelector sel);

}  // namespace pidopt
