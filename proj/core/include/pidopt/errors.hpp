#pragma once

#include <stdexcept>
#include <string>

namespace pidopt {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input validation
struct NegativeMass : Error { using Error::Error; };
struct MassNotOne : Error { using Error::Error; };
struct DuplicateOutcome : Error { using Error::Error; };
struct LabelMismatch : Error { using Error::Error; };
struct InvalidDistribution : Error { using Error::Error; };

// Measure preconditions
struct AxisOverlap : Error { using Error::Error; };
struct ZeroCellOnSupportRequired : Error { using Error::Error; };

// Solver / downstream
struct DegenerateInstance : Error { using Error::Error; };
struct UncertifiedSolution : Error { using Error::Error; };
struct EnumerationTooLarge : Error { using Error::Error; };

// File parsing; line is 1-based, 0 when not line-oriented.
struct ParseError : Error {
  int line = 0;
  ParseError(const std::string& msg, int line_no = 0) : Error(msg), line(line_no) {}
};

}  // namespace pidopt
