#pragma once

#include <string>

#include "pidopt/distribution.hpp"

namespace pidopt {

// Two input formats share one loader:
//  - JSON: {"labels": {"s": [...], "y": [...], "z": [...]},
//           "pmf": [{"s": "0", "y": "0", "z": "0", "p": 0.25}, ...]}
//  - TSV:  s<TAB>y<TAB>z<TAB>p per line, '#' comments, blank lines ignored.
// Unlisted triples carry zero mass. Structural problems raise ParseError
// (with a 1-based line number for TSV); content problems raise the
// validation errors of JointDistribution::validate.
JointDistribution parse_tsv(const std::string& text);
JointDistribution parse_json(const std::string& text);
JointDistribution load_distribution(const std::string& path);

std::string read_file(const std::string& path);  // ParseError when unreadable

// FNV-1a 64-bit hex digest, used to stamp CLI reports.
std::string input_hash_hex(const std::string& bytes);

}  // namespace pidopt
