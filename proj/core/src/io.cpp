#include "pidopt/io.hpp"

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pidopt {

JointDistribution parse_tsv(const std::string& text) {
  std::vector<JointDistribution::Entry> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    bool blank = true;
    for (char c : line) blank = blank && std::isspace(static_cast<unsigned char>(c));
    if (blank) continue;

    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      std::size_t tab = line.find('\t', pos);
      fields.push_back(line.substr(pos, tab == std::string::npos ? tab : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (fields.size() != 4)
      throw ParseError("line " + std::to_string(line_no) + ": expected 4 tab-separated fields",
                       line_no);
    auto trim = [](std::string v) {
      std::size_t a = v.find_first_not_of(" \r\n");
      std::size_t b = v.find_last_not_of(" \r\n");
      return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
    };
    for (auto& f : fields) f = trim(f);
    if (fields[0].empty() || fields[1].empty() || fields[2].empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty label", line_no);
    try {
      std::size_t used = 0;
      double p = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing garbage");
      entries.push_back({fields[0], fields[1], fields[2], p});
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) + ": bad probability '" + fields[3] + "'",
                       line_no);
    }
  }
  if (entries.empty()) throw ParseError("no pmf entries found");
  return JointDistribution::validate(entries);
}

namespace {

std::string label_of(const nlohmann::json& v, const char* where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(std::string(where) + ": labels must be strings or integers");
}

}  // namespace

JointDistribution parse_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("labels") || !j.contains("pmf"))
    throw ParseError("expected an object with 'labels' and 'pmf'");
  const auto& jl = j["labels"];
  if (!jl.is_object() || !jl.contains("s") || !jl.contains("y") || !jl.contains("z"))
    throw ParseError("'labels' needs arrays 's', 'y' and 'z'");

  Labels labels;
  for (auto [key, out] : {std::pair{"s", &labels.s}, {"y", &labels.y}, {"z", &labels.z}}) {
    if (!jl[key].is_array()) throw ParseError(std::string("'labels.") + key + "' must be an array");
    for (const auto& v : jl[key]) out->push_back(label_of(v, "labels"));
  }
  if (!j["pmf"].is_array()) throw ParseError("'pmf' must be an array");
  std::vector<JointDistribution::Entry> entries;
  for (const auto& e : j["pmf"]) {
    if (!e.is_object() || !e.contains("s") || !e.contains("y") || !e.contains("z") ||
        !e.contains("p"))
      throw ParseError("each pmf entry needs 's', 'y', 'z' and 'p'");
    if (!e["p"].is_number()) throw ParseError("pmf entry 'p' must be a number");
    entries.push_back({label_of(e["s"], "pmf"), label_of(e["y"], "pmf"), label_of(e["z"], "pmf"),
                       e["p"].get<double>()});
  }
  return JointDistribution::validate(entries, std::move(labels));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

JointDistribution load_distribution(const std::string& path) {
  std::string text = read_file(path);
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '{' ? parse_json(text) : parse_tsv(text);
  }
  throw ParseError("'" + path + "' is empty");
}

std::string input_hash_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pidopt
