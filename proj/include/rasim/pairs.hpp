#ifndef RASIM_PAIRS_HPP
#define RASIM_PAIRS_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rasim/errors.hpp"
#include "rasim/text.hpp"

namespace rasim {

/// A labeled phrase pair; score in [0, 1].
struct PhrasePair {
  std::string a;
  std::string b;
  double score = 0;
};

namespace detail {

// Minimal CSV field splitter: commas separate fields, double quotes group
// and "" escapes a quote.
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back().push_back(c);
    }
  }
  return fields;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace detail

/// Reads `phrase1,phrase2,score` with a header row.
inline std::vector<PhrasePair> read_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pair file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("pair file is empty: " + path.string());
  std::vector<PhrasePair> pairs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto where = path.filename().string() + " line " + std::to_string(line_no) + ": ";
    auto f = detail::split_csv(line);
    if (f.size() != 3) throw DataError(where + "expected 3 fields");
    PhrasePair p{std::string(trim(f[0])), std::string(trim(f[1])), 0};
    try {
      std::size_t used = 0;
      auto t = std::string(trim(f[2]));
      p.score = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw DataError(where + "bad score");
    }
    if (!(p.score >= 0.0 && p.score <= 1.0)) throw DataError(where + "score outside [0,1]");
    if (p.a.empty() || p.b.empty()) throw DataError(where + "empty phrase");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline void write_pairs(const std::vector<PhrasePair>& pairs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write pair file: " + path.string());
  out << "phrase1,phrase2,score\n";
  for (const auto& p : pairs)
    out << detail::csv_field(p.a) << ',' << detail::csv_field(p.b) << ',' << p.score << '\n';
}

}  // namespace rasim

#endif  // RASIM_PAIRS_HPP
