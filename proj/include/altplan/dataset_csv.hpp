// CensoredDataset <-> CSV with header `stress,time,status`
// (status 1 = failed, 0 = right-censored). Lines starting with '#' are
// comments.
#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "altplan/text.hpp"
#include "altplan/weibull_aft.hpp"

namespace altplan {

/// Malformed input file; line() is 1-based, 0 when not tied to a line.
class DataFormatError : public std::runtime_error {
 public:
  DataFormatError(std::size_t line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline CensoredDataset read_dataset_csv(std::istream& in) {
  CensoredDataset data;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = text::split(body, ',');
    if (!header_seen) {
      if (fields.size() != 3 || fields[0] != "stress" || fields[1] != "time" ||
          fields[2] != "status") {
        throw DataFormatError(lineno, "expected header 'stress,time,status'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) {
      throw DataFormatError(lineno, "expected 3 fields, found " + std::to_string(fields.size()));
    }
    const auto stress = text::parse_double(fields[0]);
    const auto time = text::parse_double(fields[1]);
    if (!stress || !std::isfinite(*stress)) throw DataFormatError(lineno, "bad stress value");
    if (!time || !std::isfinite(*time) || !(*time > 0.0)) {
      throw DataFormatError(lineno, "time must be a positive number");
    }
    if (fields[2] != "0" && fields[2] != "1") {
      throw DataFormatError(lineno, "status must be 0 (censored) or 1 (failed)");
    }
    data.observations.push_back({*stress, *time, fields[2] == "1"});
  }
  if (!header_seen) throw DataFormatError(0, "empty dataset: no header row");
  if (data.empty()) throw DataFormatError(0, "dataset has no records");
  return data;
}

inline CensoredDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError(0, "cannot open " + path);
  return read_dataset_csv(in);
}

inline void write_dataset_csv(std::ostream& out, const CensoredDataset& data,
                              const std::string& comment = {}) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "stress,time,status\n";
  for (const auto& o : data.observations) {
    out << text::format_double(o.stress) << ',' << text::format_double(o.time) << ','
        << (o.observed ? 1 : 0) << '\n';
  }
}

}  // namespace altplan
