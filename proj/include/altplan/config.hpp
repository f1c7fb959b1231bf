// Flat key-value configuration with [sections]:
//
//   # comment
//   [scenario]
//   basis = poly:2
//   beta = 13.4, -37.9, 17.7
//
// Later assignments (from later files or overrides) replace earlier ones.
// Also holds the conversions between config sections and StudyConfig /
// TestPlan.
#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "altplan/dataset_csv.hpp"
#include "altplan/planner.hpp"
#include "altplan/text.hpp"

namespace altplan {

class KeyValueConfig {
 public:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };

  void parse(std::istream& in, const std::string& source = "config") {
    std::string line;
    std::size_t lineno = 0;
    std::string current;
    while (std::getline(in, line)) {
      ++lineno;
      const auto body = text::trim(line);
      if (body.empty() || body.front() == '#' || body.front() == ';') continue;
      if (body.front() == '[') {
        if (body.back() != ']' || body.size() < 3) {
          throw DataFormatError(lineno, source + ": malformed section header");
        }
        current = std::string(text::trim(body.substr(1, body.size() - 2)));
        section(current);
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) {
        throw DataFormatError(lineno, source + ": expected 'key = value'");
      }
      if (current.empty()) throw DataFormatError(lineno, source + ": key outside any [section]");
      const auto key = text::trim(body.substr(0, eq));
      if (key.empty()) throw DataFormatError(lineno, source + ": empty key");
      set(current, std::string(key), std::string(text::trim(body.substr(eq + 1))));
    }
  }

  void parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataFormatError(0, "cannot open config file " + path);
    parse(in, path);
  }

  void set(const std::string& sec, const std::string& key, std::string value) {
    auto& entries = section(sec).entries;
    for (auto& [k, v] : entries) {
      if (k == key) {
        v = std::move(value);
        return;
      }
    }
    entries.emplace_back(key, std::move(value));
  }

  const std::string* find(const std::string& sec, const std::string& key) const {
    for (const auto& s : sections_) {
      if (s.name != sec) continue;
      for (const auto& [k, v] : s.entries) {
        if (k == key) return &v;
      }
    }
    return nullptr;
  }

  bool has(const std::string& sec, const std::string& key) const { return find(sec, key) != nullptr; }
  bool has_section(const std::string& sec) const {
    for (const auto& s : sections_) {
      if (s.name == sec) return true;
    }
    return false;
  }

  const std::string& require(const std::string& sec, const std::string& key) const {
    const auto* v = find(sec, key);
    if (!v) throw std::invalid_argument("missing config key [" + sec + "] " + key);
    return *v;
  }

  double get_double(const std::string& sec, const std::string& key) const {
    const auto v = text::parse_double(require(sec, key));
    if (!v) throw std::invalid_argument("config key [" + sec + "] " + key + " is not a number");
    return *v;
  }
  double get_double(const std::string& sec, const std::string& key, double fallback) const {
    return has(sec, key) ? get_double(sec, key) : fallback;
  }

  long long get_int(const std::string& sec, const std::string& key) const {
    const auto v = text::parse_int(require(sec, key));
    if (!v) throw std::invalid_argument("config key [" + sec + "] " + key + " is not an integer");
    return *v;
  }
  long long get_int(const std::string& sec, const std::string& key, long long fallback) const {
    return has(sec, key) ? get_int(sec, key) : fallback;
  }

  bool get_bool(const std::string& sec, const std::string& key, bool fallback) const {
    if (!has(sec, key)) return fallback;
    const auto& v = require(sec, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config key [" + sec + "] " + key + " is not a boolean");
  }

  std::vector<double> get_doubles(const std::string& sec, const std::string& key) const {
    std::vector<double> out;
    for (auto item : text::split(require(sec, key), ',')) {
      const auto v = text::parse_double(item);
      if (!v) throw std::invalid_argument("config key [" + sec + "] " + key + " has a bad number");
      out.push_back(*v);
    }
    return out;
  }

  std::vector<long long> get_ints(const std::string& sec, const std::string& key) const {
    std::vector<long long> out;
    for (auto item : text::split(require(sec, key), ',')) {
      const auto v = text::parse_int(item);
      if (!v) throw std::invalid_argument("config key [" + sec + "] " + key + " has a bad integer");
      out.push_back(*v);
    }
    return out;
  }

  const std::vector<Section>& sections() const { return sections_; }

  void write(std::ostream& out) const {
    bool first = true;
    for (const auto& s : sections_) {
      if (!first) out << '\n';
      first = false;
      out << '[' << s.name << "]\n";
      for (const auto& [k, v] : s.entries) out << k << " = " << v << '\n';
    }
  }

 private:
  Section& section(const std::string& name) {
    for (auto& s : sections_) {
      if (s.name == name) return s;
    }
    sections_.push_back({name, {}});
    return sections_.back();
  }

  std::vector<Section> sections_;
};

/// Parses "2..6" or "2,3,5" into a list of stress counts.
inline std::vector<std::size_t> parse_count_list(std::string_view spec) {
  std::vector<std::size_t> out;
  const auto range = spec.find("..");
  if (range != std::string_view::npos) {
    const auto lo = text::parse_int(spec.substr(0, range));
    const auto hi = text::parse_int(spec.substr(range + 2));
    if (!lo || !hi || *lo < 2 || *hi < *lo) {
      throw std::invalid_argument("bad stress-count range '" + std::string(spec) + "'");
    }
    for (auto n = *lo; n <= *hi; ++n) out.push_back(static_cast<std::size_t>(n));
    return out;
  }
  for (auto item : text::split(spec, ',')) {
    const auto v = text::parse_int(item);
    if (!v || *v < 2) throw std::invalid_argument("bad stress count '" + std::string(item) + "'");
    out.push_back(static_cast<std::size_t>(*v));
  }
  return out;
}

inline std::string format_doubles(const std::vector<double>& v, char sep = ',') {
  return text::join(v, sep, [](double x) { return text::format_double(x); });
}
inline std::string format_ints(const std::vector<int>& v, char sep = ',') {
  return text::join(v, sep, [](int x) { return std::to_string(x); });
}

// ---------------------------------------------------------------------------
// [scenario] <-> StudyConfig

inline LifeStressModel model_from_config(const KeyValueConfig& cfg) {
  const auto basis = StressBasis::parse(cfg.require("scenario", "basis"));
  const LifeStressModel wide(basis);
  StressInterval domain = wide.domain();
  domain.lower = cfg.get_double("scenario", "domain_min", domain.lower);
  domain.upper = cfg.get_double("scenario", "domain_max", domain.upper);
  return LifeStressModel(basis, domain);
}

/// Fills a StudyConfig from [scenario], [search] and [run]. The duration may
/// be a number, "inf", or "calibrate" (uses calibrate_stress and
/// calibrate_censoring); the resolved number is written back into `cfg`.
inline StudyConfig study_from_config(KeyValueConfig& cfg) {
  StudyConfig study;
  study.model = model_from_config(cfg);
  study.true_params.beta = cfg.get_doubles("scenario", "beta");
  study.true_params.sigma = cfg.get_double("scenario", "sigma");
  study.true_params.validate(study.model);
  study.design_stress = cfg.get_double("scenario", "design_stress");
  study.bounds = {cfg.get_double("scenario", "stress_min"), cfg.get_double("scenario", "stress_max")};
  study.total_units = static_cast<int>(cfg.get_int("scenario", "total_units"));

  const std::string duration = cfg.require("scenario", "duration");
  if (duration == "calibrate") {
    study.duration = calibrate_duration(study.model, study.true_params,
                                        cfg.get_double("scenario", "calibrate_stress"),
                                        cfg.get_double("scenario", "calibrate_censoring"));
    cfg.set("scenario", "duration", text::format_double(study.duration));
  } else {
    study.duration = cfg.get_double("scenario", "duration");
  }

  study.granularity = cfg.get_double("search", "granularity", 1e-5);
  study.de.generations = static_cast<std::size_t>(cfg.get_int("search", "generations", 50));
  study.de.population_size = static_cast<std::size_t>(cfg.get_int("search", "population", 0));
  study.de.differential_weight = cfg.get_double("search", "de_f", 0.8);
  study.de.crossover_rate = cfg.get_double("search", "de_cr", 0.9);
  study.search_n_sim = static_cast<std::size_t>(cfg.get_int("search", "search_n_sim", 200));
  study.report_n_sim = static_cast<std::size_t>(cfg.get_int("search", "report_n_sim", 1000));
  study.report_replicates = static_cast<std::size_t>(cfg.get_int("search", "report_replicates", 100));
  study.common_random_numbers = cfg.get_bool("search", "crn", false);
  study.master_seed = static_cast<std::uint64_t>(cfg.get_int("run", "seed", 1));
  study.validate();
  return study;
}

/// Writes every effective study parameter back into `cfg`.
inline void store_study(KeyValueConfig& cfg, const StudyConfig& s) {
  cfg.set("scenario", "basis", s.model.basis().name());
  cfg.set("scenario", "domain_min", text::format_double(s.model.domain().lower));
  cfg.set("scenario", "domain_max", text::format_double(s.model.domain().upper));
  cfg.set("scenario", "beta", format_doubles(s.true_params.beta, ','));
  cfg.set("scenario", "sigma", text::format_double(s.true_params.sigma));
  cfg.set("scenario", "design_stress", text::format_double(s.design_stress));
  cfg.set("scenario", "stress_min", text::format_double(s.bounds.lower));
  cfg.set("scenario", "stress_max", text::format_double(s.bounds.upper));
  cfg.set("scenario", "total_units", std::to_string(s.total_units));
  cfg.set("scenario", "duration", text::format_double(s.duration));
  cfg.set("search", "granularity", text::format_double(s.granularity));
  cfg.set("search", "generations", std::to_string(s.de.generations));
  cfg.set("search", "population", std::to_string(s.de.population_size));
  cfg.set("search", "de_f", text::format_double(s.de.differential_weight));
  cfg.set("search", "de_cr", text::format_double(s.de.crossover_rate));
  cfg.set("search", "search_n_sim", std::to_string(s.search_n_sim));
  cfg.set("search", "report_n_sim", std::to_string(s.report_n_sim));
  cfg.set("search", "report_replicates", std::to_string(s.report_replicates));
  cfg.set("search", "crn", s.common_random_numbers ? "true" : "false");
  cfg.set("run", "seed", std::to_string(s.master_seed));
}

// ---------------------------------------------------------------------------
// [plan] <-> TestPlan

inline TestPlan plan_from_config(const KeyValueConfig& cfg, const std::string& sec = "plan") {
  TestPlan plan;
  plan.stresses = cfg.get_doubles(sec, "stresses");
  for (auto a : cfg.get_ints(sec, "allocations")) plan.allocations.push_back(static_cast<int>(a));
  plan.duration = cfg.get_double(sec, "duration");
  plan.design_stress = cfg.get_double(sec, "design_stress");
  plan.validate();
  return plan;
}

inline void store_plan(KeyValueConfig& cfg, const TestPlan& plan, const std::string& sec = "plan") {
  cfg.set(sec, "stresses", format_doubles(plan.stresses, ','));
  cfg.set(sec, "allocations", format_ints(plan.allocations, ','));
  cfg.set(sec, "duration", text::format_double(plan.duration));
  cfg.set(sec, "design_stress", text::format_double(plan.design_stress));
}

}  // namespace altplan
