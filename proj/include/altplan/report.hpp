// Report emitters: plan-report, comparison, trace and AIC CSVs (full
// precision) and a human-readable plan table (stresses to 2 d.p.).
#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "altplan/config.hpp"
#include "altplan/planner.hpp"
#include "altplan/text.hpp"

namespace altplan {

inline constexpr const char* kToolName = "altplan";
inline constexpr const char* kToolVersion = "0.1.0";

inline std::string provenance_comment(std::uint64_t seed) {
  return std::string(kToolName) + " " + kToolVersion + " seed=" + std::to_string(seed);
}

inline void write_plan_report_csv(std::ostream& out, const std::vector<PlanReport>& reports,
                                  std::uint64_t seed) {
  out << "# " << provenance_comment(seed) << '\n';
  out << "label,levels,stresses,allocations,duration,design_stress,min_rmse,mean_rmse,std_error,"
         "n_fit_failures,evaluations\n";
  for (const auto& r : reports) {
    out << r.label << ',' << r.plan.levels() << ',' << format_doubles(r.plan.stresses, ';') << ','
        << format_ints(r.plan.allocations, ';') << ',' << text::format_double(r.plan.duration)
        << ',' << text::format_double(r.plan.design_stress) << ','
        << text::format_double(r.min_rmse) << ',' << text::format_double(r.mean_rmse) << ','
        << text::format_double(r.std_error) << ',' << r.n_fit_failures << ',' << r.evaluations
        << '\n';
  }
}

inline void write_trace_csv(std::ostream& out, const std::vector<PlanReport>& reports,
                            std::uint64_t seed) {
  out << "# " << provenance_comment(seed) << '\n';
  out << "label,generation,best_rmse,population_mean_rmse,failed_evaluations\n";
  for (const auto& r : reports) {
    for (const auto& g : r.generation_trace) {
      out << r.label << ',' << g.generation << ',' << text::format_double(g.best_fitness) << ','
          << text::format_double(g.population_mean) << ',' << g.failed_evaluations << '\n';
    }
  }
}

inline void write_comparison_csv(std::ostream& out, const Comparison& cmp, std::uint64_t seed) {
  out << "# " << provenance_comment(seed) << '\n';
  out << "variant,stresses,allocations,mean_rmse,std_error,difference,pooled_se,equivalent,worse\n";
  for (const auto& r : cmp.rows) {
    out << r.id << ',' << format_doubles(r.plan.stresses, ';') << ','
        << format_ints(r.plan.allocations, ';') << ',' << text::format_double(r.mean_rmse) << ','
        << text::format_double(r.std_error) << ',' << text::format_double(r.difference) << ','
        << text::format_double(r.pooled_se) << ',' << (r.equivalent ? 1 : 0) << ','
        << (r.worse ? 1 : 0) << '\n';
  }
}

inline void write_aic_csv(std::ostream& out, const PreliminaryFit& pf, std::uint64_t seed) {
  out << "# " << provenance_comment(seed) << '\n';
  out << "model,n_params,beta,sigma,log_likelihood,aic,converged,selected\n";
  for (std::size_t i = 0; i < pf.table.size(); ++i) {
    const auto& row = pf.table[i];
    out << row.model.basis().name() << ',' << row.model.dimension() + 1 << ',';
    if (row.fit) {
      out << format_doubles(row.fit->params.beta, ';') << ','
          << text::format_double(row.fit->params.sigma) << ','
          << text::format_double(row.fit->log_likelihood_at_optimum) << ','
          << text::format_double(row.fit->aic) << ',' << (row.fit->converged ? 1 : 0);
    } else {
      out << ",,,,0";
    }
    out << ',' << (i == pf.selected ? 1 : 0) << '\n';
  }
}

/// Table laid out like a printed plan table: one block per report with
/// stresses (2 d.p.) over their unit counts.
inline void render_plan_table(std::ostream& out, const std::vector<PlanReport>& reports,
                              double merge_tolerance) {
  char buf[64];
  out << "N     stress levels (units)                                  "
         "min RMSE    mean RMSE   std. error\n";
  for (const auto& r : reports) {
    const TestPlan display = merge_close_stresses(r.plan, merge_tolerance);
    std::string levels, units;
    for (std::size_t j = 0; j < display.levels(); ++j) {
      std::snprintf(buf, sizeof buf, "%8.2f", display.stresses[j]);
      levels += buf;
      std::snprintf(buf, sizeof buf, "%8s", ("(" + std::to_string(display.allocations[j]) + ")").c_str());
      units += buf;
    }
    std::snprintf(buf, sizeof buf, "%-6s", r.label.c_str());
    out << buf;
    std::snprintf(buf, sizeof buf, "%-55s", levels.c_str());
    out << buf;
    std::snprintf(buf, sizeof buf, "%12.0f %12.0f %12.0f\n", r.min_rmse, r.mean_rmse, r.std_error);
    out << buf;
    std::snprintf(buf, sizeof buf, "%-6s%-55s\n", "", units.c_str());
    out << buf;
  }
}

}  // namespace altplan
