#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "opfbound/opfmodels.hpp"

namespace opfbound::report {

// One solve outcome, shaped like a row of a gap/time comparison table.
struct RunReport {
  std::string case_name;
  std::string model;  // lp0 | lps
  models::ApproxConfig cfg;
  std::string status;
  double objective = 0.0;
  std::optional<double> gap_percent;  // present only when an AC fixture matched
  int rows = 0;
  int cols = 0;
  int iterations = 0;
  double build_seconds = 0.0;
  double solve_seconds = 0.0;
  std::string error;  // nonempty when the case failed before reporting
};

namespace detail {
inline std::string num(double v, const char* fmt = "%.10g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}
}  // namespace detail

inline nlohmann::ordered_json to_json(const RunReport& r, bool timings) {
  nlohmann::ordered_json j;
  j["case"] = r.case_name;
  j["model"] = r.model;
  j["config"] = {{"k", r.cfg.k},
                 {"l", r.cfg.l},
                 {"s", r.cfg.s},
                 {"feasibility_tol", r.cfg.feasibility_tol},
                 {"optimality_tol", r.cfg.optimality_tol}};
  j["status"] = r.status;
  j["objective"] = r.objective;
  if (r.gap_percent)
    j["gap_percent"] = *r.gap_percent;
  else
    j["gap_percent"] = nullptr;
  j["rows"] = r.rows;
  j["cols"] = r.cols;
  j["iterations"] = r.iterations;
  if (!r.error.empty()) j["error"] = r.error;
  if (timings) j["timings"] = {{"build_s", r.build_seconds}, {"solve_s", r.solve_seconds}};
  return j;
}

// Column order mirrors gap-then-time comparison tables.
inline std::string csv_header(bool timings) {
  std::string h = "case,model,status,objective,gap_percent,rows,cols,iterations";
  if (timings) h += ",build_s,solve_s";
  return h;
}

inline std::string to_csv_row(const RunReport& r, bool timings) {
  std::string line = r.case_name + "," + r.model + "," +
                     (r.error.empty() ? r.status : "error:" + r.error) + "," +
                     detail::num(r.objective) + ",";
  if (r.gap_percent) line += detail::num(*r.gap_percent, "%.4f");
  line += "," + std::to_string(r.rows) + "," + std::to_string(r.cols) + "," +
          std::to_string(r.iterations);
  if (timings)
    line += "," + detail::num(r.build_seconds, "%.3f") + "," + detail::num(r.solve_seconds, "%.3f");
  return line;
}

inline std::string to_table(const std::vector<RunReport>& rows, bool timings) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-20s %-5s %-16s %16s %10s %8s %8s %6s", "case", "model",
                "status", "objective", "gap (%)", "rows", "cols", "iters");
  out += buf;
  if (timings) {
    std::snprintf(buf, sizeof buf, " %9s %9s", "build (s)", "solve (s)");
    out += buf;
  }
  out += "\n";
  for (const auto& r : rows) {
    std::string gap = r.gap_percent ? detail::num(*r.gap_percent, "%.4f") : std::string("-");
    std::snprintf(buf, sizeof buf, "%-20s %-5s %-16s %16.6f %10s %8d %8d %6d",
                  r.case_name.c_str(), r.model.c_str(),
                  (r.error.empty() ? r.status : "error").c_str(), r.objective, gap.c_str(),
                  r.rows, r.cols, r.iterations);
    out += buf;
    if (timings) {
      std::snprintf(buf, sizeof buf, " %9.3f %9.3f", r.build_seconds, r.solve_seconds);
      out += buf;
    }
    out += "\n";
    if (!r.error.empty()) out += "    " + r.error + "\n";
  }
  return out;
}

}  // namespace opfbound::report
