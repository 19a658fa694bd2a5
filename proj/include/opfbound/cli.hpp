#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "opfbound/report.hpp"
#include "opfbound/verify.hpp"

namespace opfbound::cli {

// exit codes shared by all subcommands
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitNumerical = 3;

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string case_stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

inline netdata::Network load_network(const std::string& path) {
  std::string text = read_file(path);
  if (std::filesystem::path(path).extension() == ".json") return netdata::load_json(text);
  return netdata::parse_case(text);
}

inline std::map<std::string, verify::Fixture> load_fixture_map(const std::string& path) {
  if (path.empty()) return {};
  return verify::load_fixtures(read_file(path));
}

}  // namespace detail

struct SolveArgs {
  std::string case_path;
  std::string model = "lp0";
  models::ApproxConfig cfg;
  std::string out = "table";  // json | csv | table
  std::optional<double> ac_ref;
  bool timings = false;
  std::string dump_lp;         // optional LP text export path
  std::string fixtures_path;   // optional AC fixture file
};

// builds, solves and reports one case; returns the process exit code
inline report::RunReport run_one(const netdata::Network& net, const std::string& case_name,
                                 const std::string& model, const models::ApproxConfig& cfg,
                                 std::optional<double> ac_ref, const std::string& dump_lp = "") {
  report::RunReport rep;
  rep.case_name = case_name;
  rep.model = model;
  rep.cfg = cfg;

  auto t0 = std::chrono::steady_clock::now();
  models::BuildResult built =
      model == "lps" ? models::build_lps(net, cfg) : models::build_lp0(net, cfg);
  rep.build_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.rows = built.problem.num_rows();
  rep.cols = built.problem.num_cols();

  if (!dump_lp.empty()) {
    std::ofstream out(dump_lp);
    out << lp::export_lp_text(built.problem);
  }

  lp::SolverOptions opt;
  opt.tol.feasibility = cfg.feasibility_tol;
  opt.tol.optimality = cfg.optimality_tol;
  lp::Solution sol = lp::solve(built.problem, opt);
  rep.status = lp::to_string(sol.status);
  rep.objective = sol.objective;
  rep.iterations = sol.iterations;
  rep.solve_seconds = sol.wall_seconds;
  if (ac_ref && sol.status == lp::SolveStatus::Optimal)
    rep.gap_percent = verify::optimality_gap(*ac_ref, sol.objective);
  return rep;
}

inline int exit_code_for(const std::string& status) {
  if (status == "Optimal") return kExitOk;
  if (status == "Infeasible" || status == "Unbounded") return kExitInfeasible;
  return kExitNumerical;
}

inline void emit(const std::vector<report::RunReport>& rows, const std::string& fmt,
                 bool timings, std::ostream& out) {
  if (fmt == "json") {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) arr.push_back(report::to_json(r, timings));
    out << arr.dump(2) << "\n";
  } else if (fmt == "csv") {
    out << report::csv_header(timings) << "\n";
    for (const auto& r : rows) out << report::to_csv_row(r, timings) << "\n";
  } else {
    out << report::to_table(rows, timings);
  }
}

inline int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
  try {
    netdata::Network net = detail::load_network(args.case_path);
    auto violations = netdata::validate(net);
    if (!violations.empty()) {
      for (const auto& v : violations) err << "validation: " << v << "\n";
      return kExitUsage;
    }
    for (const auto& note : net.parse_notes) err << "note: " << note << "\n";

    std::string name = detail::case_stem(args.case_path);
    std::optional<double> ac_ref = args.ac_ref;
    if (!ac_ref) {
      auto fixtures = detail::load_fixture_map(args.fixtures_path);
      auto it = fixtures.find(name);
      if (it != fixtures.end()) ac_ref = it->second.ac_objective;
    }

    report::RunReport rep = run_one(net, name, args.model, args.cfg, ac_ref, args.dump_lp);
    emit({rep}, args.out, args.timings, out);
    return exit_code_for(rep.status);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

struct CertifyArgs {
  int k = 16;
  int samples = 10000;
  std::string out = "table";
};

inline int cmd_certify(const CertifyArgs& args, std::ostream& out, std::ostream& err) {
  try {
    auto cert = verify::certify_cone(args.k, args.samples);
    if (args.out == "json") {
      nlohmann::ordered_json j;
      j["k"] = cert.k;
      j["epsilon"] = cert.epsilon_theory;
      j["observed"] = cert.observed;
      j["containment_violations"] = cert.containment_violations;
      j["tightness_failures"] = cert.tightness_failures;
      j["lp_disagreements"] = cert.lp_disagreements;
      j["pass"] = cert.pass;
      out << j.dump(2) << "\n";
    } else {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "%s  k=%d  epsilon=%.5g  observed=%.5g  containment=%d tightness=%d lp=%d\n",
                    cert.pass ? "PASS" : "FAIL", cert.k, cert.epsilon_theory, cert.observed,
                    cert.containment_violations, cert.tightness_failures, cert.lp_disagreements);
      out << buf;
    }
    return cert.pass ? kExitOk : kExitInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

struct BatchArgs {
  std::string dir;
  std::vector<std::string> models = {"lp0", "lps"};
  models::ApproxConfig cfg;
  std::string out = "csv";
  int jobs = 1;
  bool timings = false;
  std::string fixtures_path;
};

// Every (case, model) pair becomes one row; failures are recorded in the
// row and the batch keeps going. Cases may solve concurrently; the output
// order is by (case, model) regardless.
inline int cmd_batch(const BatchArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> files;
  try {
    for (const auto& entry : std::filesystem::directory_iterator(args.dir)) {
      auto ext = entry.path().extension();
      if (ext == ".m" || ext == ".json") files.push_back(entry.path().string());
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::sort(files.begin(), files.end());

  auto fixtures = detail::load_fixture_map(args.fixtures_path);

  struct Task {
    std::string path, model;
  };
  std::vector<Task> tasks;
  for (const auto& f : files)
    for (const auto& m : args.models) tasks.push_back({f, m});

  std::vector<report::RunReport> rows(tasks.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      const Task& t = tasks[i];
      report::RunReport& rep = rows[i];
      rep.case_name = detail::case_stem(t.path);
      rep.model = t.model;
      rep.cfg = args.cfg;
      try {
        netdata::Network net = detail::load_network(t.path);
        auto violations = netdata::validate(net);
        if (!violations.empty()) throw std::runtime_error("validation: " + violations.front());
        std::optional<double> ac_ref;
        auto it = fixtures.find(rep.case_name);
        if (it != fixtures.end()) ac_ref = it->second.ac_objective;
        rep = run_one(net, rep.case_name, t.model, args.cfg, ac_ref);
      } catch (const std::exception& e) {
        rep.status = "error";
        rep.error = e.what();
      }
    }
  };
  int jobs = std::max(1, args.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const report::RunReport& a, const report::RunReport& b) {
                     return std::tie(a.case_name, a.model) < std::tie(b.case_name, b.model);
                   });
  emit(rows, args.out, args.timings, out);
  return kExitOk;
}

}  // namespace opfbound::cli
