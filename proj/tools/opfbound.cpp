#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "opfbound/cli.hpp"

namespace {

std::string env_fixtures() {
  const char* env = std::getenv("OPFBOUND_FIXTURES");
  return env ? env : "";
}

void add_config_flags(CLI::App* app, opfbound::models::ApproxConfig& cfg) {
  app->add_option("--k", cfg.k, "cone stage count (accuracy 1/cos(pi/2^k) - 1)")
      ->check(CLI::Range(2, 40));
  app->add_option("--l", cfg.l, "square tangent count")->check(CLI::PositiveNumber);
  app->add_option("--s", cfg.s, "cosine tangent count")->check(CLI::PositiveNumber);
  app->add_option_function<double>(
      "--tol", [&cfg](double t) { cfg.feasibility_tol = cfg.optimality_tol = t; },
      "solver feasibility and optimality tolerance");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LP lower bounds for AC optimal power flow"};
  app.require_subcommand(1);

  opfbound::cli::SolveArgs solve_args;
  solve_args.fixtures_path = env_fixtures();
  auto* solve = app.add_subcommand("solve", "build and solve one case");
  solve->add_option("--case", solve_args.case_path, "MATPOWER .m or network .json file")
      ->required();
  solve->add_option("--model", solve_args.model, "lp0 | lps")
      ->check(CLI::IsMember({"lp0", "lps"}));
  add_config_flags(solve, solve_args.cfg);
  solve->add_option("--out", solve_args.out, "json | csv | table")
      ->check(CLI::IsMember({"json", "csv", "table"}));
  solve->add_option("--ac-ref", [&solve_args](const CLI::results_t& res) {
    solve_args.ac_ref = std::stod(res[0]);
    return true;
  }, "AC reference objective for the gap column");
  solve->add_flag("--timings", solve_args.timings, "include wall times in the report");
  solve->add_option("--dump-lp", solve_args.dump_lp, "write the LP text export here");
  solve->add_option("--fixtures", solve_args.fixtures_path,
                    "AC fixture file (default: $OPFBOUND_FIXTURES)");

  opfbound::cli::CertifyArgs certify_args;
  auto* certify = app.add_subcommand("certify", "measure the cone approximation accuracy");
  certify->add_option("--k", certify_args.k, "cone stage count")->check(CLI::Range(2, 40));
  certify->add_option("--samples", certify_args.samples, "directions to sweep")
      ->check(CLI::PositiveNumber);
  certify->add_option("--out", certify_args.out, "json | table")
      ->check(CLI::IsMember({"json", "table"}));

  opfbound::cli::BatchArgs batch_args;
  batch_args.fixtures_path = env_fixtures();
  auto* batch = app.add_subcommand("batch", "solve every case in a directory");
  batch->add_option("--dir", batch_args.dir, "directory of .m / .json cases")->required();
  batch->add_option("--models", [&batch_args](const CLI::results_t& res) {
    batch_args.models.clear();
    std::stringstream ss(res[0]);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) batch_args.models.push_back(tok);
    for (const auto& m : batch_args.models)
      if (m != "lp0" && m != "lps") return false;
    return !batch_args.models.empty();
  }, "comma separated list from {lp0, lps}");
  add_config_flags(batch, batch_args.cfg);
  batch->add_option("--out", batch_args.out, "json | csv | table")
      ->check(CLI::IsMember({"json", "csv", "table"}));
  batch->add_option("--jobs", batch_args.jobs, "concurrent solves")->check(CLI::PositiveNumber);
  batch->add_flag("--timings", batch_args.timings, "include wall times");
  batch->add_option("--fixtures", batch_args.fixtures_path,
                    "AC fixture file (default: $OPFBOUND_FIXTURES)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return opfbound::cli::kExitUsage;
  }

  if (solve->parsed()) return opfbound::cli::cmd_solve(solve_args, std::cout, std::cerr);
  if (certify->parsed()) return opfbound::cli::cmd_certify(certify_args, std::cout, std::cerr);
  if (batch->parsed()) return opfbound::cli::cmd_batch(batch_args, std::cout, std::cerr);
  return opfbound::cli::kExitUsage;
}
