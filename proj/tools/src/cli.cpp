#include "dpbl/cli/cli.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <ostream>
#include <string>

#include "dpbl/cli/commands.hpp"

namespace dpbl::cli {

void configure_logging() {
  auto logger = spdlog::get("dp-bilevel");
  if (!logger) {
    logger = spdlog::stderr_logger_mt("dp-bilevel");
    logger->set_pattern("[%l] %v");
  }
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("DP_BILEVEL_LOG");
  const std::string level = env ? env : "error";
  if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else spdlog::set_level(spdlog::level::err);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentially private release of network demands via bilevel post-processing",
               "dp-bilevel"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::optional<int> runs;
  double beta = 0.0, beta_pct = 0.0, f_tilde = 0.0;
  std::string out_dir = ".", dump_dir;
  std::vector<double> d_tilde;

  auto common = [&](CLI::App* sub, bool privacy) {
    sub->add_option("--case", cfg.case_path, "MATPOWER case file")->required();
    if (!privacy) return;
    sub->add_option("--alpha", cfg.privacy.alpha, "indistinguishability level (p.u.)")
        ->capture_default_str();
    sub->add_option("--epsilon", cfg.privacy.epsilon, "privacy level")->capture_default_str();
    auto* b = sub->add_option("--beta", beta, "absolute cost band half-width");
    auto* bp = sub->add_option("--beta-pct", beta_pct, "cost band half-width in % of f_tilde");
    b->excludes(bp);
    sub->add_option("--eta", cfg.privacy.eta, "bisection tolerance on delta")
        ->capture_default_str();
    sub->add_option("--seed", cfg.privacy.seed, "base seed")->capture_default_str();
    sub->add_option("--max-oracle-calls", cfg.privacy.max_oracle_calls, "push-up solve cap")
        ->capture_default_str();
    sub->add_option("--f-tilde", f_tilde, "cost target (default: O of the case demands)");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--dump-lp", dump_dir, "write every solved program here");
  };

  auto* solve = app.add_subcommand("solve", "solve the follower at the case demands");
  common(solve, false);
  solve->add_flag("--json", cfg.json, "print one JSON object");

  auto* obf = app.add_subcommand("obfuscate", "release obfuscated demands");
  common(obf, true);
  obf->add_option("--runs", runs, "number of seeds (default 1)");

  auto* bench = app.add_subcommand("benchmark", "seeded batch with per-run statistics");
  common(bench, true);
  bench->add_option("--runs", runs, "number of seeds (default 50)");
  bench->add_option("--jobs", cfg.jobs, "worker threads")->capture_default_str();

  auto* probe = app.add_subcommand("probe-monotonicity", "O(d_up) along a delta grid");
  common(probe, true);
  probe->add_option("--delta-grid", cfg.delta_grid, "ascending squared radii a,b,c")
      ->delimiter(',')
      ->required();
  probe->add_option("--d-tilde", d_tilde, "probe centre (default: one Laplace draw)")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }

  configure_logging();
  CLI::App* sub = app.get_subcommands().front();
  auto given = [sub](const char* name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--beta")) cfg.beta = beta;
  if (given("--beta-pct")) cfg.beta_percent = beta_pct;
  if (given("--f-tilde")) cfg.f_tilde = f_tilde;
  if (given("--d-tilde")) cfg.d_tilde = d_tilde;
  if (given("--dump-lp")) cfg.dump_lp = dump_dir;
  cfg.output_dir = out_dir;
  cfg.runs = runs.value_or(sub == bench ? 50 : 1);

  if (sub == solve) return cmd_solve(cfg, out);
  if (sub == obf) return cmd_obfuscate(cfg, out);
  if (sub == bench) return cmd_benchmark(cfg, out);
  return cmd_probe_monotonicity(cfg, out);
}

}  // namespace dpbl::cli
