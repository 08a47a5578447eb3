// Command-line front end: loss-grid sweeps with CSV/plot output, the
// self-verification suite, and per-round record dumps.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or domain error,
// 3 I/O error.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cfqkd/cfqkd.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open '" + path + "' for writing");
  out << contents;
  out.flush();
  if (!out) throw std::ios_base::failure("write to '" + path + "' failed");
}

struct SweepCli {
  cfqkd::sim::SweepSpec spec;
  std::string out_path = "sweep.csv";
  std::string plot_prefix;
};

int cmd_sweep(const SweepCli& cli) {
  const auto rows = cfqkd::sim::run_sweep(cli.spec);
  write_file(cli.out_path, cfqkd::sim::to_csv(rows));
  if (!cli.plot_prefix.empty()) {
    for (const auto& file : cfqkd::sim::render_plots(rows, cli.plot_prefix)) {
      write_file(file.path, file.contents);
    }
  }
  std::cout << "wrote " << cli.out_path << " (" << rows.size() << " rows)\n";
  return kExitOk;
}

int cmd_verify(const cfqkd::sim::VerifyOptions& opts) {
  const auto checks = cfqkd::sim::run_verify(opts);
  std::size_t failed = 0;
  for (const auto& check : checks) {
    std::cout << (check.pass ? "[PASS] " : "[FAIL] ") << check.name << ": " << check.detail
              << '\n';
    failed += check.pass ? 0 : 1;
  }
  std::cout << checks.size() - failed << "/" << checks.size() << " checks passed\n";
  return failed == 0 ? kExitOk : kExitCheckFailure;
}

struct SimulateCli {
  cfqkd::StrategyConfig cfg;
  double reflectivity = 0.5;
  std::string out_path;
};

int cmd_simulate(SimulateCli& cli) {
  cli.cfg.reflectivity = cli.reflectivity;
  cli.cfg.transmissivity = 1.0 - cli.reflectivity;
  cli.cfg.validate();
  std::ofstream out(cli.out_path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open '" + cli.out_path + "' for writing");
  cfqkd::sim::dump_rounds(cli.cfg, out);
  out.flush();
  if (!out) throw std::ios_base::failure("write to '" + cli.out_path + "' failed");
  std::cout << "wrote " << cli.out_path << " (" << cli.cfg.n_rounds << " rounds)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual-QKD channel-loss and interception analysis"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Plain key=value file; command-line flags take precedence");

  // --- sweep ---
  SweepCli sweep;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "Closed-form and Monte Carlo rates over a loss grid (CSV)");
  sweep_cmd->add_option("--eta-start", sweep.spec.eta_start, "First loss rate")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sweep_cmd->add_option("--eta-end", sweep.spec.eta_end, "Last loss rate")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sweep_cmd->add_option("--steps", sweep.spec.steps, "Grid points")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep_cmd->add_option("--rounds", sweep.spec.n_rounds, "Monte Carlo rounds per grid point")
      ->capture_default_str();
  sweep_cmd->add_option("--seed", sweep.spec.seed, "Base random seed")->capture_default_str();
  sweep_cmd->add_option("--reflectivity", sweep.spec.reflectivity, "Beam-splitter R")
      ->capture_default_str();
  std::map<std::string, cfqkd::sim::AdversarySelection> adversary_names{
      {"none", cfqkd::sim::AdversarySelection::None},
      {"s1", cfqkd::sim::AdversarySelection::StrategyI},
      {"s2", cfqkd::sim::AdversarySelection::StrategyII},
      {"auto", cfqkd::sim::AdversarySelection::Auto},
      {"forced", cfqkd::sim::AdversarySelection::Forced}};
  sweep_cmd
      ->add_option("--adversary", sweep.spec.adversary,
                   "Interceptor for the Monte Carlo runs (auto follows the loss regime)")
      ->transform(CLI::CheckedTransformer(adversary_names, CLI::ignore_case))
      ->default_str("auto");
  sweep_cmd
      ->add_option("--check-fraction", sweep.spec.check_fraction,
                   "Share of announced rounds reserved for checking (excluded from the key)")
      ->check(CLI::Range(0.0, 0.999999))
      ->capture_default_str();
  sweep_cmd->add_flag("--eve-flip", sweep.spec.eve_flip,
                      "Flip the interceptor key when its sender-error exceeds 1/2");
  sweep_cmd->add_flag("--analytic-only", sweep.spec.analytic_only,
                      "Skip the Monte Carlo columns");
  sweep_cmd->add_option("--threads", sweep.spec.threads, "Worker threads (0 = auto)")
      ->capture_default_str();
  sweep_cmd->add_option("--confidence", sweep.spec.confidence, "Confidence level for intervals")
      ->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out_path, "Output CSV path")->capture_default_str();
  sweep_cmd->add_option("--plot", sweep.plot_prefix,
                        "Prefix for plot output (.dat data files and .svg charts)");

  // --- verify ---
  cfqkd::sim::VerifyOptions verify;
  std::string fault_name;
  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "Run the algebraic, Monte Carlo, and indistinguishability check suite");
  verify_cmd->add_option("--rounds", verify.n_rounds, "Monte Carlo rounds per check run")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  verify_cmd->add_option("--seed", verify.seed, "Base random seed")->capture_default_str();
  verify_cmd->add_option("--reflectivity", verify.reflectivity, "Beam-splitter R")
      ->capture_default_str();
  verify_cmd->add_option("--threads", verify.threads, "Worker threads (0 = auto)")
      ->capture_default_str();
  verify_cmd->add_option("--confidence", verify.confidence, "Confidence level for intervals")
      ->capture_default_str();
  verify_cmd
      ->add_option("--inject-fault", fault_name,
                   "Self-test hook: 's2-block' biases the high-loss block probability")
      ->check(CLI::IsMember({"s2-block"}))
      ->group("");

  // --- simulate ---
  SimulateCli simulate;
  std::map<std::string, cfqkd::AdversaryMode> mode_names{
      {"none", cfqkd::AdversaryMode::None},
      {"s1", cfqkd::AdversaryMode::StrategyI},
      {"s2", cfqkd::AdversaryMode::StrategyII},
      {"forced", cfqkd::AdversaryMode::ForcedAttack}};
  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "Dump per-round records as columnar text");
  simulate_cmd->add_option("--eta", simulate.cfg.loss_rate, "One-way loss rate")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  simulate_cmd->add_option("--rounds", simulate.cfg.n_rounds, "Rounds to dump")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate_cmd->add_option("--seed", simulate.cfg.seed, "Random seed")->capture_default_str();
  simulate_cmd->add_option("--reflectivity", simulate.reflectivity, "Beam-splitter R")
      ->capture_default_str();
  simulate_cmd->add_option("--adversary", simulate.cfg.adversary, "Interceptor strategy")
      ->transform(CLI::CheckedTransformer(mode_names, CLI::ignore_case))
      ->default_str("none");
  simulate_cmd->add_option("--out", simulate.out_path, "Output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sweep_cmd->parsed()) return cmd_sweep(sweep);
    if (verify_cmd->parsed()) {
      if (fault_name == "s2-block") {
        verify.fault = cfqkd::sim::FaultInjection::StrategyIIBlockProbability;
      }
      return cmd_verify(verify);
    }
    if (simulate_cmd->parsed()) return cmd_simulate(simulate);
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
