// Command-line front end: gaussflow <command> --config <path> [--out <dir>] [--seed <u64>]
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
// 3 runtime error. GAUSSFLOW_THREADS sets the worker count.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gaussflow/errors.hpp"
#include "gaussflow/experiment.hpp"

namespace ex = gaussflow::experiment;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int run(const std::string& command, const std::string& config_path, const std::string& out_opt,
        const std::uint64_t* seed) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read config " << config_path << "\n";
    return kExitConfig;
  }
  std::stringstream buf;
  buf << in.rdbuf();

  ex::ExperimentConfig config;
  try {
    config = ex::validate_config(buf.str());
  } catch (const gaussflow::ParseError& e) {
    std::cerr << "error: malformed config at byte " << e.position() << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const gaussflow::ValidationError& e) {
    std::cerr << "error: invalid config\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << "\n";
    return kExitConfig;
  }
  if (ex::to_string(config.command) != command) {
    std::cerr << "error: config is for command '" << ex::to_string(config.command)
              << "', not '" << command << "'\n";
    return kExitConfig;
  }
  if (seed) config.seed = *seed;
  const std::string out_dir = !out_opt.empty() ? out_opt : config.output.value_or("gaussflow-out");

  ex::RunReport report;
  try {
    report = ex::run_experiment(config, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  for (const auto& c : report.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  }
  if (report.error) std::cerr << "error: " << *report.error << "\n";
  std::cout << "report: " << out_dir << "/report.json\n";
  return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grassmannian Gauss-map and mean curvature flow laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  for (const auto& name : ex::command_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "random seed (overrides the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  const auto* sub = app.get_subcommands().front();
  const bool has_seed = sub->count("--seed") > 0;
  return run(sub->get_name(), config_path, out_dir, has_seed ? &seed : nullptr);
}
