// Command-line driver: runs one experiment scenario from a JSON config and
// writes rounds.csv and summary.json into the output directory.

#include <CLI11.hpp>

#include <filesystem>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "corral/config.hpp"
#include "corral/harness.hpp"

namespace fs = std::filesystem;
using namespace corral;
using namespace corral::harness;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed_offset = 0;
  bool quiet = false;
  bool no_rounds = false;
};

int run(Scenario scenario, const Options& opt) {
  ExperimentConfig cfg = load_config(opt.config);
  for (auto& seed : cfg.seeds) seed += opt.seed_offset;
  if (opt.no_rounds) cfg.write_rounds = false;

  fs::path out = !opt.out.empty()      ? fs::path(opt.out)
                 : !cfg.output.empty() ? fs::path(cfg.output)
                                       : fs::path("out") / (cfg.name.empty() ? to_string(scenario) : cfg.name);
  fs::create_directories(out);

  std::ofstream rounds;
  if (cfg.write_rounds) {
    rounds.open(out / "rounds.csv");
    if (!rounds) throw Error(ErrorKind::kConfig, "cannot write " + (out / "rounds.csv").string());
  }
  auto result = run_scenario(cfg, scenario, cfg.write_rounds ? &rounds : nullptr);
  if (!opt.quiet) std::fputs(result.report.c_str(), stdout);

  std::ofstream js(out / "summary.json");
  js << result.summary.dump(2) << '\n';
  if (!js) throw Error(ErrorKind::kConfig, "cannot write " + (out / "summary.json").string());
  if (!opt.quiet) std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Run bandit model-selection experiments"};
  app.require_subcommand(1);
  Options opt;

  const std::pair<const char*, Scenario> commands[] = {
      {"run", Scenario::kCorralRun},
      {"standalone", Scenario::kStandaloneRun},
      {"stability-test", Scenario::kStabilityTest},
      {"lowerbound-demo", Scenario::kLowerBoundDemo},
      {"sweep", Scenario::kSweep},
  };
  std::optional<Scenario> chosen;
  for (const auto& [name, scenario] : commands) {
    auto* sub = app.add_subcommand(name, std::string("scenario ") + to_string(scenario));
    sub->add_option("-c,--config", opt.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", opt.out, "output directory (overrides the config)");
    sub->add_option("--seed-offset", opt.seed_offset, "added to every configured seed");
    sub->add_flag("-q,--quiet", opt.quiet, "no console summary");
    sub->add_flag("--no-rounds", opt.no_rounds, "skip rounds.csv");
    sub->callback([&chosen, s = scenario] { chosen = s; });
  }
  CLI11_PARSE(app, argc, argv);

  try {
    return run(*chosen, opt);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return e.kind() == ErrorKind::kConfig ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
