// Experiment runner CLI: loads a JSON config describing an instance source,
// mechanisms, mode and optional sweep; runs the experiment matrix and writes
// report.json / runs.csv (plus compare.json and per-run round traces) to the
// output directory. Exit code 0 iff every run completed.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coalform/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"coalition formation experiment runner"};

  std::string config_path;
  std::string out_dir = "out";
  std::string mode;
  std::vector<std::string> mechanisms;
  int k = 0;
  double epsilon = -1.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::uint64_t budget = 0;
  bool trace = false;

  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--out", out_dir, "output directory (default: out)");
  app.add_option("--mode", mode, "colnform | brute_force | both");
  app.add_option("--mechanism", mechanisms,
                 "mechanism override, repeatable: equal_split, proportional_split, "
                 "egalitarian_nash, or mixed:a+b");
  app.add_option("--k", k, "coalition size cap override");
  app.add_option("--epsilon", epsilon, "strict-improvement threshold override");
  app.add_option("--seed", seed, "seed override")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--budget", budget, "enumeration budget override");
  app.add_flag("--trace", trace, "emit one JSON line per formation round");

  CLI11_PARSE(app, argc, argv);

  try {
    coalform::ExperimentConfig config =
        coalform::load_experiment_config(config_path);
    if (!mode.empty()) config.mode = mode;
    if (k > 0) {
      config.k = k;
      config.random_spec.k = k;
    }
    if (epsilon >= 0.0) config.epsilon = epsilon;
    if (seed_set) {
      config.seed = seed;
      config.random_spec.seed = seed;
    }
    if (budget > 0) config.budget = budget;
    if (trace) config.trace = true;
    if (!mechanisms.empty()) {
      config.mechanisms.clear();
      for (const auto& name : mechanisms) {
        coalform::MechanismSpec spec;
        if (name.rfind("mixed:", 0) == 0) {
          std::vector<coalform::MechanismKind> kinds;
          std::string rest = name.substr(6);
          std::size_t start = 0;
          while (start <= rest.size()) {
            const auto plus = rest.find('+', start);
            const std::string part = rest.substr(
                start, plus == std::string::npos ? std::string::npos : plus - start);
            auto kind = coalform::mechanism_from_string(part);
            if (!kind.has_value()) {
              throw coalform::ValidationError("unknown mechanism '" + part + "'");
            }
            kinds.push_back(*kind);
            if (plus == std::string::npos) break;
            start = plus + 1;
          }
          spec.mixed = coalform::MixedMechanism(kinds);
        } else {
          auto kind = coalform::mechanism_from_string(name);
          if (!kind.has_value()) {
            throw coalform::ValidationError("unknown mechanism '" + name + "'");
          }
          spec.pure = *kind;
        }
        config.mechanisms.push_back(std::move(spec));
      }
    }
    coalform::validate_config(config);

    coalform::ExperimentReport report = coalform::run_experiment(config);
    coalform::write_report_files(report, config, out_dir);

    int failures = 0;
    for (const auto& run : report.runs) {
      if (!run.error.empty()) {
        ++failures;
        std::fprintf(stderr, "FAILED: %s%s%s: %s\n", run.mechanism.c_str(),
                     run.sweep_value.has_value() ? " @" : "",
                     run.sweep_value.has_value()
                         ? (run.sweep_parameter + "=" +
                            coalform::detail::format_double(*run.sweep_value))
                               .c_str()
                         : "",
                     run.error.c_str());
      }
      if (run.no_stable_structure) {
        std::fprintf(stderr, "note: %s has no stable structure\n",
                     run.mechanism.c_str());
      }
    }
    std::printf("%zu runs, %d failed; reports in %s\n", report.runs.size(), failures,
                out_dir.c_str());
    return report.ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
