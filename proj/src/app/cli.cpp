#include "latentdyn/app/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <optional>
#include <string>

#include "latentdyn/app/config.hpp"
#include "latentdyn/app/pipeline.hpp"
#include "latentdyn/errors.hpp"

namespace latentdyn::app {
namespace {

enum Exit { ok = 0, usage = 1, invalid = 2, numerical = 3, theory_failed = 4 };

RunConfig resolve(const std::string& path, std::optional<std::uint64_t> seed) {
  RunConfig c = path.empty() ? RunConfig{} : load_config(path);
  apply_seed_override(c, seed);
  c.validate();
  return c;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent dynamics on the circle: data, training, evaluation, theory checks"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_dir, checkpoint, suite = "all";
  std::optional<std::uint64_t> seed;
  bool force = false;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Overrides LATENTDYN_SEED and the config seed");
  };

  auto* gen = app.add_subcommand("gen", "Generate the trajectory dataset");
  gen->add_option("--config", config_path, "Run config (JSON)")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();
  add_seed(gen);

  auto* train = app.add_subcommand("train", "Train encoder, decoder and latent field");
  train->add_option("--config", config_path, "Run config (JSON)")->required();
  train->add_option("--data", data_dir, "Directory written by gen")->required();
  train->add_option("--out", out_dir, "Output directory")->required();
  add_seed(train);

  auto* eval = app.add_subcommand("eval", "Write evaluation tables for a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--out", out_dir, "Output directory")->required();
  eval->add_option("--config", config_path, "Config whose digest the checkpoint must match");
  eval->add_flag("--force", force, "Evaluate even if the config digest differs");

  auto* theory = app.add_subcommand("theory", "Run theory verification checks");
  theory->add_option("--suite", suite, "charts, conjugacy, borsuk-ulam, reach or all");
  theory->add_option("--out", out_dir, "Output directory")->required();
  theory->add_option("--checkpoint", checkpoint, "Trained checkpoint for the learned-map checks");
  theory->add_option("--config", config_path, "Run config (JSON)");
  add_seed(theory);

  auto* all = app.add_subcommand("all", "gen, train, eval and theory in one run");
  all->add_option("--config", config_path, "Run config (JSON)")->required();
  all->add_option("--out", out_dir, "Output directory")->required();
  add_seed(all);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return ok;
    }
    err << "error: " << e.what() << '\n';
    return usage;
  }

  try {
    if (gen->parsed()) {
      run_gen(resolve(config_path, seed), out_dir);
    } else if (train->parsed()) {
      run_train(resolve(config_path, seed), data_dir, out_dir, err);
    } else if (eval->parsed()) {
      std::optional<RunConfig> cfg;
      if (!config_path.empty()) cfg = resolve(config_path, std::nullopt);
      run_eval(checkpoint, out_dir, cfg, force);
    } else if (theory->parsed()) {
      const auto s = theory::parse_suite(suite);
      std::optional<std::filesystem::path> ck;
      if (!checkpoint.empty()) ck = checkpoint;
      if (!run_theory(s, out_dir, resolve(config_path, seed), ck)) {
        err << "theory: at least one check failed, see "
            << (std::filesystem::path(out_dir) / "theory_report.json").string() << '\n';
        return theory_failed;
      }
    } else if (all->parsed()) {
      if (!run_all(resolve(config_path, seed), out_dir, err)) {
        err << "all: at least one theory check failed\n";
        return theory_failed;
      }
    }
  } catch (const MissingFileError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return numerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return invalid;
  }
  return ok;
}

}  // namespace latentdyn::app
