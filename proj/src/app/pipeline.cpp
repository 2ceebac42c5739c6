#include "latentdyn/app/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "latentdyn/data/dataset.hpp"
#include "latentdyn/errors.hpp"
#include "latentdyn/eval/evaluation.hpp"
#include "latentdyn/training/trainer.hpp"

namespace latentdyn::app {
namespace fs = std::filesystem;
namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw ValidationError("write failed for " + path.string());
}

std::string eval_meta(const CheckpointMeta& m, const eval::EvalOptions& o) {
  nlohmann::ordered_json j;
  j["checkpoint"] = m.label;
  j["config_digest"] = m.config_digest;
  j["seed"] = m.seed;
  j["phase"] = m.phase;
  j["epoch"] = m.epoch;
  j["grid"] = o.grid;
  j["roundtrip_grid"] = o.roundtrip_grid;
  j["refine_tol"] = o.refine_tol;
  j["lp_grid"] = o.lp_grid;
  j["steps"] = o.steps;
  j["dt"] = o.dt;
  return j.dump();
}

}  // namespace

OutputLock::OutputLock(const fs::path& dir) : file_(dir / ".lock") {
  fs::create_directories(dir);
  std::FILE* f = std::fopen(file_.c_str(), "wx");
  if (f == nullptr) {
    throw ValidationError("output directory " + dir.string() +
                          " is in use by another run (remove " + file_.string() +
                          " if stale)");
  }
  std::fclose(f);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(file_, ec);
}

fs::path dataset_file(const fs::path& dir) { return dir / "dataset.csv"; }

fs::path checkpoint_file(const fs::path& dir, const std::string& label) {
  return dir / ("checkpoint_" + label + ".json");
}

void run_gen(const RunConfig& config, const fs::path& out) {
  OutputLock lock(out);
  const auto ds = data::generate(config.data.trajectories, config.data.steps,
                                 config.data.dt, config.seed);
  data::save_dataset(ds, dataset_file(out));
}

void run_train(const RunConfig& config, const fs::path& data_dir, const fs::path& out,
               std::ostream& log) {
  const fs::path data_path = dataset_file(data_dir);
  if (!fs::exists(data_path)) {
    throw MissingFileError("dataset not found: " + data_path.string());
  }
  const auto ds = data::load_dataset(data_path);
  if (ds.meta.trajectories != config.data.trajectories ||
      ds.meta.steps != config.data.steps || ds.meta.dt != config.data.dt) {
    throw ValidationError("dataset " + data_path.string() +
                          " does not match the config's data section");
  }

  OutputLock lock(out);
  write_text(out / "config.json", to_json(config) + "\n");
  const std::string digest = config_digest(config);

  std::ofstream loss(out / "loss_log.csv", std::ios::binary);
  if (!loss) throw ValidationError("cannot write " + (out / "loss_log.csv").string());
  loss << "phase,epoch,l_rec,l_conj,l_lat1,total\n";

  train::TrainCallbacks cb;
  cb.on_epoch = [&](const train::EpochLog& e) {
    loss << e.phase << ',' << e.epoch << ',' << fmt(e.rec) << ',' << fmt(e.conj) << ','
         << fmt(e.lat1) << ',' << fmt(e.total) << '\n';
    loss.flush();
    log << "phase " << e.phase << " epoch " << e.epoch << " l_rec=" << fmt(e.rec)
        << " l_conj=" << fmt(e.conj) << " l_lat1=" << fmt(e.lat1)
        << " total=" << fmt(e.total) << '\n';
  };
  cb.on_checkpoint = [&](const train::Snapshot& s) {
    Checkpoint c;
    c.meta.seed = config.seed;
    c.meta.phase = s.phase;
    c.meta.epoch = s.epoch;
    c.meta.config_digest = digest;
    c.meta.label = s.label;
    c.model = s.model;
    save_checkpoint(c, checkpoint_file(out, s.label));
  };
  train::train(config.train_config(), ds, nn::init_model(config.nets, config.seed), cb);
}

void run_eval(const fs::path& checkpoint, const fs::path& out,
              const std::optional<RunConfig>& config, bool force) {
  const Checkpoint c = load_checkpoint(
      checkpoint, config ? std::optional<nn::ModelSpecs>(config->nets) : std::nullopt);
  if (config && !force) {
    const std::string digest = config_digest(*config);
    if (digest != c.meta.config_digest) {
      throw ValidationError("checkpoint " + checkpoint.string() + " was trained with config " +
                            c.meta.config_digest + ", the supplied config has digest " +
                            digest + " (use --force to evaluate anyway)");
    }
  }
  const eval::EvalOptions options = config ? config->eval_options() : eval::EvalOptions{};
  OutputLock lock(out);
  const auto bundle = eval::evaluate(nn::circle_maps(c.model), options);
  eval::write_bundle(bundle, out, eval_meta(c.meta, options));
}

bool run_theory(theory::Suite suite, const fs::path& out, const RunConfig& config,
                const std::optional<fs::path>& checkpoint) {
  std::optional<CircleMaps> trained;
  nlohmann::ordered_json meta;
  meta["suite"] = theory::suite_name(suite);
  meta["seed"] = config.seed;
  if (checkpoint) {
    const Checkpoint c = load_checkpoint(*checkpoint, config.nets);
    trained = nn::circle_maps(c.model);
    meta["checkpoint"] = c.meta.label;
    meta["config_digest"] = c.meta.config_digest;
  }
  OutputLock lock(out);
  const auto checks =
      theory::run_suite(suite, config.theory_config(), trained ? &*trained : nullptr);
  theory::write_report(checks, out / "theory_report.json", meta.dump());
  return !theory::any_failed(checks);
}

bool run_all(const RunConfig& config, const fs::path& out, std::ostream& log) {
  OutputLock lock(out);
  run_gen(config, out / "data");
  run_train(config, out / "data", out / "train", log);
  const fs::path final_ckpt = checkpoint_file(out / "train", "final");
  run_eval(final_ckpt, out / "eval", config, false);
  return run_theory(theory::Suite::all, out / "theory", config, final_ckpt);
}

}  // namespace latentdyn::app
