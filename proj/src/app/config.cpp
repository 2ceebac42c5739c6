#include "latentdyn/app/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <json.hpp>
#include <sstream>

#include "latentdyn/errors.hpp"

namespace latentdyn::app {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("must be an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    for (const auto& [k, _] : j_.items()) {
      bool known = false;
      for (const char* a : keys) known = known || k == a;
      if (!known) throw ParseError(where(k) + ": unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  void count(const char* key, std::size_t& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) throw ParseError(where(key) + ": expected a non-negative integer");
    out = v.get<std::size_t>();
  }

  void u64(const char* key, std::uint64_t& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) throw ParseError(where(key) + ": expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void number(const char* key, double& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ParseError(where(key) + ": expected a number");
    out = v.get<double>();
  }

  void dims(const char* key, nn::MlpSpec& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ParseError(where(key) + ": expected an array of widths");
    std::vector<std::size_t> d;
    for (const json& w : v) {
      if (!w.is_number_unsigned()) throw ParseError(where(key) + ": widths must be integers");
      d.push_back(w.get<std::size_t>());
    }
    out.dims = std::move(d);
  }

  Reader object(const char* key) const { return Reader(j_.at(key), where(key)); }
  const json& raw(const char* key) const { return j_.at(key); }
  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError((path_.empty() ? std::string("config") : path_) + ": " + what);
  }

  const json& j_;
  std::string path_;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("config: " + what);
}

void check_net(const nn::MlpSpec& spec, std::size_t in, std::size_t out,
               const char* name) {
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("config: nets.") + name + ": " + e.what());
  }
  check(spec.dims.front() == in && spec.dims.back() == out,
        std::string("nets.") + name + " must map " + std::to_string(in) + " -> " +
            std::to_string(out));
}

}  // namespace

void RunConfig::validate() const {
  check(data.trajectories >= 1 && data.steps >= 2, "data needs N >= 1 and T >= 2");
  check(data.dt > 0.0 && std::isfinite(data.dt), "data.dt must be > 0");
  check_net(nets.encoder, 2, 1, "encoder");
  check_net(nets.decoder, 1, 2, "decoder");
  check_net(nets.latent, 1, 1, "latent");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const auto& p = schedule[k];
    const std::string at = "schedule[" + std::to_string(k) + "]";
    check(p.weights.rec >= 0 && p.weights.conj >= 0 && p.weights.lat1 >= 0,
          at + ": weights must be >= 0");
    check(p.lr > 0.0 && std::isfinite(p.lr), at + ": lr must be > 0");
  }
  check(batch_size >= 1, "batch_size must be >= 1");
  check(optimizer.beta1 >= 0 && optimizer.beta1 < 1 && optimizer.beta2 >= 0 &&
            optimizer.beta2 < 1,
        "optimizer betas must be in [0, 1)");
  check(optimizer.eps > 0 && optimizer.weight_decay >= 0,
        "optimizer needs eps > 0 and weight_decay >= 0");
  check(eval.grid >= 16, "eval.K must be >= 16");
  check(eval.refine_tol > 0, "eval.refine_tol must be > 0");
  check(eval.lp_p > 0, "eval.lp_p must be > 0");
  check(theory.horizon > 0, "theory.T_horizon must be > 0");
  check(theory.substeps >= 1 && theory.iterations >= 1,
        "theory needs substeps >= 1 and N_iterations >= 1");
}

train::TrainConfig RunConfig::train_config() const {
  train::TrainConfig c;
  c.schedule = schedule;
  c.batch_size = batch_size;
  c.optimizer = optimizer;
  c.seed = seed;
  return c;
}

eval::EvalOptions RunConfig::eval_options() const {
  eval::EvalOptions o;
  o.grid = eval.grid;
  o.roundtrip_grid = eval.grid;
  o.refine_tol = eval.refine_tol;
  o.lp_p = eval.lp_p;
  o.steps = data.steps;
  o.dt = data.dt;
  return o;
}

theory::TheoryConfig RunConfig::theory_config() const {
  theory::TheoryConfig t;
  t.horizon = theory.horizon;
  t.substeps = theory.substeps;
  t.iterations = theory.iterations;
  t.dt = data.dt;
  t.seed = seed;
  t.eval = eval_options();
  return t;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig c;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
  try {
    const Reader r(root, "");
    r.allow({"seed", "data", "nets", "schedule", "batch_size", "optimizer", "eval",
             "theory"});
    r.u64("seed", c.seed);
    if (r.has("data")) {
      const Reader d = r.object("data");
      d.allow({"N", "T", "dt"});
      d.count("N", c.data.trajectories);
      d.count("T", c.data.steps);
      d.number("dt", c.data.dt);
    }
    if (r.has("nets")) {
      const Reader n = r.object("nets");
      n.allow({"encoder", "decoder", "latent"});
      n.dims("encoder", c.nets.encoder);
      n.dims("decoder", c.nets.decoder);
      n.dims("latent", c.nets.latent);
    }
    if (r.has("schedule")) {
      const json& s = r.raw("schedule");
      if (!s.is_array()) throw ParseError("schedule: expected an array of phases");
      c.schedule.clear();
      for (std::size_t k = 0; k < s.size(); ++k) {
        const Reader p(s[k], "schedule[" + std::to_string(k) + "]");
        p.allow({"epochs", "w_rec", "w_conj", "w_lat1", "lr"});
        train::Phase phase;
        phase.lr = 0.0;
        p.count("epochs", phase.epochs);
        p.number("w_rec", phase.weights.rec);
        p.number("w_conj", phase.weights.conj);
        p.number("w_lat1", phase.weights.lat1);
        if (!p.has("epochs") || !p.has("lr")) {
          throw ParseError(p.where("epochs") + ": each phase needs epochs and lr");
        }
        p.number("lr", phase.lr);
        c.schedule.push_back(phase);
      }
    }
    r.count("batch_size", c.batch_size);
    if (r.has("optimizer")) {
      const Reader o = r.object("optimizer");
      o.allow({"beta1", "beta2", "eps", "weight_decay"});
      o.number("beta1", c.optimizer.beta1);
      o.number("beta2", c.optimizer.beta2);
      o.number("eps", c.optimizer.eps);
      o.number("weight_decay", c.optimizer.weight_decay);
    }
    if (r.has("eval")) {
      const Reader e = r.object("eval");
      e.allow({"K", "refine_tol", "lp_p"});
      e.count("K", c.eval.grid);
      e.number("refine_tol", c.eval.refine_tol);
      e.number("lp_p", c.eval.lp_p);
    }
    if (r.has("theory")) {
      const Reader t = r.object("theory");
      t.allow({"T_horizon", "substeps", "N_iterations"});
      t.number("T_horizon", c.theory.horizon);
      t.count("substeps", c.theory.substeps);
      t.count("N_iterations", c.theory.iterations);
    }
  } catch (const ParseError& e) {
    throw ParseError(origin + ": " + e.what());
  } catch (const json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string to_json(const RunConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["data"] = {{"N", c.data.trajectories}, {"T", c.data.steps}, {"dt", c.data.dt}};
  j["nets"] = {{"encoder", c.nets.encoder.dims},
               {"decoder", c.nets.decoder.dims},
               {"latent", c.nets.latent.dims}};
  j["schedule"] = ordered_json::array();
  for (const auto& p : c.schedule) {
    j["schedule"].push_back(ordered_json{{"epochs", p.epochs},
                                         {"w_rec", p.weights.rec},
                                         {"w_conj", p.weights.conj},
                                         {"w_lat1", p.weights.lat1},
                                         {"lr", p.lr}});
  }
  j["batch_size"] = c.batch_size;
  j["optimizer"] = {{"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"eps", c.optimizer.eps},
                    {"weight_decay", c.optimizer.weight_decay}};
  j["eval"] = {{"K", c.eval.grid}, {"refine_tol", c.eval.refine_tol}, {"lp_p", c.eval.lp_p}};
  j["theory"] = {{"T_horizon", c.theory.horizon},
                 {"substeps", c.theory.substeps},
                 {"N_iterations", c.theory.iterations}};
  return j.dump(2);
}

std::string config_digest(const RunConfig& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : to_json(config)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void apply_seed_override(RunConfig& config, std::optional<std::uint64_t> flag) {
  if (flag) {
    config.seed = *flag;
    return;
  }
  if (const char* env = std::getenv("LATENTDYN_SEED"); env != nullptr && *env) {
    const std::string_view s(env);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ValidationError("LATENTDYN_SEED is not a non-negative integer: " +
                            std::string(s));
    }
    config.seed = v;
  }
}

}  // namespace latentdyn::app
