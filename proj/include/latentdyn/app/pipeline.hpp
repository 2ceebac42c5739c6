#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

#include "latentdyn/app/checkpoint.hpp"
#include "latentdyn/app/config.hpp"
#include "latentdyn/theory/report.hpp"

namespace latentdyn::app {

/// Exclusive ownership of an output directory for the lifetime of the
/// object: creates the directory and a `.lock` file, fails if the lock
/// already exists, removes it on destruction.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path file_;
};

/// DIR/dataset.csv and DIR/dataset.json.
std::filesystem::path dataset_file(const std::filesystem::path& dir);
/// DIR/checkpoint_<label>.json.
std::filesystem::path checkpoint_file(const std::filesystem::path& dir,
                                      const std::string& label);

void run_gen(const RunConfig& config, const std::filesystem::path& out);

/// Writes config.json, loss_log.csv and one checkpoint per phase plus
/// checkpoint_final.json. Logs one line per epoch to `log`. On a numerical
/// failure checkpoint_last_good.json is written before the error propagates.
void run_train(const RunConfig& config, const std::filesystem::path& data_dir,
               const std::filesystem::path& out, std::ostream& log);

/// With a config, the checkpoint's digest must match unless `force`.
void run_eval(const std::filesystem::path& checkpoint,
              const std::filesystem::path& out,
              const std::optional<RunConfig>& config, bool force);

/// Writes theory_report.json; returns true when no check failed.
bool run_theory(theory::Suite suite, const std::filesystem::path& out,
                const RunConfig& config,
                const std::optional<std::filesystem::path>& checkpoint);

/// gen, train, eval and the full theory suite under OUT/{data,train,eval,
/// theory}. Returns the theory verdict.
bool run_all(const RunConfig& config, const std::filesystem::path& out,
             std::ostream& log);

}  // namespace latentdyn::app
