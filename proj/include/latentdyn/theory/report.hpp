#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "latentdyn/circle_maps.hpp"
#include "latentdyn/eval/evaluation.hpp"

namespace latentdyn::theory {

enum class Status { pass, fail, inconclusive, expected_fail };

std::string_view status_name(Status s);

/// A "sup_defect" check passes when value <= tolerance, a "bound" check
/// when value >= tolerance.
struct CheckResult {
  std::string name;
  std::string measure = "sup_defect";
  double value = 0.0;
  double tolerance = 0.0;
  Status status = Status::fail;
  std::vector<std::pair<std::string, double>> details;
};

CheckResult defect_check(std::string name, double value, double tolerance);
CheckResult bound_check(std::string name, double value, double tolerance);

enum class Suite { charts, conjugacy, borsuk_ulam, reach, all };

Suite parse_suite(std::string_view name);
std::string_view suite_name(Suite s);

struct TheoryConfig {
  double horizon = 10.0;
  std::size_t substeps = 1000;
  std::size_t iterations = 50;
  double dt = 0.04;
  std::size_t base_points = 360;
  std::size_t time_samples = 201;
  double small_time_horizon = 5.0;
  std::size_t chart_samples = 10000;
  std::uint64_t seed = 0;
  eval::EvalOptions eval;
};

/// Runs every check of the suite. `trained` adds the checks that need a
/// learned encoder/decoder (Borsuk-Ulam on the trained encoder, reach bound
/// on the trained round trip).
std::vector<CheckResult> run_suite(Suite suite, const TheoryConfig& config,
                                   const CircleMaps* trained = nullptr);

bool any_failed(const std::vector<CheckResult>& checks);

/// theory_report.json: {"checks": [{name, sup_defect|bound, tolerance,
/// status, ...details}], "meta": ...}.
void write_report(const std::vector<CheckResult>& checks,
                  const std::filesystem::path& path,
                  const std::string& meta_json = "{}");

/// A continuous encoder that follows the section except on the last `width`
/// radians before the cut, where it runs linearly back to 0, paired with the
/// covering map as decoder and sin(2 phi) as field.
CircleMaps smoothed_chart_maps(double width = 0.02);

}  // namespace latentdyn::theory
