#include "latentdyn/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <string>
#include <string_view>

#include "latentdyn/dynamics/dynamics.hpp"
#include "latentdyn/errors.hpp"

namespace latentdyn::data {
namespace {

constexpr std::string_view csv_header = "traj,t,theta,x1,x2";

void check_meta(const DatasetMeta& m) {
  if (m.trajectories < 1 || m.steps < 1) {
    throw ValidationError("dataset needs N >= 1 and T >= 1");
  }
  if (!(m.dt > 0.0) || !std::isfinite(m.dt)) {
    throw ValidationError("dataset needs dt > 0");
  }
}

TrajectoryDataset integrate(DatasetMeta meta, std::span<const float> initial) {
  check_meta(meta);
  TrajectoryDataset ds;
  ds.meta = meta;
  const std::size_t n = meta.trajectories, steps = meta.steps;
  const auto dt = static_cast<float>(meta.dt);
  ds.thetas.resize(n * steps);
  ds.points.resize(n * steps * 2);
  for (std::size_t i = 0; i < n; ++i) {
    float theta = initial[i];
    for (std::size_t t = 0; t < steps; ++t) {
      if (t > 0) theta = dyn::euler_step(theta, dt);
      const std::size_t k = i * steps + t;
      ds.thetas[k] = theta;
      ds.points[2 * k] = static_cast<float>(std::cos(double(theta)));
      ds.points[2 * k + 1] = static_cast<float>(std::sin(double(theta)));
    }
  }
  return ds;
}

std::string format_float(float v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
bool parse_field(std::string_view s, T& out) {
  const char* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

}  // namespace

std::pair<std::size_t, std::size_t> TrajectoryDataset::pair_indices(
    std::size_t k) const {
  const std::size_t per = meta.steps - 1;
  const std::size_t i = k / per, t = k % per;
  return {i * meta.steps + t, i * meta.steps + t + 1};
}

void TrajectoryDataset::validate() const {
  check_meta(meta);
  if (thetas.size() != point_count() || points.size() != 2 * point_count()) {
    throw ValidationError("dataset arrays do not match N x T = " +
                          std::to_string(point_count()));
  }
  for (std::size_t k = 0; k < point_count(); ++k) {
    const double x1 = points[2 * k], x2 = points[2 * k + 1];
    const double th = thetas[k];
    const std::string where = "trajectory " + std::to_string(k / meta.steps) +
                              ", t = " + std::to_string(k % meta.steps);
    if (!std::isfinite(x1) || !std::isfinite(x2) || !std::isfinite(th)) {
      throw ValidationError("non-finite value at " + where);
    }
    if (std::abs(std::hypot(x1, x2) - 1.0) > 1e-6) {
      throw ValidationError("point off the unit circle at " + where +
                            " (|x| = " + std::to_string(std::hypot(x1, x2)) +
                            ")");
    }
    if (std::abs(x1 - std::cos(th)) > 1e-5 || std::abs(x2 - std::sin(th)) > 1e-5) {
      throw ValidationError("point disagrees with its angle at " + where);
    }
  }
}

const std::array<LabeledPoint, 8>& labeled_points() {
  constexpr double pi = std::numbers::pi;
  static const std::array<LabeledPoint, 8> points{{{'A', 0.0},
                                                   {'B', pi / 6.0},
                                                   {'C', pi / 5.0},
                                                   {'D', pi / 4.0},
                                                   {'E', 3.0 * pi / 4.0},
                                                   {'F', pi},
                                                   {'G', 5.0 * pi / 4.0},
                                                   {'H', 4.0 * pi / 3.0}}};
  return points;
}

double labeled_angle(char tag) {
  for (const LabeledPoint& p : labeled_points()) {
    if (p.tag == tag) return p.theta;
  }
  throw ValidationError(std::string("unknown tag '") + tag + "', expected A..H");
}

TrajectoryDataset generate(std::size_t trajectories, std::size_t steps,
                           double dt, std::uint64_t seed) {
  check_meta({trajectories, steps, dt, seed});
  Rng rng = make_rng(seed, "data");
  std::uniform_real_distribution<double> u(0.0, dyn::two_pi);
  // Largest float strictly below 2 pi; float(2 pi) itself rounds up past it.
  const float below_two_pi = std::nextafter(static_cast<float>(dyn::two_pi), 0.0f);
  std::vector<float> initial(trajectories);
  for (float& th : initial) {
    th = static_cast<float>(u(rng));
    if (double(th) >= dyn::two_pi) th = below_two_pi;
  }
  return integrate({trajectories, steps, dt, seed}, initial);
}

TrajectoryDataset generate_from(std::span<const float> initial_angles,
                                std::size_t steps, double dt,
                                std::uint64_t seed) {
  return integrate({initial_angles.size(), steps, dt, seed}, initial_angles);
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  return p.replace_extension(".json");
}

void save_dataset(const TrajectoryDataset& ds, const std::filesystem::path& csv) {
  ds.validate();
  {
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + csv.string());
    out << csv_header << '\n';
    for (std::size_t i = 0; i < ds.meta.trajectories; ++i) {
      for (std::size_t t = 0; t < ds.meta.steps; ++t) {
        const std::size_t k = i * ds.meta.steps + t;
        out << i << ',' << t << ',' << format_float(ds.thetas[k]) << ','
            << format_float(ds.points[2 * k]) << ','
            << format_float(ds.points[2 * k + 1]) << '\n';
      }
    }
    if (!out) throw ValidationError("write failed for " + csv.string());
  }
  nlohmann::ordered_json meta;
  meta["N"] = ds.meta.trajectories;
  meta["T"] = ds.meta.steps;
  meta["dt"] = ds.meta.dt;
  meta["seed"] = ds.meta.seed;
  meta["format_version"] = dataset_format_version;
  std::ofstream side(sidecar_path(csv), std::ios::binary);
  if (!side) throw ValidationError("cannot write " + sidecar_path(csv).string());
  side << meta.dump(2) << '\n';
}

TrajectoryDataset load_dataset(const std::filesystem::path& csv) {
  const auto side_path = sidecar_path(csv);
  std::ifstream side(side_path);
  if (!side) throw ValidationError("cannot read " + side_path.string());

  TrajectoryDataset ds;
  try {
    const auto meta = nlohmann::json::parse(side);
    for (const auto& [key, _] : meta.items()) {
      if (key != "N" && key != "T" && key != "dt" && key != "seed" &&
          key != "format_version") {
        throw ParseError(side_path.string() + ": unknown key '" + key + "'");
      }
    }
    if (meta.at("format_version").get<int>() != dataset_format_version) {
      throw ValidationError(side_path.string() + ": unsupported format_version");
    }
    ds.meta.trajectories = meta.at("N").get<std::size_t>();
    ds.meta.steps = meta.at("T").get<std::size_t>();
    ds.meta.dt = meta.at("dt").get<double>();
    ds.meta.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(side_path.string() + ": " + e.what());
  }
  check_meta(ds.meta);

  std::ifstream in(csv, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + csv.string());
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || line != csv_header) {
    throw ParseError(csv.string() + ":1: expected header '" +
                     std::string(csv_header) + "'");
  }
  line_no = 1;

  const std::size_t expected = ds.point_count();
  ds.thetas.reserve(expected);
  ds.points.reserve(2 * expected);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = csv.string() + ":" + std::to_string(line_no);
    const std::string last_good =
        " (last good line " + std::to_string(line_no - 1) + ")";
    std::array<std::string_view, 5> fields;
    std::size_t nf = 0, start = 0;
    const std::string_view sv(line);
    for (std::size_t pos = 0; pos <= sv.size(); ++pos) {
      if (pos == sv.size() || sv[pos] == ',') {
        if (nf < fields.size()) fields[nf] = sv.substr(start, pos - start);
        ++nf;
        start = pos + 1;
      }
    }
    if (nf != 5) {
      throw ParseError(where + ": expected 5 fields, found " +
                       std::to_string(nf) + last_good);
    }
    std::size_t traj = 0, t = 0;
    float theta = 0, x1 = 0, x2 = 0;
    if (!parse_field(fields[0], traj) || !parse_field(fields[1], t) ||
        !parse_field(fields[2], theta) || !parse_field(fields[3], x1) ||
        !parse_field(fields[4], x2)) {
      throw ParseError(where + ": malformed number" + last_good);
    }
    if (rows >= expected) {
      throw ValidationError(where + ": more rows than N x T = " +
                            std::to_string(expected));
    }
    if (traj != rows / ds.meta.steps || t != rows % ds.meta.steps) {
      throw ValidationError(where + ": rows must be ordered by (traj, t)");
    }
    ds.thetas.push_back(theta);
    ds.points.push_back(x1);
    ds.points.push_back(x2);
    ++rows;
  }
  if (rows != expected) {
    throw ParseError(csv.string() + ": unexpected end of data after " +
                     std::to_string(rows) + " of " + std::to_string(expected) +
                     " rows (last good line " + std::to_string(line_no) + ")");
  }
  ds.validate();
  return ds;
}

std::vector<Batch> minibatches(std::size_t stream_size, std::size_t batch_size,
                               Rng& rng) {
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  std::vector<std::size_t> order(stream_size);
  for (std::size_t i = 0; i < stream_size; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < stream_size; start += batch_size) {
    const std::size_t end = std::min(stream_size, start + batch_size);
    batches.emplace_back(order.begin() + std::ptrdiff_t(start),
                         order.begin() + std::ptrdiff_t(end));
  }
  return batches;
}

std::vector<Batch> minibatches(const TrajectoryDataset& ds,
                               std::size_t batch_size, Stream stream, Rng& rng) {
  return minibatches(stream == Stream::points ? ds.point_count() : ds.pair_count(),
                     batch_size, rng);
}

ad::Tensor gather_points(const TrajectoryDataset& ds,
                         std::span<const std::size_t> indices) {
  std::vector<float> v(indices.size() * 2);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    v[2 * b] = ds.points.at(2 * indices[b]);
    v[2 * b + 1] = ds.points.at(2 * indices[b] + 1);
  }
  return ad::Tensor::matrix(indices.size(), 2, std::move(v));
}

PairBatch gather_pairs(const TrajectoryDataset& ds,
                       std::span<const std::size_t> pair_ids) {
  std::vector<std::size_t> cur(pair_ids.size()), nxt(pair_ids.size());
  for (std::size_t b = 0; b < pair_ids.size(); ++b) {
    if (pair_ids[b] >= ds.pair_count()) {
      throw ValidationError("pair index out of range");
    }
    std::tie(cur[b], nxt[b]) = ds.pair_indices(pair_ids[b]);
  }
  return {gather_points(ds, cur), gather_points(ds, nxt)};
}

}  // namespace latentdyn::data
