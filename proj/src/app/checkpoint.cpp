#include "latentdyn/app/checkpoint.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "latentdyn/errors.hpp"

namespace latentdyn::app {
namespace {

// Float-typed JSON: numbers are parsed straight to float32 and printed as
// the shortest decimal that reads back to the same float.
using fjson = nlohmann::basic_json<std::map, std::vector, std::string, bool,
                                   std::int64_t, std::uint64_t, float>;

constexpr std::array<const char*, 3> net_names{"encoder", "decoder", "latent"};

fjson net_json(const nn::MlpParams& p) {
  fjson j;
  j["dims"] = p.spec.dims;
  j["activation"] = "tanh";
  j["output_activation"] = "linear";
  j["weights"] = fjson::array();
  j["biases"] = fjson::array();
  for (const auto& layer : p.layers) {
    const std::size_t rows = layer.weight.shape()[0], cols = layer.weight.shape()[1];
    const auto w = layer.weight.values();
    fjson m = fjson::array();
    for (std::size_t r = 0; r < rows; ++r) {
      fjson row = fjson::array();
      for (std::size_t c = 0; c < cols; ++c) row.push_back(w[r * cols + c]);
      m.push_back(std::move(row));
    }
    j["weights"].push_back(std::move(m));
    fjson b = fjson::array();
    for (float v : layer.bias.values()) b.push_back(v);
    j["biases"].push_back(std::move(b));
  }
  return j;
}

// For a syntax error at byte `pos`, names the net, the array and the layer
// the byte falls in.
std::string locate(const std::string& text, std::size_t pos) {
  pos = std::min(pos, text.size());
  const std::string head = text.substr(0, pos);
  std::size_t net_at = std::string::npos;
  std::string net;
  for (const char* name : net_names) {
    const auto at = head.rfind(std::string("\"") + name + "\"");
    if (at != std::string::npos && (net_at == std::string::npos || at > net_at)) {
      net_at = at;
      net = name;
    }
  }
  if (net_at == std::string::npos) return "";
  std::size_t field_at = std::string::npos;
  std::string field;
  for (const char* name : {"weights", "biases"}) {
    const auto at = head.rfind(std::string("\"") + name + "\"");
    if (at != std::string::npos && at > net_at &&
        (field_at == std::string::npos || at > field_at)) {
      field_at = at;
      field = name;
    }
  }
  if (field_at == std::string::npos) return "net '" + net + "'";
  int depth = 0;
  long layer = -1;
  for (std::size_t i = text.find('[', field_at); i < pos; ++i) {
    if (text[i] == '[') {
      ++depth;
      if (depth == 2) ++layer;
    } else if (text[i] == ']') {
      --depth;
    }
  }
  return "net '" + net + "', " + field + " of layer " + std::to_string(std::max(0L, layer));
}

std::vector<float> numbers(const fjson& arr, std::size_t expected, const std::string& where) {
  if (!arr.is_array() || arr.size() != expected) {
    throw ValidationError(where + ": expected " + std::to_string(expected) + " values");
  }
  std::vector<float> out;
  out.reserve(expected);
  for (const fjson& v : arr) {
    if (!v.is_number()) throw ParseError(where + ": non-numeric entry");
    const float f = v.get<float>();
    if (!std::isfinite(f)) throw ParseError(where + ": non-finite entry");
    out.push_back(f);
  }
  return out;
}

nn::MlpParams parse_net(const fjson& j, const std::string& name,
                        const std::optional<nn::MlpSpec>& expected) {
  const std::string at = "checkpoint: net '" + name + "'";
  if (!j.is_object()) throw ValidationError(at + ": expected an object");
  for (const auto& [k, _] : j.items()) {
    if (k != "dims" && k != "activation" && k != "output_activation" &&
        k != "weights" && k != "biases") {
      throw ValidationError(at + ": unknown key '" + k + "'");
    }
  }
  nn::MlpParams p;
  try {
    p.spec.dims = j.at("dims").get<std::vector<std::size_t>>();
    if (j.at("activation").get<std::string>() != "tanh") {
      throw ValidationError(at + ": only tanh activation is supported");
    }
    if (j.contains("output_activation") &&
        j.at("output_activation").get<std::string>() != "linear") {
      throw ValidationError(at + ": only a linear output layer is supported");
    }
  } catch (const fjson::exception& e) {
    throw ParseError(at + ": " + e.what());
  }
  p.spec.validate();
  if (expected && expected->dims != p.spec.dims) {
    auto str = [](const std::vector<std::size_t>& d) {
      std::string s = "[";
      for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i]);
      return s + "]";
    };
    throw ValidationError(at + ": dims " + str(p.spec.dims) + " do not match expected " +
                          str(expected->dims));
  }
  const fjson& ws = j.at("weights");
  const fjson& bs = j.at("biases");
  const std::size_t layers = p.spec.layer_count();
  if (!ws.is_array() || !bs.is_array() || ws.size() != layers || bs.size() != layers) {
    throw ValidationError(at + ": expected " + std::to_string(layers) +
                          " weight matrices and bias vectors");
  }
  for (std::size_t k = 0; k < layers; ++k) {
    const std::size_t rows = p.spec.dims[k + 1], cols = p.spec.dims[k];
    const std::string lw = at + ", weights of layer " + std::to_string(k);
    if (!ws[k].is_array() || ws[k].size() != rows) {
      throw ValidationError(lw + ": expected " + std::to_string(rows) + " rows");
    }
    std::vector<float> w;
    w.reserve(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto row = numbers(ws[k][r], cols, lw);
      w.insert(w.end(), row.begin(), row.end());
    }
    auto b = numbers(bs[k], rows, at + ", biases of layer " + std::to_string(k));
    p.layers.push_back({ad::Tensor::matrix(rows, cols, std::move(w)),
                        ad::Tensor::vector(std::move(b))});
  }
  p.validate();
  return p;
}

}  // namespace

std::string checkpoint_json(const Checkpoint& c) {
  fjson j;
  j["meta"] = {{"format_version", c.meta.format_version},
               {"seed", c.meta.seed},
               {"phase", c.meta.phase},
               {"epoch", c.meta.epoch},
               {"config_digest", c.meta.config_digest},
               {"label", c.meta.label}};
  j["nets"]["encoder"] = net_json(c.model.encoder);
  j["nets"]["decoder"] = net_json(c.model.decoder);
  j["nets"]["latent"] = net_json(c.model.latent);
  return j.dump() + "\n";
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << checkpoint_json(c);
  if (!out) throw ValidationError("write failed for " + path.string());
}

Checkpoint parse_checkpoint(const std::string& text,
                            const std::optional<nn::ModelSpecs>& expected) {
  fjson j;
  try {
    j = fjson::parse(text);
  } catch (const fjson::parse_error& e) {
    const std::string where = locate(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("checkpoint: " + (where.empty() ? "" : where + ": ") +
                     "malformed content at byte " + std::to_string(e.byte));
  }
  Checkpoint c;
  try {
    if (!j.is_object() || !j.contains("meta") || !j.contains("nets")) {
      throw ValidationError("checkpoint: expected top-level 'meta' and 'nets'");
    }
    const fjson& m = j.at("meta");
    c.meta.format_version = m.at("format_version").get<int>();
    if (c.meta.format_version != checkpoint_format_version) {
      throw ValidationError("checkpoint: unsupported format_version " +
                            std::to_string(c.meta.format_version) + " (expected " +
                            std::to_string(checkpoint_format_version) + ")");
    }
    c.meta.seed = m.at("seed").get<std::uint64_t>();
    c.meta.phase = m.at("phase").get<std::size_t>();
    c.meta.epoch = m.at("epoch").get<std::size_t>();
    c.meta.config_digest = m.at("config_digest").get<std::string>();
    if (m.contains("label")) c.meta.label = m.at("label").get<std::string>();
  } catch (const fjson::exception& e) {
    throw ParseError(std::string("checkpoint: meta: ") + e.what());
  }
  const fjson& nets = j.at("nets");
  for (const char* name : net_names) {
    if (!nets.contains(name)) {
      throw ValidationError(std::string("checkpoint: missing net '") + name + "'");
    }
  }
  c.model.encoder = parse_net(nets.at("encoder"), "encoder",
                              expected ? std::optional(expected->encoder) : std::nullopt);
  c.model.decoder = parse_net(nets.at("decoder"), "decoder",
                              expected ? std::optional(expected->decoder) : std::nullopt);
  c.model.latent = parse_net(nets.at("latent"), "latent",
                             expected ? std::optional(expected->latent) : std::nullopt);
  c.model.validate();
  return c;
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<nn::ModelSpecs>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("checkpoint file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str(), expected);
}

}  // namespace latentdyn::app
