#include "finer/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "finer/csv.hpp"
#include "json.hpp"

namespace finer {

namespace {

template <class Range, class Fmt>
void append_list(std::string& out, const Range& values, Fmt fmt) {
  out += '[';
  bool first = true;
  for (const auto& v : values) {
    if (!first) out += ',';
    out += fmt(v);
    first = false;
  }
  out += ']';
}

std::string count_str(std::size_t v) { return std::to_string(v); }

}  // namespace

std::string checkpoint_json(const NetworkState& net) {
  net.validate();
  std::string out = "{\"format_version\":" + std::to_string(kCheckpointFormatVersion) + ",\"layer_dims\":";
  append_list(out, net.layer_dims, count_str);
  const auto& a = net.activation;
  out += ",\"activation\":{\"backbone\":\"" + std::string(to_string(a.backbone)) + "\",\"finer\":" +
         (a.finer ? "true" : "false") + ",\"omega0\":" + format_double(a.omega0) + ",\"s0\":" + format_double(a.s0) +
         ",\"omega_f\":" + format_double(a.omega_f) + "}";
  out += ",\"k_bias\":" + format_double(net.k_bias) + ",\"stage_widths\":";
  append_list(out, net.stage_widths, count_str);
  out += ",\"weights\":[";
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    if (l) out += ',';
    append_list(out, net.weights[l].values(), format_double);
  }
  out += "],\"biases\":[";
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    if (l) out += ',';
    append_list(out, net.biases[l], format_double);
  }
  out += "]}\n";
  return out;
}

NetworkState parse_checkpoint(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion)
      throw std::invalid_argument("checkpoint: unsupported format_version " + std::to_string(version));

    NetworkState net;
    net.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    const auto& a = j.at("activation");
    net.activation.backbone = parse_backbone(a.at("backbone").get<std::string>());
    net.activation.finer = a.at("finer").get<bool>();
    net.activation.omega0 = a.at("omega0").get<double>();
    net.activation.s0 = a.at("s0").get<double>();
    net.activation.omega_f = a.at("omega_f").get<double>();
    net.k_bias = j.at("k_bias").get<double>();
    net.stage_widths = j.at("stage_widths").get<std::vector<std::size_t>>();

    const auto weights = j.at("weights").get<std::vector<Vector>>();
    const auto biases = j.at("biases").get<std::vector<Vector>>();
    if (net.layer_dims.size() < 2 || weights.size() + 1 != net.layer_dims.size())
      throw std::invalid_argument("checkpoint: weights do not match layer_dims");
    for (std::size_t l = 0; l < weights.size(); ++l) {
      const std::size_t rows = net.layer_dims[l + 1], cols = net.layer_dims[l];
      if (weights[l].size() != rows * cols)
        throw std::invalid_argument("checkpoint: layer " + std::to_string(l + 1) + " weight count mismatch");
      net.weights.emplace_back(rows, cols, weights[l]);
    }
    net.biases = biases;
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const NetworkState& net, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << checkpoint_json(net);
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

NetworkState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace finer
