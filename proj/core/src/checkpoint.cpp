#include "hacklab/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hacklab {

namespace {
constexpr const char* kFormat = "hacklab-checkpoint";
constexpr int kVersion = 1;
}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["step"] = ckpt.step;
  j["meta"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : ckpt.meta) j["meta"][k] = v;
  auto layers = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ckpt.params.layout().size(); ++i) {
    const auto seg = ckpt.params.segment(i);
    layers.push_back({{"name", ckpt.params.layout()[i].name},
                      {"values", std::vector<double>(seg.begin(), seg.end())}});
  }
  j["layers"] = std::move(layers);
  return j.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("checkpoint: not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat)
      throw std::invalid_argument("checkpoint: unexpected format tag");
    if (j.at("version").get<int>() != kVersion)
      throw std::invalid_argument("checkpoint: unsupported version");
    Checkpoint out;
    out.step = j.at("step").get<std::int64_t>();
    if (j.contains("meta"))
      for (const auto& [k, v] : j["meta"].items()) out.meta[k] = v.get<std::string>();
    std::vector<Segment> segments;
    std::vector<double> values;
    for (const auto& layer : j.at("layers")) {
      const auto vals = layer.at("values").get<std::vector<double>>();
      segments.push_back({layer.at("name").get<std::string>(), values.size(), vals.size()});
      values.insert(values.end(), vals.begin(), vals.end());
    }
    out.params = ParamVector(make_layout(std::move(segments)), std::move(values));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  out << checkpoint_to_json(ckpt) << '\n';
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace hacklab
