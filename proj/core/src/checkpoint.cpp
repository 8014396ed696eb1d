#include "blockpred/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "blockpred/errors.hpp"

namespace blockpred {
namespace {

constexpr std::array<char, 8> kMagic{'B', 'P', 'C', 'K', 'P', 'T', '\0', '\1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw ParseError("truncated checkpoint");
  return v;
}

}  // namespace

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"input_dim", cfg.input_dim},     {"hidden_dim", cfg.hidden_dim},
          {"num_layers", cfg.num_layers},   {"num_classes", cfg.num_classes},
          {"seq_len", cfg.seq_len}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  try {
    cfg.input_dim = j.at("input_dim").get<int>();
    cfg.hidden_dim = j.at("hidden_dim").get<int>();
    cfg.num_layers = j.at("num_layers").get<int>();
    cfg.num_classes = j.at("num_classes").get<int>();
    cfg.seq_len = j.at("seq_len").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad model config: ") + e.what());
  }
  return cfg;
}

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  const auto layout = parameter_layout(ckpt.model);
  const auto count = parameter_count(ckpt.model);
  if (static_cast<std::size_t>(ckpt.parameters.size()) != count) {
    throw ShapeError("checkpoint parameter count does not match its model config");
  }
  if (ckpt.scalar != "float32" && ckpt.scalar != "float64") {
    throw ConfigError("unsupported checkpoint scalar '" + ckpt.scalar + "'");
  }
  nlohmann::ordered_json header;
  header["format_version"] = kCheckpointVersion;
  header["endianness"] = "little";
  header["scalar"] = ckpt.scalar;
  header["storage_order"] = "column-major";
  header["model_config"] = to_json(ckpt.model);
  auto table = nlohmann::ordered_json::array();
  for (const auto& p : layout) {
    table.push_back({{"name", p.name}, {"rows", p.rows}, {"cols", p.cols}, {"offset", p.offset}});
  }
  header["parameters"] = std::move(table);
  header["metadata"] = ckpt.metadata;
  const std::string text = header.dump();

  out.write(kMagic.data(), kMagic.size());
  write_pod<std::uint32_t>(out, kCheckpointVersion);
  write_pod<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (Eigen::Index i = 0; i < ckpt.parameters.size(); ++i) {
    if (ckpt.scalar == "float32") {
      write_pod<float>(out, static_cast<float>(ckpt.parameters[i]));
    } else {
      write_pod<double>(out, ckpt.parameters[i]);
    }
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  save_checkpoint(ckpt, out);
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ParseError("not a blockpred checkpoint");
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto len = read_pod<std::uint64_t>(in);
  if (len > (1u << 26)) throw ParseError("checkpoint header too large");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ParseError("truncated checkpoint header");

  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(text);
    if (header.at("endianness").get<std::string>() != "little") {
      throw ParseError("unsupported checkpoint endianness");
    }
    ckpt.scalar = header.at("scalar").get<std::string>();
    ckpt.model = model_config_from_json(header.at("model_config"));
    ckpt.metadata = header.value("metadata", nlohmann::json::object());
    const auto layout = parameter_layout(ckpt.model);
    const auto& table = header.at("parameters");
    if (table.size() != layout.size()) throw ParseError("checkpoint parameter table mismatch");
    for (std::size_t i = 0; i < layout.size(); ++i) {
      if (table[i].at("name").get<std::string>() != layout[i].name ||
          table[i].at("rows").get<int>() != layout[i].rows ||
          table[i].at("cols").get<int>() != layout[i].cols ||
          table[i].at("offset").get<std::size_t>() != layout[i].offset) {
        throw ParseError("checkpoint parameter table mismatch at " + layout[i].name);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what());
  }
  ckpt.model.validate();
  const auto count = static_cast<Eigen::Index>(parameter_count(ckpt.model));
  ckpt.parameters.resize(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    if (ckpt.scalar == "float32") {
      ckpt.parameters[i] = read_pod<float>(in);
    } else if (ckpt.scalar == "float64") {
      ckpt.parameters[i] = read_pod<double>(in);
    } else {
      throw ParseError("unsupported checkpoint scalar '" + ckpt.scalar + "'");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes after checkpoint payload");
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  try {
    return load_checkpoint(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

GruClassifier<double> inference_model(const Checkpoint& ckpt) {
  GruClassifier<double> model(ckpt.model);
  if (model.parameters().size() != ckpt.parameters.size()) {
    throw ShapeError("checkpoint parameter count does not match its model config");
  }
  model.parameters() = ckpt.parameters;
  return model;
}

}  // namespace blockpred
