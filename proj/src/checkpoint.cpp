#include "lame/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "lame/errors.hpp"
#include "lame/hash.hpp"

namespace lame {

namespace {

constexpr char kMagic[8] = {'L', 'A', 'M', 'E', 'C', 'K', 'P', 'T'};

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const std::string& in, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const LameModel& model, const std::vector<LabelDef>& labels,
                     std::uint64_t vocab_hash, const nlohmann::json& metadata) {
  nlohmann::json header;
  header["format"] = "lame-checkpoint";
  header["model_config"] = model.config();
  header["vocab_hash"] = hex_digest(vocab_hash);
  header["encoder_frozen"] = model.encoder_frozen();
  header["metadata"] = metadata;
  nlohmann::json label_list = nlohmann::json::array();
  for (const LabelDef& l : labels) label_list.push_back({{"id", l.id}, {"name", l.name}, {"description", l.description}});
  header["labels"] = label_list;

  std::string payload;
  nlohmann::json index = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const ConstParameterRef& ref : model.parameters()) {
    const Matrix& v = ref.param->value;
    index.push_back({{"name", ref.param->name}, {"shape", {v.rows(), v.cols()}}, {"offset", offset}});
    for (Index i = 0; i < v.size(); ++i) put_le(payload, std::bit_cast<std::uint64_t>(v.data()[i]));
    offset += static_cast<std::uint64_t>(v.size());
  }
  header["parameters"] = index;

  const std::string header_text = header.dump();
  std::string bytes(kMagic, sizeof kMagic);
  put_le(bytes, kCheckpointVersion);
  put_le(bytes, static_cast<std::uint64_t>(header_text.size()));
  bytes += header_text;
  bytes += payload;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const std::string name = path.string();
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw InputError(name + ": not a checkpoint file");
  }
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kCheckpointVersion) {
    throw CompatibilityError(name + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(bytes, 12);
  if (header_len > bytes.size() - 20) throw InputError(name + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(20, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(name + ": malformed header: " + e.what());
  }
  const std::size_t payload_begin = 20 + header_len;
  const std::size_t payload_doubles = (bytes.size() - payload_begin) / 8;

  try {
    ModelConfig config = header.at("model_config").get<ModelConfig>();
    Checkpoint ckpt{LameModel(config, 0), {}, 0, header.value("metadata", nlohmann::json::object())};
    ckpt.vocab_hash = std::stoull(header.at("vocab_hash").get<std::string>(), nullptr, 16);
    for (const auto& l : header.at("labels")) {
      ckpt.labels.push_back({l.at("id").get<std::string>(), l.at("name").get<std::string>(),
                             l.at("description").get<std::string>()});
    }
    if (ckpt.labels.size() != static_cast<std::size_t>(config.num_labels)) {
      throw CompatibilityError(name + ": " + std::to_string(ckpt.labels.size()) + " labels stored for a model with " +
                               std::to_string(config.num_labels));
    }
    if (header.value("encoder_frozen", false)) ckpt.model.freeze_encoder();

    std::map<std::string, nlohmann::json> stored;
    for (const auto& entry : header.at("parameters")) stored.emplace(entry.at("name").get<std::string>(), entry);
    std::size_t matched = 0;
    for (ParameterRef& ref : ckpt.model.parameters()) {
      Matrix& v = ref.param->value;
      auto it = stored.find(ref.param->name);
      if (it == stored.end()) throw CompatibilityError(name + ": missing parameter '" + ref.param->name + "'");
      const auto shape = it->second.at("shape").get<std::vector<Index>>();
      if (shape.size() != 2 || shape[0] != v.rows() || shape[1] != v.cols()) {
        throw CompatibilityError(name + ": parameter '" + ref.param->name + "' has shape " + it->second.at("shape").dump() +
                                 ", expected " + shape_string(v.rows(), v.cols()));
      }
      const auto offset = it->second.at("offset").get<std::uint64_t>();
      if (offset + static_cast<std::uint64_t>(v.size()) > payload_doubles) {
        throw InputError(name + ": payload too short for parameter '" + ref.param->name + "'");
      }
      for (Index i = 0; i < v.size(); ++i) {
        v.data()[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, payload_begin + 8 * (offset + static_cast<std::uint64_t>(i))));
      }
      ++matched;
    }
    if (matched != stored.size()) {
      throw CompatibilityError(name + ": checkpoint holds " + std::to_string(stored.size()) +
                               " parameters, model expects " + std::to_string(matched));
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(name + ": malformed header: " + e.what());
  } catch (const ConfigError& e) {
    throw CompatibilityError(name + ": invalid model config: " + e.what());
  }
}

void require_vocab(const Checkpoint& checkpoint, std::uint64_t vocab_hash) {
  if (checkpoint.vocab_hash != vocab_hash) {
    throw CompatibilityError("vocabulary hash " + hex_digest(vocab_hash) + " does not match checkpoint's " +
                             hex_digest(checkpoint.vocab_hash));
  }
}

std::uint64_t file_hash(const std::filesystem::path& path) { return fnv1a(read_file(path)); }

}  // namespace lame
