#pragma once

// Single-file checkpoints.
//
// Layout (all integers little-endian):
//   bytes 0..7    magic "LAMECKPT"
//   bytes 8..11   uint32 format version (1)
//   bytes 12..19  uint64 header length H
//   next H bytes  UTF-8 JSON header
//   remainder     parameter payload, IEEE-754 binary64 little-endian
//
// The header holds "model_config", "vocab_hash" (16 hex digits), "labels"
// [{id, name, description}], "encoder_frozen", "metadata", and "parameters":
// [{name, shape: [rows, cols], offset}] where offset counts doubles from the
// start of the payload. Row-major element order.

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "lame/data.hpp"
#include "lame/model.hpp"

namespace lame {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  LameModel model;
  std::vector<LabelDef> labels;
  std::uint64_t vocab_hash = 0;
  nlohmann::json metadata;
};

void save_checkpoint(const std::filesystem::path& path, const LameModel& model, const std::vector<LabelDef>& labels,
                     std::uint64_t vocab_hash, const nlohmann::json& metadata = nlohmann::json::object());

// Throws InputError for unreadable or malformed files and CompatibilityError
// when a parameter is missing, unexpected or has the wrong shape.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws CompatibilityError unless the checkpoint was trained with this vocabulary.
void require_vocab(const Checkpoint& checkpoint, std::uint64_t vocab_hash);

// FNV-1a over the file's bytes.
std::uint64_t file_hash(const std::filesystem::path& path);

}  // namespace lame
