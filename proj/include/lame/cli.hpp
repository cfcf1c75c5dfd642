#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lame/config.hpp"

namespace lame {

struct RunPaths {
  std::string corpus;
  std::string format = "hoc_style";
  std::string descriptions;
  std::string vocab;
  std::string checkpoint;
  std::string output_dir;

  friend bool operator==(const RunPaths&, const RunPaths&) = default;
};

// Everything a command reads from `--config`. Flags override individual fields.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  RunPaths paths;
  int vocab_target_size = 2000;
  int vocab_min_frequency = 2;
  // Unset: the corpus format's default ratio.
  std::optional<std::array<double, 3>> split_ratio;
  std::uint64_t split_seed = 0;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

// Exit status: 0 success, 1 input or configuration error, 2 internal error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lame
