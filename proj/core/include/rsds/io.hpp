#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "rsds/rsds.hpp"

namespace rsds {

// Throws ValidationError naming the path when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// 17 significant digits, round-trips every double.
std::string format_number(double v);

struct Checkpoint {
  RsdsModel model;
  // Set for Euclidean baselines: the manifold the data lives on. The model
  // itself is then defined on the ambient Euclidean space.
  std::optional<ManifoldSpec> data_spec;
  std::string metadata_json = "{}";  // free-form JSON object
};

inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rsds
