#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "funcdict/geometry.hpp"
#include "funcdict/model.hpp"

namespace funcdict {

// Write temp file + rename, so outputs are always complete or absent.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// JSON Lines, one ShapeSample per line:
// {"shape_id", "family", "points": [[x,y,z]...], "part_labels": [...],
//  "keypoints": [{"label", "xyz"}...]}
std::string dataset_to_jsonl(const std::vector<ShapeSample>& shapes);
std::vector<ShapeSample> dataset_from_jsonl(const std::string& text);
void save_dataset(const std::filesystem::path& path,
                  const std::vector<ShapeSample>& shapes);
std::vector<ShapeSample> load_dataset(const std::filesystem::path& path);

struct Checkpoint {
  ModelParams params;
  OptimizerState state;
  ConstraintMode mode = ConstraintMode::Segmentation;
  std::size_t step = 0;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string mode_to_string(ConstraintMode mode);
ConstraintMode mode_from_string(const std::string& s);

}  // namespace funcdict
