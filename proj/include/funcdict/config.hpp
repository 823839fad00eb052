#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace funcdict {

// Flat TOML document: `key = value` lines with strings, numbers, booleans,
// and numeric arrays. Unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;

  // gen-data
  std::string preset = "table4";
  std::size_t count = 100;
  std::size_t n_points = 512;
  double jitter = 0.15;
  double swap_fraction = 0.0;
  std::string dataset = "data.jsonl";

  // train
  std::string mode = "seg";
  std::size_t k = 10;
  double gamma = 1.0;
  double eta = 1e-3;
  std::size_t batch_size = 8;
  std::size_t epochs = 20;
  double sigma = 0.001;
  double noise_prob = 0.0;
  double partial_fraction = 0.0;
  bool siamese = false;
  double train_fraction = 0.8;
  std::string out_dir = "run";
  std::string resume;
  std::size_t num_bases = 10;
  std::size_t knn = 8;

  // eval
  std::string checkpoint;
  std::string metrics = "auto";  // or comma list: miou,recall,confusion,pck,residual
  std::vector<double> pck_thresholds = {0.01, 0.02, 0.05, 0.1, 0.2};
  double recall_threshold = 0.5;
  bool oracle_dictionary = false;
};

RunConfig parse_config(const std::string& toml_text);
RunConfig load_config(const std::string& path);

// `--set key=value` override on top of an existing config.
void apply_override(RunConfig& cfg, const std::string& key_equals_value);

// Every key, explicitly, in TOML form; re-parseable snapshot of a run.
std::string config_to_toml(const RunConfig& cfg);

}  // namespace funcdict
