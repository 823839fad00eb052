#pragma once

#include <cstddef>
#include <vector>

#include "funcdict/config.hpp"
#include "funcdict/rng.hpp"

namespace funcdict {

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Deterministic shuffled split; identical for train and eval given the seed.
SplitIndices split_dataset(std::size_t n, double train_fraction, RngStream rng);

// Throwing entry points (tests call these directly).
void run_gen_data(const RunConfig& cfg);
void run_train(const RunConfig& cfg);
void run_eval(const RunConfig& cfg);

// CLI wrappers: 0 success, 2 config/input error, 3 numeric failure.
int cmd_gen_data(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);

}  // namespace funcdict
