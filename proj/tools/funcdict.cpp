#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "funcdict/config.hpp"
#include "funcdict/driver.hpp"
#include "funcdict/errors.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  bool print_config = false;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "TOML config file");
  sub->add_option("--set", args.overrides, "key=value override, repeatable");
  sub->add_flag("--print-config", args.print_config,
                "print the effective config and exit");
}

// Returns 0 if the config printed (nothing left to do), 2 on config errors,
// -1 to proceed with the resolved config.
int resolve(const CommonArgs& args, funcdict::RunConfig& cfg) {
  try {
    if (!args.config_path.empty()) cfg = funcdict::load_config(args.config_path);
    for (const std::string& kv : args.overrides) funcdict::apply_override(cfg, kv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (args.print_config) {
    std::cout << funcdict::config_to_toml(cfg);
    return 0;
  }
  return -1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep functional dictionary learning on synthetic point clouds"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args;
  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  CLI::App* train = app.add_subcommand("train", "train a dictionary network");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(gen, gen_args);
  add_common(train, train_args);
  add_common(eval, eval_args);

  CLI11_PARSE(app, argc, argv);

  funcdict::RunConfig cfg;
  if (gen->parsed()) {
    const int r = resolve(gen_args, cfg);
    return r >= 0 ? r : funcdict::cmd_gen_data(cfg);
  }
  if (train->parsed()) {
    const int r = resolve(train_args, cfg);
    return r >= 0 ? r : funcdict::cmd_train(cfg);
  }
  const int r = resolve(eval_args, cfg);
  return r >= 0 ? r : funcdict::cmd_eval(cfg);
}
