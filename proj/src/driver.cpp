#include "funcdict/driver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "funcdict/errors.hpp"
#include "funcdict/eval.hpp"
#include "funcdict/geometry.hpp"
#include "funcdict/io.hpp"
#include "funcdict/loss.hpp"
#include "funcdict/model.hpp"
#include "funcdict/solver.hpp"

namespace funcdict {

using nlohmann::json;
namespace fs = std::filesystem;

SplitIndices split_dataset(std::size_t n, double train_fraction, RngStream rng) {
  if (train_fraction <= 0.0 || train_fraction > 1.0)
    throw InvalidConfigError("train_fraction must be in (0, 1]");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n);
  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return split;
}

namespace {

std::string csv_number(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

std::vector<IndicatorOptions> build_indicator_options(
    const std::vector<ShapeSample>& shapes, const RunConfig& cfg, RngStream root) {
  std::vector<IndicatorOptions> opts(shapes.size());
  RngStream bl = root.substream("blacklist");
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    IndicatorOptions& o = opts[s];
    o.flip_prob = cfg.noise_prob;
    if (cfg.partial_fraction > 0.0) {
      const int parts = shapes[s].num_parts;
      o.part_excluded.assign(static_cast<std::size_t>(parts), 0);
      RngStream sr = bl.substream(static_cast<std::uint64_t>(shapes[s].shape_id));
      std::size_t excluded = 0;
      for (int p = 0; p < parts; ++p) {
        if (sr.next_double() < cfg.partial_fraction) {
          o.part_excluded[static_cast<std::size_t>(p)] = 1;
          ++excluded;
        }
      }
      if (excluded == static_cast<std::size_t>(parts))
        o.part_excluded[sr.next_index(static_cast<std::size_t>(parts))] = 0;
    }
  }
  return opts;
}

ProbeFunction draw_probe(const ShapeSample& shape, ConstraintMode mode,
                         const RunConfig& cfg, const IndicatorOptions& opts,
                         const Matrix* basis, RngStream& rng) {
  switch (mode) {
    case ConstraintMode::Segmentation:
      return sample_part_indicator(shape, rng, &opts);
    case ConstraintMode::Keypoint:
      return sample_keypoint_subset(shape, cfg.sigma, rng);
    case ConstraintMode::SmoothMap:
      return random_smooth_function(*basis, rng);
  }
  throw InvalidStateError("draw_probe: bad mode");
}

Matrix oracle_dictionary_for(const ShapeSample& shape, std::size_t k) {
  if (static_cast<std::size_t>(shape.num_parts) > k)
    throw InvalidConfigError("oracle dictionary needs k >= number of parts");
  Matrix a(shape.cloud.size(), k, 0.0);
  for (std::size_t i = 0; i < shape.cloud.size(); ++i)
    a(i, static_cast<std::size_t>(shape.part_labels[i])) = 1.0;
  return a;
}

std::vector<std::string> requested_metrics(const RunConfig& cfg, ConstraintMode mode) {
  std::vector<std::string> tokens;
  if (cfg.metrics == "auto") {
    switch (mode) {
      case ConstraintMode::Segmentation:
        tokens = {"miou", "recall", "confusion"};
        break;
      case ConstraintMode::Keypoint:
        tokens = {"pck"};
        break;
      case ConstraintMode::SmoothMap:
        tokens = {"residual"};
        break;
    }
    return tokens;
  }
  std::istringstream ss(cfg.metrics);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) tokens.push_back(item);
  }
  for (const std::string& t : tokens) {
    const bool seg_metric = t == "miou" || t == "recall" || t == "confusion";
    if (t == "pck" && mode != ConstraintMode::Keypoint)
      throw InvalidConfigError("metric 'pck' requires a key-mode checkpoint");
    if (seg_metric && mode != ConstraintMode::Segmentation)
      throw InvalidConfigError("metric '" + t + "' requires a seg-mode checkpoint");
    if (t == "residual" && mode != ConstraintMode::SmoothMap)
      throw InvalidConfigError("metric 'residual' requires a map-mode checkpoint");
    if (!seg_metric && t != "pck" && t != "residual")
      throw InvalidConfigError("unknown metric '" + t + "'");
  }
  return tokens;
}

}  // namespace

void run_gen_data(const RunConfig& cfg) {
  FamilyParams params;
  params.preset = cfg.preset;
  params.count = cfg.count;
  params.n_points = cfg.n_points;
  params.jitter = cfg.jitter;
  params.swap_fraction = cfg.swap_fraction;
  RngStream rng = RngStream(cfg.seed).substream("data");
  const std::vector<ShapeSample> shapes = generate_family(params, rng);
  save_dataset(cfg.dataset, shapes);

  std::vector<std::size_t> part_hist;
  for (const ShapeSample& s : shapes) {
    part_hist.resize(std::max<std::size_t>(part_hist.size(),
                                           static_cast<std::size_t>(s.num_parts)), 0);
    for (int l : s.part_labels) ++part_hist[static_cast<std::size_t>(l)];
  }
  std::cout << "wrote " << shapes.size() << " shapes (" << cfg.n_points
            << " points each) to " << cfg.dataset << "\npart histogram:";
  for (std::size_t p = 0; p < part_hist.size(); ++p)
    std::cout << " " << p << ":" << part_hist[p];
  std::cout << "\n";
}

void run_train(const RunConfig& cfg) {
  const ConstraintMode mode = mode_from_string(cfg.mode);
  if (cfg.k < 1) throw InvalidConfigError("k must be >= 1");
  if (cfg.eta <= 0.0) throw InvalidConfigError("eta must be > 0");
  if (cfg.gamma < 0.0) throw InvalidConfigError("gamma must be >= 0");
  if (cfg.batch_size < 1) throw InvalidConfigError("batch_size must be >= 1");
  if (cfg.siamese && mode == ConstraintMode::SmoothMap)
    throw InvalidConfigError("siamese training supports seg and key modes");

  const std::vector<ShapeSample> shapes = load_dataset(cfg.dataset);
  if (shapes.empty()) throw InvalidInputError("dataset is empty");

  RngStream root(cfg.seed);
  const SplitIndices split = split_dataset(shapes.size(), cfg.train_fraction,
                                           root.substream("split"));

  TrainConfig tc;
  tc.k = cfg.k;
  tc.gamma = cfg.gamma;
  tc.eta = cfg.eta;
  tc.mode = mode;
  tc.batch_size = cfg.batch_size;
  tc.epochs = cfg.epochs;
  tc.sigma = cfg.sigma;
  tc.noise_prob = cfg.noise_prob;
  tc.partial_fraction = cfg.partial_fraction;
  tc.siamese = cfg.siamese;
  tc.seed = cfg.seed;

  Checkpoint ckpt;
  if (!cfg.resume.empty()) {
    ckpt = load_checkpoint(cfg.resume);
    if (ckpt.mode != mode)
      throw InvalidConfigError("resume checkpoint mode differs from config");
    if (ckpt.params.arch.k != cfg.k)
      throw InvalidConfigError("resume checkpoint k differs from config");
  } else {
    RngStream init_rng = root.substream("init");
    ckpt.params = init_params(Architecture{cfg.k, 64, 64, 64}, init_rng);
    ckpt.mode = mode;
  }
  ckpt.state.cfg.eta = cfg.eta;

  std::vector<IndicatorOptions> ind_opts = build_indicator_options(shapes, cfg, root);
  std::vector<Matrix> bases;
  if (mode == ConstraintMode::SmoothMap) {
    bases.resize(shapes.size());
    for (std::size_t s : split.train)
      bases[s] = laplacian_eigenbasis(shapes[s].cloud, cfg.knn, cfg.num_bases);
  }

  const fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);
  write_atomic(out_dir / "config.toml", config_to_toml(cfg));

  const std::size_t per_step = cfg.siamese ? 2 * cfg.batch_size : cfg.batch_size;
  const std::size_t steps_per_epoch =
      std::max<std::size_t>(1, split.train.size() / std::max<std::size_t>(per_step, 1));
  const std::size_t epochs_done =
      steps_per_epoch > 0 ? ckpt.step / steps_per_epoch : 0;

  std::string csv = "step,F_mean,l21_mean,loss,lr\n";
  auto flush_outputs = [&]() {
    write_atomic(out_dir / "train_log.csv", csv);
    save_checkpoint(out_dir / "checkpoint.json", ckpt);
  };

  try {
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      const std::uint64_t epoch_id = epochs_done + e;
      std::vector<std::size_t> order = split.train;
      root.substream("epoch").substream(epoch_id).shuffle(order);
      RngStream probe_root = root.substream("probe").substream(epoch_id);

      std::size_t pos = 0;
      while (pos < order.size()) {
        const std::size_t take = std::min(per_step, order.size() - pos);
        StepMetrics metrics;
        if (cfg.siamese) {
          std::vector<SiamesePair> batch;
          for (std::size_t i = 0; i + 1 < take; i += 2) {
            RngStream rng = probe_root.substream(pos + i);
            const ShapeSample& a = shapes[order[pos + i]];
            const ShapeSample& b = shapes[order[pos + i + 1]];
            SiamesePair pair;
            pair.first = &a;
            pair.second = &b;
            if (mode == ConstraintMode::Segmentation) {
              // Correspondence supervision: the same part subset on both.
              const int parts = std::min(a.num_parts, b.num_parts);
              std::vector<int> subset;
              while (subset.empty()) {
                for (int p = 0; p < parts; ++p)
                  if (rng.next_bool()) subset.push_back(p);
              }
              pair.first_probe = part_indicator(a, subset);
              pair.second_probe = part_indicator(b, subset);
            } else {
              const std::size_t kps =
                  std::min(a.keypoints.size(), b.keypoints.size());
              if (kps == 0)
                throw InvalidInputError("siamese key mode: shape without keypoints");
              std::vector<std::size_t> subset;
              while (subset.empty()) {
                for (std::size_t p = 0; p < kps; ++p)
                  if (rng.next_bool()) subset.push_back(p);
              }
              pair.first_probe = keypoint_subset_function(a, subset, cfg.sigma);
              pair.second_probe = keypoint_subset_function(b, subset, cfg.sigma);
            }
            batch.push_back(std::move(pair));
          }
          if (batch.empty()) break;  // trailing odd shape, skipped
          metrics = train_step_siamese(ckpt.params, ckpt.state, batch, tc);
        } else {
          std::vector<TrainSample> batch;
          for (std::size_t i = 0; i < take; ++i) {
            const std::size_t idx = order[pos + i];
            RngStream rng = probe_root.substream(pos + i);
            TrainSample sample;
            sample.shape = &shapes[idx];
            sample.probe = draw_probe(shapes[idx], mode, cfg, ind_opts[idx],
                                      bases.empty() ? nullptr : &bases[idx], rng);
            batch.push_back(std::move(sample));
          }
          metrics = train_step(ckpt.params, ckpt.state, batch, tc);
        }
        ++ckpt.step;
        csv += std::to_string(ckpt.step) + "," + csv_number(metrics.f_mean) + "," +
               csv_number(metrics.l21_mean) + "," + csv_number(metrics.loss) + "," +
               csv_number(cfg.eta) + "\n";
        pos += take;
      }
      flush_outputs();  // checkpoint per epoch; last good one survives aborts
    }
  } catch (const NumericError&) {
    write_atomic(out_dir / "train_log.csv", csv);
    throw;
  }
  flush_outputs();
}

void run_eval(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw InvalidConfigError("eval needs checkpoint=");
  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
  const std::vector<ShapeSample> shapes = load_dataset(cfg.dataset);
  if (shapes.empty()) throw InvalidInputError("dataset is empty");
  const std::vector<std::string> metrics = requested_metrics(cfg, ckpt.mode);

  RngStream root(cfg.seed);
  const SplitIndices split = split_dataset(shapes.size(), cfg.train_fraction,
                                           root.substream("split"));
  const std::vector<std::size_t>& test =
      split.test.empty() ? split.train : split.test;

  const std::size_t k = ckpt.params.arch.k;
  std::size_t num_parts = 0;
  for (std::size_t s : test)
    num_parts = std::max(num_parts, static_cast<std::size_t>(shapes[s].num_parts));

  // Forward pass over the test split.
  std::vector<Matrix> dictionaries(test.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(test.size()); ++i) {
    const ShapeSample& shape = shapes[test[static_cast<std::size_t>(i)]];
    if (cfg.oracle_dictionary) {
      dictionaries[static_cast<std::size_t>(i)] = oracle_dictionary_for(shape, k);
    } else {
      dictionaries[static_cast<std::size_t>(i)] =
          forward(ckpt.params, shape.cloud, ckpt.mode).dictionary;
    }
  }

  json report;
  report["mode"] = mode_to_string(ckpt.mode);
  report["num_test_shapes"] = test.size();
  std::vector<double> csv_values(test.size(), 0.0);
  std::string csv_metric = "value";

  const auto wants = [&](const std::string& name) {
    return std::find(metrics.begin(), metrics.end(), name) != metrics.end();
  };
  std::vector<std::vector<int>> preds, gts;
  if (wants("miou") || wants("recall") || wants("confusion")) {
    for (std::size_t i = 0; i < test.size(); ++i) {
      preds.push_back(binarize_rows(dictionaries[i]));
      gts.push_back(shapes[test[i]].part_labels);
    }
  }

  for (const std::string& metric : metrics) {
    if (metric == "miou") {
      std::vector<double> per_shape;
      for (std::size_t i = 0; i < test.size(); ++i)
        per_shape.push_back(matched_miou_shape(preds[i], gts[i], k, num_parts));
      const double mean =
          std::accumulate(per_shape.begin(), per_shape.end(), 0.0) /
          static_cast<double>(per_shape.size());
      const double category = matched_miou_category(preds, gts, k, num_parts);
      report["miou"] = {{"per_shape", per_shape}, {"mean", mean},
                        {"category", category}};
      csv_values = per_shape;
      csv_metric = "miou";

      std::vector<double> atom_mass(k, 0.0);
      for (const Matrix& a : dictionaries)
        for (std::size_t i = 0; i < a.rows(); ++i)
          for (std::size_t j = 0; j < k; ++j) atom_mass[j] += a(i, j);
      for (double& m : atom_mass) m /= static_cast<double>(dictionaries.size());
      report["atom_mass"] = atom_mass;
    } else if (metric == "recall") {
      const ProposalRecall rec =
          proposal_recall(preds, gts, k, num_parts, cfg.recall_threshold);
      report["recall"] = {{"threshold", cfg.recall_threshold},
                          {"overall", rec.recall},
                          {"per_class", rec.per_class}};
    } else if (metric == "confusion") {
      const Matrix conf = label_confusion(preds, gts, k, num_parts);
      std::vector<std::vector<double>> rows;
      for (std::size_t p = 0; p < conf.rows(); ++p)
        rows.emplace_back(conf.row(p).begin(), conf.row(p).end());
      report["confusion"] = rows;
    } else if (metric == "pck") {
      std::vector<ShapeKeypointPrediction> kp_shapes;
      for (std::size_t i = 0; i < test.size(); ++i) {
        ShapeKeypointPrediction skp;
        skp.atom_points = predict_keypoints(dictionaries[i], shapes[test[i]].cloud);
        skp.ground_truth = shapes[test[i]].keypoints;
        kp_shapes.push_back(std::move(skp));
      }
      const PckResult pck = pck_curve(kp_shapes, cfg.pck_thresholds);
      report["pck"] = {{"thresholds", pck.thresholds},
                       {"per_shape_matched", pck.per_shape_matched},
                       {"global_matched", pck.global_matched}};
      // Per-shape scalar for the CSV: PCK at the last threshold, shape alone.
      std::vector<double> per_shape_pck;
      for (const ShapeKeypointPrediction& skp : kp_shapes) {
        const PckResult single = pck_curve({skp}, cfg.pck_thresholds);
        per_shape_pck.push_back(
            single.per_shape_matched.empty() ? 0.0 : single.per_shape_matched.back());
      }
      csv_values = per_shape_pck;
      csv_metric = "pck_at_max_threshold";
    } else if (metric == "residual") {
      std::vector<double> per_shape;
      RngStream eval_rng = root.substream("eval_smooth");
      for (std::size_t i = 0; i < test.size(); ++i) {
        const Matrix basis =
            laplacian_eigenbasis(shapes[test[i]].cloud, cfg.knn, cfg.num_bases);
        RngStream rng = eval_rng.substream(i);
        const ProbeFunction f = random_smooth_function(basis, rng);
        const Vector x = solve_ridge_ls(dictionaries[i], f.values);
        double r2 = 0.0;
        for (std::size_t p = 0; p < dictionaries[i].rows(); ++p) {
          const double r = dot(dictionaries[i].row(p), x) - f.values[p];
          r2 += r * r;
        }
        per_shape.push_back(r2);
      }
      const double mean = std::accumulate(per_shape.begin(), per_shape.end(), 0.0) /
                          static_cast<double>(per_shape.size());
      report["residual"] = {{"per_shape", per_shape}, {"mean", mean}};
      csv_values = per_shape;
      csv_metric = "residual";
    }
  }

  const fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);
  write_atomic(out_dir / "metrics.json", report.dump(2) + "\n");

  std::string csv = "shape_id," + csv_metric + "\n";
  for (std::size_t i = 0; i < test.size(); ++i)
    csv += std::to_string(shapes[test[i]].shape_id) + "," +
           csv_number(csv_values[i]) + "\n";
  write_atomic(out_dir / "metrics.csv", csv);
}

namespace {

template <typename Fn>
int run_command(Fn&& fn) {
  try {
    fn();
    return 0;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int cmd_gen_data(const RunConfig& cfg) {
  return run_command([&] { run_gen_data(cfg); });
}

int cmd_train(const RunConfig& cfg) {
  return run_command([&] { run_train(cfg); });
}

int cmd_eval(const RunConfig& cfg) {
  return run_command([&] { run_eval(cfg); });
}

}  // namespace funcdict
