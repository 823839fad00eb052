#include "funcdict/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "funcdict/errors.hpp"

namespace funcdict {

using nlohmann::json;

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInputError("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InvalidInputError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InvalidInputError("rename failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string mode_to_string(ConstraintMode mode) {
  switch (mode) {
    case ConstraintMode::Segmentation: return "seg";
    case ConstraintMode::Keypoint: return "key";
    case ConstraintMode::SmoothMap: return "map";
  }
  return "seg";
}

ConstraintMode mode_from_string(const std::string& s) {
  if (s == "seg") return ConstraintMode::Segmentation;
  if (s == "key") return ConstraintMode::Keypoint;
  if (s == "map") return ConstraintMode::SmoothMap;
  throw InvalidConfigError("unknown mode '" + s + "' (expected seg|key|map)");
}

std::string dataset_to_jsonl(const std::vector<ShapeSample>& shapes) {
  std::string out;
  for (const ShapeSample& shape : shapes) {
    json j;
    j["shape_id"] = shape.shape_id;
    j["family"] = shape.family;
    json pts = json::array();
    for (const auto& p : shape.cloud.points) pts.push_back({p[0], p[1], p[2]});
    j["points"] = std::move(pts);
    j["part_labels"] = shape.part_labels;
    json kps = json::array();
    for (const auto& kp : shape.keypoints) {
      kps.push_back({{"label", kp.label},
                     {"xyz", {kp.position[0], kp.position[1], kp.position[2]}}});
    }
    j["keypoints"] = std::move(kps);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ShapeSample> dataset_from_jsonl(const std::string& text) {
  std::vector<ShapeSample> shapes;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    ShapeSample shape;
    shape.shape_id = j.at("shape_id").get<int>();
    shape.family = j.at("family").get<std::string>();
    for (const auto& p : j.at("points"))
      shape.cloud.points.push_back({p.at(0).get<double>(), p.at(1).get<double>(),
                                    p.at(2).get<double>()});
    shape.part_labels = j.at("part_labels").get<std::vector<int>>();
    for (const auto& kp : j.at("keypoints")) {
      const auto& xyz = kp.at("xyz");
      shape.keypoints.push_back({kp.at("label").get<int>(),
                                 {xyz.at(0).get<double>(), xyz.at(1).get<double>(),
                                  xyz.at(2).get<double>()}});
    }
    int max_label = -1;
    for (int l : shape.part_labels) max_label = std::max(max_label, l);
    shape.num_parts = max_label + 1;
    if (shape.part_labels.size() != shape.cloud.size())
      throw InvalidInputError("dataset: point/label count mismatch");
    shapes.push_back(std::move(shape));
  }
  return shapes;
}

void save_dataset(const std::filesystem::path& path,
                  const std::vector<ShapeSample>& shapes) {
  write_atomic(path, dataset_to_jsonl(shapes));
}

std::vector<ShapeSample> load_dataset(const std::filesystem::path& path) {
  return dataset_from_jsonl(read_file(path));
}

namespace {

json layer_to_json(const Layer& l) {
  return {{"w", l.w.values()}, {"b", l.b}};
}

Layer layer_from_json(const json& j, std::size_t out, std::size_t in) {
  Layer l;
  const auto w = j.at("w").get<std::vector<double>>();
  if (w.size() != out * in) throw InvalidInputError("checkpoint: layer shape mismatch");
  l.w = Matrix(out, in);
  l.w.values() = w;
  l.b = j.at("b").get<std::vector<double>>();
  if (l.b.size() != out) throw InvalidInputError("checkpoint: bias shape mismatch");
  return l;
}

json gradients_to_json(const Gradients& g) {
  return {{"l1", layer_to_json(g.l1)},
          {"l2", layer_to_json(g.l2)},
          {"l3", layer_to_json(g.l3)},
          {"l4", layer_to_json(g.l4)}};
}

Gradients gradients_from_json(const json& j, const Architecture& arch) {
  Gradients g;
  g.l1 = layer_from_json(j.at("l1"), arch.h1, 3);
  g.l2 = layer_from_json(j.at("l2"), arch.h2, arch.h1);
  g.l3 = layer_from_json(j.at("l3"), arch.h3, 2 * arch.h2);
  g.l4 = layer_from_json(j.at("l4"), arch.k, arch.h3);
  return g;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const Architecture& a = ckpt.params.arch;
  json j;
  j["architecture"] = {{"k", a.k}, {"h1", a.h1}, {"h2", a.h2}, {"h3", a.h3}};
  j["mode"] = mode_to_string(ckpt.mode);
  j["step"] = ckpt.step;
  j["layers"] = gradients_to_json(
      Gradients{ckpt.params.l1, ckpt.params.l2, ckpt.params.l3, ckpt.params.l4});
  json adam;
  adam["eta"] = ckpt.state.cfg.eta;
  adam["beta1"] = ckpt.state.cfg.beta1;
  adam["beta2"] = ckpt.state.cfg.beta2;
  adam["eps"] = ckpt.state.cfg.eps;
  adam["step"] = ckpt.state.step;
  adam["initialized"] = ckpt.state.initialized;
  if (ckpt.state.initialized) {
    adam["m"] = gradients_to_json(ckpt.state.m);
    adam["v"] = gradients_to_json(ckpt.state.v);
  }
  j["adam"] = std::move(adam);
  return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j = json::parse(text);
  Checkpoint ckpt;
  const json& arch = j.at("architecture");
  ckpt.params.arch = {arch.at("k").get<std::size_t>(), arch.at("h1").get<std::size_t>(),
                      arch.at("h2").get<std::size_t>(), arch.at("h3").get<std::size_t>()};
  ckpt.mode = mode_from_string(j.at("mode").get<std::string>());
  ckpt.step = j.at("step").get<std::size_t>();
  const Gradients layers = gradients_from_json(j.at("layers"), ckpt.params.arch);
  ckpt.params.l1 = layers.l1;
  ckpt.params.l2 = layers.l2;
  ckpt.params.l3 = layers.l3;
  ckpt.params.l4 = layers.l4;
  const json& adam = j.at("adam");
  ckpt.state.cfg.eta = adam.at("eta").get<double>();
  ckpt.state.cfg.beta1 = adam.at("beta1").get<double>();
  ckpt.state.cfg.beta2 = adam.at("beta2").get<double>();
  ckpt.state.cfg.eps = adam.at("eps").get<double>();
  ckpt.state.step = adam.at("step").get<std::size_t>();
  ckpt.state.initialized = adam.at("initialized").get<bool>();
  if (ckpt.state.initialized) {
    ckpt.state.m = gradients_from_json(adam.at("m"), ckpt.params.arch);
    ckpt.state.v = gradients_from_json(adam.at("v"), ckpt.params.arch);
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_atomic(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_file(path));
}

}  // namespace funcdict
