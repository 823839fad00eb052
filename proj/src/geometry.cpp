#include "funcdict/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <utility>

#include "funcdict/errors.hpp"
#include "funcdict/sym_eigen.hpp"

namespace funcdict {
namespace {

struct Cuboid {
  Point3 lo{}, hi{};

  double surface_area() const {
    const double dx = hi[0] - lo[0], dy = hi[1] - lo[1], dz = hi[2] - lo[2];
    return 2.0 * (dx * dy + dx * dz + dy * dz);
  }

  Point3 sample_surface(RngStream& rng) const {
    const double dx = hi[0] - lo[0], dy = hi[1] - lo[1], dz = hi[2] - lo[2];
    // Fixed face order: z-, z+, y-, y+, x-, x+.
    const double areas[6] = {dx * dy, dx * dy, dx * dz, dx * dz, dy * dz, dy * dz};
    const double total = areas[0] + areas[1] + areas[2] + areas[3] + areas[4] + areas[5];
    double u = rng.next_double() * total;
    int face = 0;
    for (; face < 5; ++face) {
      if (u < areas[face]) break;
      u -= areas[face];
    }
    const double a = rng.next_double(), b = rng.next_double();
    switch (face) {
      case 0: return {lo[0] + a * dx, lo[1] + b * dy, lo[2]};
      case 1: return {lo[0] + a * dx, lo[1] + b * dy, hi[2]};
      case 2: return {lo[0] + a * dx, lo[1], lo[2] + b * dz};
      case 3: return {lo[0] + a * dx, hi[1], lo[2] + b * dz};
      case 4: return {lo[0], lo[1] + a * dy, lo[2] + b * dz};
      default: return {hi[0], lo[1] + a * dy, lo[2] + b * dz};
    }
  }
};

struct ShapeBlueprint {
  std::vector<Cuboid> parts;
  std::vector<Keypoint> keypoints;
  std::vector<int> keypoint_part;  // owning part per keypoint
};

double jittered(double base, double jitter, RngStream& rng) {
  return base * (1.0 + jitter * (2.0 * rng.next_double() - 1.0));
}

ShapeBlueprint make_table4(double jitter, RngStream& rng) {
  const double w = jittered(1.0, jitter, rng);
  const double d = jittered(0.7, jitter, rng);
  const double t = jittered(0.08, jitter, rng);
  const double h = jittered(0.6, jitter, rng);
  const double s = jittered(0.08, jitter, rng);

  ShapeBlueprint bp;
  bp.parts.push_back({{-w / 2, h, -d / 2}, {w / 2, h + t, d / 2}});  // top
  const double corner[4][2] = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  for (int leg = 0; leg < 4; ++leg) {
    const double cx = corner[leg][0] * (w / 2 - s / 2);
    const double cz = corner[leg][1] * (d / 2 - s / 2);
    bp.parts.push_back({{cx - s / 2, 0, cz - s / 2}, {cx + s / 2, h, cz + s / 2}});
  }
  for (int i = 0; i < 4; ++i) {
    bp.keypoints.push_back(
        {i, {corner[i][0] * w / 2, h + t, corner[i][1] * d / 2}});
    bp.keypoint_part.push_back(0);
  }
  return bp;
}

ShapeBlueprint make_chair6(double jitter, RngStream& rng) {
  const double w = jittered(0.9, jitter, rng);
  const double d = jittered(0.9, jitter, rng);
  const double t = jittered(0.08, jitter, rng);
  const double h = jittered(0.5, jitter, rng);
  const double b = jittered(0.9, jitter, rng);
  const double bt = jittered(0.08, jitter, rng);
  const double s = jittered(0.08, jitter, rng);

  ShapeBlueprint bp;
  bp.parts.push_back({{-w / 2, h, -d / 2}, {w / 2, h + t, d / 2}});            // seat
  bp.parts.push_back({{-w / 2, h + t, d / 2 - bt}, {w / 2, h + t + b, d / 2}});  // back
  const double corner[4][2] = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  for (int leg = 0; leg < 4; ++leg) {
    const double cx = corner[leg][0] * (w / 2 - s / 2);
    const double cz = corner[leg][1] * (d / 2 - s / 2);
    bp.parts.push_back({{cx - s / 2, 0, cz - s / 2}, {cx + s / 2, h, cz + s / 2}});
  }
  // 0,1: back top corners; 2,3: seat front corners; 4,5: seat rear corners.
  bp.keypoints.push_back({0, {-w / 2, h + t + b, d / 2}});
  bp.keypoints.push_back({1, {w / 2, h + t + b, d / 2}});
  bp.keypoints.push_back({2, {-w / 2, h + t, -d / 2}});
  bp.keypoints.push_back({3, {w / 2, h + t, -d / 2}});
  bp.keypoints.push_back({4, {-w / 2, h + t, d / 2}});
  bp.keypoints.push_back({5, {w / 2, h + t, d / 2}});
  bp.keypoint_part = {1, 1, 0, 0, 0, 0};
  return bp;
}

ShapeBlueprint make_boxes(int p_count, double jitter, double swap_fraction,
                          RngStream& rng) {
  // Distinct base sizes per box so parts stay identifiable under jitter.
  std::vector<double> size(p_count);
  for (int p = 0; p < p_count; ++p) {
    const double base = 0.8 * (1.0 - 0.35 * p / std::max(1, p_count - 1));
    size[p] = jittered(base, jitter, rng);
  }
  std::vector<double> cx(p_count, 0.0);
  for (int p = 1; p < p_count; ++p)
    cx[p] = cx[p - 1] + size[p - 1] / 2 + 0.25 + size[p] / 2;
  const bool swap = p_count >= 2 && rng.next_double() < swap_fraction;
  if (swap) std::swap(cx[0], cx[1]);

  ShapeBlueprint bp;
  for (int p = 0; p < p_count; ++p) {
    const double s = size[p];
    bp.parts.push_back({{cx[p] - s / 2, 0, -s / 2}, {cx[p] + s / 2, s, s / 2}});
    bp.keypoints.push_back({p, {cx[p] + s / 2, s, s / 2}});
    bp.keypoint_part.push_back(p);
  }
  return bp;
}

ShapeBlueprint make_blueprint(const FamilyParams& params, RngStream& rng) {
  if (params.preset == "table4") return make_table4(params.jitter, rng);
  if (params.preset == "chair6") return make_chair6(params.jitter, rng);
  if (params.preset.starts_with("boxes")) {
    const std::string suffix = params.preset.substr(5);
    int p_count = 0;
    try {
      p_count = std::stoi(suffix);
    } catch (...) {
      throw InvalidConfigError("generate_family: bad preset '" + params.preset + "'");
    }
    if (p_count < 2 || p_count > 8)
      throw InvalidConfigError("generate_family: boxes preset needs 2..8 parts");
    return make_boxes(p_count, params.jitter, params.swap_fraction, rng);
  }
  throw InvalidConfigError("generate_family: unknown preset '" + params.preset + "'");
}

// Per-part point budget proportional to surface area, at least the owned
// keypoints plus one free point each, summing exactly to n_points.
std::vector<std::size_t> allocate_budget(const ShapeBlueprint& bp,
                                         std::size_t n_points) {
  const std::size_t p_count = bp.parts.size();
  std::vector<std::size_t> min_count(p_count, 1);
  for (int part : bp.keypoint_part) ++min_count[static_cast<std::size_t>(part)];
  const std::size_t min_total =
      std::accumulate(min_count.begin(), min_count.end(), std::size_t{0});
  if (n_points < std::max<std::size_t>(min_total, p_count))
    throw InvalidConfigError("generate_family: n_points too small for preset");

  double total_area = 0.0;
  for (const auto& c : bp.parts) total_area += c.surface_area();
  std::vector<std::size_t> count(p_count);
  std::vector<double> frac(p_count);
  std::size_t assigned = 0;
  for (std::size_t p = 0; p < p_count; ++p) {
    const double ideal = n_points * bp.parts[p].surface_area() / total_area;
    count[p] = std::max(min_count[p], static_cast<std::size_t>(ideal));
    frac[p] = ideal - std::floor(ideal);
    assigned += count[p];
  }
  // Largest-remainder distribution of the slack; trim biggest parts if over.
  while (assigned < n_points) {
    const std::size_t p = static_cast<std::size_t>(
        std::max_element(frac.begin(), frac.end()) - frac.begin());
    ++count[p];
    frac[p] -= 1.0;
    ++assigned;
  }
  while (assigned > n_points) {
    std::size_t best = 0;
    for (std::size_t p = 1; p < p_count; ++p)
      if (count[p] > count[best]) best = p;
    if (count[best] <= min_count[best])
      throw InvalidConfigError("generate_family: n_points too small for preset");
    --count[best];
    --assigned;
  }
  return count;
}

}  // namespace

PointCloud normalize_cloud(const PointCloud& raw) {
  const std::size_t n = raw.size();
  if (n == 0) throw InvalidInputError("normalize_cloud: empty cloud");
  Point3 c{0, 0, 0};
  for (const auto& p : raw.points) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
      throw InvalidInputError("normalize_cloud: non-finite coordinate");
    for (int d = 0; d < 3; ++d) c[d] += p[d];
  }
  for (int d = 0; d < 3; ++d) c[d] /= static_cast<double>(n);

  double radius = 0.0;
  for (const auto& p : raw.points) {
    const double dx = p[0] - c[0], dy = p[1] - c[1], dz = p[2] - c[2];
    radius = std::max(radius, std::sqrt(dx * dx + dy * dy + dz * dz));
  }
  const double scale = radius > 1e-15 ? 1.0 / radius : 1.0;

  PointCloud out;
  out.points.reserve(n);
  for (const auto& p : raw.points)
    out.points.push_back(
        {(p[0] - c[0]) * scale, (p[1] - c[1]) * scale, (p[2] - c[2]) * scale});
  return out;
}

std::vector<ShapeSample> generate_family(const FamilyParams& params, RngStream& rng) {
  if (params.count < 1) throw InvalidConfigError("generate_family: count >= 1");
  if (params.n_points < 64)
    throw InvalidConfigError("generate_family: n_points >= 64 required");

  std::vector<ShapeSample> shapes;
  shapes.reserve(params.count);
  for (std::size_t si = 0; si < params.count; ++si) {
    RngStream shape_rng = rng.substream(si);
    const ShapeBlueprint bp = make_blueprint(params, shape_rng);
    const auto budget = allocate_budget(bp, params.n_points);

    ShapeSample shape;
    shape.family = params.preset;
    shape.shape_id = static_cast<int>(si);
    shape.num_parts = static_cast<int>(bp.parts.size());
    PointCloud raw;
    for (std::size_t p = 0; p < bp.parts.size(); ++p) {
      std::size_t placed = 0;
      for (std::size_t ki = 0; ki < bp.keypoints.size(); ++ki) {
        if (bp.keypoint_part[ki] == static_cast<int>(p)) {
          raw.points.push_back(bp.keypoints[ki].position);
          shape.part_labels.push_back(static_cast<int>(p));
          ++placed;
        }
      }
      for (; placed < budget[p]; ++placed) {
        raw.points.push_back(bp.parts[p].sample_surface(shape_rng));
        shape.part_labels.push_back(static_cast<int>(p));
      }
    }

    // Normalize points and keypoints with the same transform.
    Point3 c{0, 0, 0};
    for (const auto& pt : raw.points)
      for (int d = 0; d < 3; ++d) c[d] += pt[d];
    for (int d = 0; d < 3; ++d) c[d] /= static_cast<double>(raw.size());
    double radius = 0.0;
    for (const auto& pt : raw.points) {
      const double dx = pt[0] - c[0], dy = pt[1] - c[1], dz = pt[2] - c[2];
      radius = std::max(radius, std::sqrt(dx * dx + dy * dy + dz * dz));
    }
    const double scale = radius > 1e-15 ? 1.0 / radius : 1.0;
    shape.cloud.points.reserve(raw.size());
    for (const auto& pt : raw.points)
      shape.cloud.points.push_back({(pt[0] - c[0]) * scale, (pt[1] - c[1]) * scale,
                                    (pt[2] - c[2]) * scale});
    for (const auto& kp : bp.keypoints)
      shape.keypoints.push_back(
          {kp.label,
           {(kp.position[0] - c[0]) * scale, (kp.position[1] - c[1]) * scale,
            (kp.position[2] - c[2]) * scale}});
    shapes.push_back(std::move(shape));
  }
  return shapes;
}

ProbeFunction part_indicator(const ShapeSample& shape, std::span<const int> parts) {
  ProbeFunction f;
  f.kind = ProbeKind::Indicator;
  f.values.assign(shape.cloud.size(), 0.0);
  for (std::size_t i = 0; i < shape.part_labels.size(); ++i) {
    for (int p : parts) {
      if (shape.part_labels[i] == p) {
        f.values[i] = 1.0;
        break;
      }
    }
  }
  return f;
}

ProbeFunction sample_part_indicator(const ShapeSample& shape, RngStream& rng,
                                    const IndicatorOptions* opts) {
  if (shape.num_parts < 1)
    throw InvalidInputError("sample_part_indicator: shape has no parts");
  std::vector<int> eligible;
  for (int p = 0; p < shape.num_parts; ++p) {
    const bool excluded = opts && static_cast<std::size_t>(p) < opts->part_excluded.size() &&
                          opts->part_excluded[static_cast<std::size_t>(p)];
    if (!excluded) eligible.push_back(p);
  }
  if (eligible.empty())
    throw InvalidConfigError("sample_part_indicator: all parts excluded");

  std::vector<int> subset;
  while (subset.empty()) {
    for (int p : eligible)
      if (rng.next_bool()) subset.push_back(p);
  }
  ProbeFunction f = part_indicator(shape, subset);
  if (opts && opts->flip_prob > 0.0) {
    for (double& v : f.values)
      if (rng.next_double() < opts->flip_prob) v = 1.0 - v;
  }
  return f;
}

ProbeFunction keypoint_distance_function(const PointCloud& cloud, const Point3& s,
                                         double sigma) {
  if (sigma <= 0.0)
    throw InvalidConfigError("keypoint_distance_function: sigma must be > 0");
  const std::size_t n = cloud.size();
  ProbeFunction f;
  f.kind = ProbeKind::KeypointDistance;
  f.values.resize(n);
  Vector d2(n);
  double d2min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = cloud.points[i];
    const double dx = p[0] - s[0], dy = p[1] - s[1], dz = p[2] - s[2];
    d2[i] = dx * dx + dy * dy + dz * dz;
    d2min = std::min(d2min, d2[i]);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    f.values[i] = std::exp(-(d2[i] - d2min) / sigma);
    sum += f.values[i];
  }
  for (double& v : f.values) v /= sum;
  return f;
}

ProbeFunction keypoint_subset_function(const ShapeSample& shape,
                                       std::span<const std::size_t> subset,
                                       double sigma) {
  ProbeFunction f;
  f.kind = ProbeKind::KeypointDistance;
  f.values.assign(shape.cloud.size(), 0.0);
  for (std::size_t ki : subset) {
    const ProbeFunction g =
        keypoint_distance_function(shape.cloud, shape.keypoints.at(ki).position, sigma);
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] += g.values[i];
  }
  return f;
}

ProbeFunction sample_keypoint_subset(const ShapeSample& shape, double sigma,
                                     RngStream& rng) {
  if (shape.keypoints.empty())
    throw InvalidInputError("sample_keypoint_subset: shape has no keypoints");
  std::vector<std::size_t> subset;
  while (subset.empty()) {
    for (std::size_t ki = 0; ki < shape.keypoints.size(); ++ki)
      if (rng.next_bool()) subset.push_back(ki);
  }
  return keypoint_subset_function(shape, subset, sigma);
}

Matrix knn_graph_laplacian(const PointCloud& cloud, std::size_t k) {
  const std::size_t n = cloud.size();
  if (n > 1024)
    throw InvalidConfigError("knn_graph_laplacian: n exceeds dense budget (1024)");
  if (k < 1 || k >= n)
    throw InvalidConfigError("knn_graph_laplacian: K must satisfy 1 <= K < n");

  Matrix w(n, n, 0.0);
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto& a = cloud.points[i];
      const auto& b = cloud.points[j];
      const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
      dist[j] = {dx * dx + dy * dy + dz * dz, j};
    }
    dist[i].first = std::numeric_limits<double>::infinity();  // no self edge
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                      dist.end());
    for (std::size_t m = 0; m < k; ++m) {
      const std::size_t j = dist[m].second;
      w(i, j) = 1.0;
      w(j, i) = 1.0;
    }
  }
  Matrix lap(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      degree += w(i, j);
      lap(i, j) = -w(i, j);
    }
    lap(i, i) = degree;
  }
  return lap;
}

Matrix laplacian_eigenbasis(const PointCloud& cloud, std::size_t knn,
                            std::size_t num_bases) {
  const std::size_t n = cloud.size();
  if (num_bases > n)
    throw InvalidConfigError("laplacian_eigenbasis: num_bases exceeds n");
  const Matrix lap = knn_graph_laplacian(cloud, knn);
  const EigenDecomposition eig = sym_eigen(lap);
  std::size_t near_zero = 0;
  for (double ev : eig.eigenvalues)
    if (std::abs(ev) < 1e-8) ++near_zero;
  if (near_zero > 1)
    std::cerr << "warning: laplacian_eigenbasis: graph appears disconnected ("
              << near_zero << " zero eigenvalues)\n";
  Matrix basis(n, num_bases);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < num_bases; ++j) basis(i, j) = eig.eigenvectors(i, j);
  return basis;
}

ProbeFunction random_smooth_function(const Matrix& basis, RngStream& rng) {
  Vector c(basis.cols());
  for (double& x : c) x = rng.next_normal();
  ProbeFunction f;
  f.kind = ProbeKind::Smooth;
  f.values = matvec(basis, c);
  const double len = norm(f.values);
  const double scale = 1.0 / std::max(len, 1e-12);
  for (double& v : f.values) v *= scale;
  return f;
}

ProbeFunction random_smooth_function(const PointCloud& cloud, std::size_t num_bases,
                                     RngStream& rng) {
  return random_smooth_function(laplacian_eigenbasis(cloud, 8, num_bases), rng);
}

}  // namespace funcdict
