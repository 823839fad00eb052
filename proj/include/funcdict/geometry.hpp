#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "funcdict/matrix.hpp"
#include "funcdict/rng.hpp"

namespace funcdict {

using Point3 = std::array<double, 3>;

// Unit-normalized point cloud: centroid at the origin, max radius 1.
struct PointCloud {
  std::vector<Point3> points;
  std::size_t size() const { return points.size(); }
};

struct Keypoint {
  int label = 0;
  Point3 position{};
};

struct ShapeSample {
  PointCloud cloud;
  std::vector<int> part_labels;    // per point, in {0..num_parts-1}
  std::vector<Keypoint> keypoints; // labels unique, consistent across a family
  std::string family;
  int shape_id = 0;
  int num_parts = 0;
};

enum class ProbeKind { Indicator, KeypointDistance, Smooth };

struct ProbeFunction {
  Vector values;
  ProbeKind kind = ProbeKind::Indicator;
};

// Center at the centroid and scale so the farthest point has radius 1.
// Degenerate clouds (all points coincident) are only centered.
PointCloud normalize_cloud(const PointCloud& raw);

// Presets: "table4" (top + 4 legs), "chair6" (seat, back, 4 legs),
// "boxes<P>" (P cuboids in a fixed row, e.g. "boxes2", "boxes3").
struct FamilyParams {
  std::string preset = "table4";
  std::size_t count = 1;
  std::size_t n_points = 512;
  double jitter = 0.15;        // relative per-dimension size jitter
  double swap_fraction = 0.0;  // boxes presets: fraction of shapes with the
                               // positions of parts 0 and 1 exchanged
};

std::vector<ShapeSample> generate_family(const FamilyParams& params, RngStream& rng);

// Indicator of an explicit part subset (1 on every point of a listed part).
ProbeFunction part_indicator(const ShapeSample& shape, std::span<const int> parts);

struct IndicatorOptions {
  std::vector<std::uint8_t> part_excluded;  // per part; empty = none excluded
  double flip_prob = 0.0;                   // independent per-point bit flips
};

// Indicator of a uniformly drawn nonempty part subset (independent inclusion
// with probability 1/2, empty set rejected), with optional part blacklisting
// and bit-flip noise.
ProbeFunction sample_part_indicator(const ShapeSample& shape, RngStream& rng,
                                    const IndicatorOptions* opts = nullptr);

// g_i proportional to exp(-d(p_i, s)^2 / sigma), normalized to sum to 1.
ProbeFunction keypoint_distance_function(const PointCloud& cloud, const Point3& s,
                                         double sigma);

// Sum of the normalized distance functions of an explicit keypoint subset
// (indices into shape.keypoints).
ProbeFunction keypoint_subset_function(const ShapeSample& shape,
                                       std::span<const std::size_t> subset,
                                       double sigma);

// Sum over a uniformly drawn nonempty subset of the shape's keypoints.
ProbeFunction sample_keypoint_subset(const ShapeSample& shape, double sigma,
                                     RngStream& rng);

// L = D - W for the symmetrized unit-weight K-nearest-neighbor graph.
Matrix knn_graph_laplacian(const PointCloud& cloud, std::size_t k);

// First num_bases Laplacian eigenvectors (ascending eigenvalue, constant
// vector included). Columns are orthonormal. Logs a warning and proceeds if
// the graph is disconnected.
Matrix laplacian_eigenbasis(const PointCloud& cloud, std::size_t knn,
                            std::size_t num_bases);

// f = basis * c with c standard normal, scaled to unit Euclidean norm.
ProbeFunction random_smooth_function(const Matrix& basis, RngStream& rng);
ProbeFunction random_smooth_function(const PointCloud& cloud, std::size_t num_bases,
                                     RngStream& rng);

}  // namespace funcdict
