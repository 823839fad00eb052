#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "funcdict/geometry.hpp"
#include "funcdict/matrix.hpp"

namespace funcdict {

// Per-point atom assignment; row argmax, ties to the lowest atom index.
std::vector<int> binarize_rows(const Matrix& a);

// IoU matrix: rows = ground-truth parts, cols = predicted atoms.
Matrix iou_matrix(const std::vector<int>& pred, const std::vector<int>& gt,
                  std::size_t num_atoms, std::size_t num_parts);

// Hungarian-matched mean IoU over the ground-truth parts of one shape.
double matched_miou_shape(const std::vector<int>& pred, const std::vector<int>& gt,
                          std::size_t num_atoms, std::size_t num_parts);

// One global part<->atom matching for the whole category (maximizing summed
// per-shape IoU), then the mean per-shape IoU under that fixed matching.
double matched_miou_category(const std::vector<std::vector<int>>& preds,
                             const std::vector<std::vector<int>>& gts,
                             std::size_t num_atoms, std::size_t num_parts);

// Predicted keypoint per atom: the argmax point of the column. Columns whose
// maximum is below 1e-6 produce no prediction.
std::vector<std::optional<Point3>> predict_keypoints(const Matrix& a,
                                                     const PointCloud& cloud);

struct ShapeKeypointPrediction {
  std::vector<std::optional<Point3>> atom_points;  // per atom
  std::vector<Keypoint> ground_truth;
};

struct PckResult {
  std::vector<double> thresholds;
  std::vector<double> per_shape_matched;  // atom<->label matching per shape
  std::vector<double> global_matched;     // one matching for all shapes
};

PckResult pck_curve(const std::vector<ShapeKeypointPrediction>& shapes,
                    const std::vector<double>& thresholds);

struct ProposalRecall {
  double recall = 0.0;
  std::vector<double> per_class;  // indexed by part label
};

// Fraction of ground-truth instances covered by any predicted segment with
// IoU >= threshold. Instances are (shape, part) pairs.
ProposalRecall proposal_recall(const std::vector<std::vector<int>>& preds,
                               const std::vector<std::vector<int>>& gts,
                               std::size_t num_atoms, std::size_t num_parts,
                               double iou_threshold);

// Cosine similarity between per-label atom-count vectors, aggregated over the
// dataset. Labels never observed yield zero rows/columns.
Matrix label_confusion(const std::vector<std::vector<int>>& preds,
                       const std::vector<std::vector<int>>& gts,
                       std::size_t num_atoms, std::size_t num_parts);

}  // namespace funcdict
