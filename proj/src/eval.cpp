#include "funcdict/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "funcdict/errors.hpp"
#include "funcdict/hungarian.hpp"

namespace funcdict {
namespace {

constexpr double kMissingAtomDistance = 1e9;

double point_distance(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

std::vector<int> binarize_rows(const Matrix& a) {
  if (!a.all_finite()) throw InvalidInputError("binarize_rows: non-finite entry");
  std::vector<int> pred(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto row = a.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < a.cols(); ++j)
      if (row[j] > row[best]) best = j;  // strict: ties keep lowest atom
    pred[i] = static_cast<int>(best);
  }
  return pred;
}

Matrix iou_matrix(const std::vector<int>& pred, const std::vector<int>& gt,
                  std::size_t num_atoms, std::size_t num_parts) {
  if (pred.size() != gt.size())
    throw InvalidInputError("iou_matrix: prediction/ground-truth size mismatch");
  Matrix inter(num_parts, num_atoms, 0.0);
  std::vector<double> part_count(num_parts, 0.0), atom_count(num_atoms, 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = static_cast<std::size_t>(gt[i]);
    const auto a = static_cast<std::size_t>(pred[i]);
    inter(p, a) += 1.0;
    part_count[p] += 1.0;
    atom_count[a] += 1.0;
  }
  Matrix iou(num_parts, num_atoms, 0.0);
  for (std::size_t p = 0; p < num_parts; ++p) {
    for (std::size_t a = 0; a < num_atoms; ++a) {
      const double uni = part_count[p] + atom_count[a] - inter(p, a);
      iou(p, a) = uni > 0.0 ? inter(p, a) / uni : 0.0;
    }
  }
  return iou;
}

double matched_miou_shape(const std::vector<int>& pred, const std::vector<int>& gt,
                          std::size_t num_atoms, std::size_t num_parts) {
  const Matrix iou = iou_matrix(pred, gt, num_atoms, num_parts);
  const Assignment match = hungarian_max(iou);
  double sum = 0.0;
  for (std::size_t p = 0; p < num_parts; ++p) {
    if (match.row_to_col[p] >= 0)
      sum += iou(p, static_cast<std::size_t>(match.row_to_col[p]));
  }
  return sum / static_cast<double>(num_parts);
}

double matched_miou_category(const std::vector<std::vector<int>>& preds,
                             const std::vector<std::vector<int>>& gts,
                             std::size_t num_atoms, std::size_t num_parts) {
  if (preds.size() != gts.size() || preds.empty())
    throw InvalidInputError("matched_miou_category: dataset mismatch");
  Matrix summed(num_parts, num_atoms, 0.0);
  std::vector<Matrix> per_shape;
  per_shape.reserve(preds.size());
  for (std::size_t s = 0; s < preds.size(); ++s) {
    per_shape.push_back(iou_matrix(preds[s], gts[s], num_atoms, num_parts));
    for (std::size_t p = 0; p < num_parts; ++p)
      for (std::size_t a = 0; a < num_atoms; ++a)
        summed(p, a) += per_shape.back()(p, a);
  }
  const Assignment match = hungarian_max(summed);
  double total = 0.0;
  for (const Matrix& iou : per_shape) {
    double sum = 0.0;
    for (std::size_t p = 0; p < num_parts; ++p) {
      if (match.row_to_col[p] >= 0)
        sum += iou(p, static_cast<std::size_t>(match.row_to_col[p]));
    }
    total += sum / static_cast<double>(num_parts);
  }
  return total / static_cast<double>(per_shape.size());
}

std::vector<std::optional<Point3>> predict_keypoints(const Matrix& a,
                                                     const PointCloud& cloud) {
  if (a.rows() != cloud.size())
    throw InvalidInputError("predict_keypoints: dictionary/cloud size mismatch");
  std::vector<std::optional<Point3>> out(a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    std::size_t best = 0;
    double best_val = a(0, j);
    for (std::size_t i = 1; i < a.rows(); ++i) {
      if (a(i, j) > best_val) {
        best_val = a(i, j);
        best = i;
      }
    }
    if (best_val >= 1e-6) out[j] = cloud.points[best];  // near-zero atoms: empty
  }
  return out;
}

PckResult pck_curve(const std::vector<ShapeKeypointPrediction>& shapes,
                    const std::vector<double>& thresholds) {
  for (double t : thresholds)
    if (t < 0.0) throw InvalidConfigError("pck_curve: negative threshold");

  // Stable label indexing across the dataset.
  std::vector<int> labels;
  std::size_t num_atoms = 0;
  for (const auto& s : shapes) {
    num_atoms = std::max(num_atoms, s.atom_points.size());
    for (const auto& kp : s.ground_truth) labels.push_back(kp.label);
  }
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  auto label_index = [&](int label) {
    return static_cast<std::size_t>(
        std::lower_bound(labels.begin(), labels.end(), label) - labels.begin());
  };

  std::size_t total_keypoints = 0;
  std::vector<std::vector<double>> shape_matched_dists;  // per shape
  Matrix global_profit(std::max<std::size_t>(labels.size(), 1),
                       std::max<std::size_t>(num_atoms, 1), 0.0);

  for (const auto& s : shapes) {
    total_keypoints += s.ground_truth.size();
    Matrix dist(s.ground_truth.size(), num_atoms, kMissingAtomDistance);
    for (std::size_t g = 0; g < s.ground_truth.size(); ++g) {
      for (std::size_t a = 0; a < num_atoms; ++a) {
        if (a < s.atom_points.size() && s.atom_points[a].has_value())
          dist(g, a) =
              point_distance(s.ground_truth[g].position, *s.atom_points[a]);
        global_profit(label_index(s.ground_truth[g].label), a) -= dist(g, a);
      }
    }
    Matrix profit = dist;
    for (double& v : profit.values()) v = -v;
    const Assignment match = hungarian_max(profit);
    std::vector<double> matched(s.ground_truth.size(),
                                std::numeric_limits<double>::infinity());
    for (std::size_t g = 0; g < s.ground_truth.size(); ++g) {
      if (match.row_to_col[g] >= 0)
        matched[g] = dist(g, static_cast<std::size_t>(match.row_to_col[g]));
    }
    shape_matched_dists.push_back(std::move(matched));
  }

  const Assignment global_match = hungarian_max(global_profit);

  PckResult result;
  result.thresholds = thresholds;
  result.per_shape_matched.assign(thresholds.size(), 0.0);
  result.global_matched.assign(thresholds.size(), 0.0);
  if (total_keypoints == 0) return result;

  for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
    std::size_t hits = 0;
    for (const auto& dists : shape_matched_dists)
      for (double d : dists)
        if (d <= thresholds[ti]) ++hits;
    result.per_shape_matched[ti] =
        static_cast<double>(hits) / static_cast<double>(total_keypoints);
  }

  for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
    std::size_t hits = 0;
    for (const auto& s : shapes) {
      for (const auto& kp : s.ground_truth) {
        const std::ptrdiff_t atom = global_match.row_to_col[label_index(kp.label)];
        if (atom < 0) continue;
        const auto a = static_cast<std::size_t>(atom);
        if (a < s.atom_points.size() && s.atom_points[a].has_value() &&
            point_distance(kp.position, *s.atom_points[a]) <= thresholds[ti])
          ++hits;
      }
    }
    result.global_matched[ti] =
        static_cast<double>(hits) / static_cast<double>(total_keypoints);
  }
  return result;
}

ProposalRecall proposal_recall(const std::vector<std::vector<int>>& preds,
                               const std::vector<std::vector<int>>& gts,
                               std::size_t num_atoms, std::size_t num_parts,
                               double iou_threshold) {
  if (iou_threshold <= 0.0 || iou_threshold > 1.0)
    throw InvalidConfigError("proposal_recall: threshold must be in (0, 1]");
  if (preds.size() != gts.size())
    throw InvalidInputError("proposal_recall: dataset mismatch");

  std::vector<std::size_t> covered(num_parts, 0), total(num_parts, 0);
  for (std::size_t s = 0; s < preds.size(); ++s) {
    const Matrix iou = iou_matrix(preds[s], gts[s], num_atoms, num_parts);
    std::vector<bool> present(num_parts, false);
    for (int label : gts[s]) present[static_cast<std::size_t>(label)] = true;
    for (std::size_t p = 0; p < num_parts; ++p) {
      if (!present[p]) continue;
      ++total[p];
      for (std::size_t a = 0; a < num_atoms; ++a) {
        if (iou(p, a) >= iou_threshold) {
          ++covered[p];
          break;
        }
      }
    }
  }
  ProposalRecall out;
  out.per_class.assign(num_parts, 0.0);
  std::size_t covered_sum = 0, total_sum = 0;
  for (std::size_t p = 0; p < num_parts; ++p) {
    covered_sum += covered[p];
    total_sum += total[p];
    out.per_class[p] = total[p] > 0
                           ? static_cast<double>(covered[p]) / static_cast<double>(total[p])
                           : 0.0;
  }
  out.recall = total_sum > 0
                   ? static_cast<double>(covered_sum) / static_cast<double>(total_sum)
                   : 0.0;
  return out;
}

Matrix label_confusion(const std::vector<std::vector<int>>& preds,
                       const std::vector<std::vector<int>>& gts,
                       std::size_t num_atoms, std::size_t num_parts) {
  if (preds.size() != gts.size())
    throw InvalidInputError("label_confusion: dataset mismatch");
  Matrix counts(num_parts, num_atoms, 0.0);
  for (std::size_t s = 0; s < preds.size(); ++s) {
    if (preds[s].size() != gts[s].size())
      throw InvalidInputError("label_confusion: shape size mismatch");
    for (std::size_t i = 0; i < preds[s].size(); ++i)
      counts(static_cast<std::size_t>(gts[s][i]),
             static_cast<std::size_t>(preds[s][i])) += 1.0;
  }
  Matrix normalized = counts;
  for (std::size_t p = 0; p < num_parts; ++p) {
    const double len = norm(normalized.row(p));
    if (len > 0.0) {
      for (std::size_t a = 0; a < num_atoms; ++a) normalized(p, a) /= len;
    } else {
      std::cerr << "warning: label_confusion: label " << p << " never observed\n";
    }
  }
  Matrix confusion(num_parts, num_parts, 0.0);
  for (std::size_t p = 0; p < num_parts; ++p)
    for (std::size_t q = 0; q < num_parts; ++q)
      confusion(p, q) = dot(normalized.row(p), normalized.row(q));
  return confusion;
}

}  // namespace funcdict
