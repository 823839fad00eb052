#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "funcdict/eval.hpp"
#include "funcdict/matrix.hpp"
#include "funcdict/rng.hpp"

using namespace funcdict;

TEST_CASE("binarize_rows argmax with lowest-index ties") {
  Matrix a(3, 2);
  a(0, 0) = 0.9;
  a(0, 1) = 0.1;
  a(1, 0) = 0.5;
  a(1, 1) = 0.5;  // tie -> atom 0
  a(2, 0) = 0.2;
  a(2, 1) = 0.8;
  CHECK(binarize_rows(a) == std::vector<int>{0, 0, 1});

  // One-hot rows reproduce their own assignment.
  Matrix hot(4, 3, 0.0);
  hot(0, 2) = hot(1, 0) = hot(2, 1) = hot(3, 2) = 1.0;
  CHECK(binarize_rows(hot) == std::vector<int>{2, 0, 1, 2});
}

TEST_CASE("binarize_rows matches a naive scan on random input") {
  RngStream rng(1);
  Matrix a(50, 7);
  for (double& v : a.values()) v = rng.next_double();
  const std::vector<int> fast = binarize_rows(a);
  for (std::size_t i = 0; i < 50; ++i) {
    int best = 0;
    for (int j = 1; j < 7; ++j)
      if (a(i, static_cast<std::size_t>(j)) > a(i, static_cast<std::size_t>(best)))
        best = j;
    CHECK(fast[i] == best);
  }
}

TEST_CASE("matched_miou_shape recovers relabeled perfect predictions") {
  const std::vector<int> gt{0, 0, 1, 1, 2, 2};
  const std::vector<int> pred{4, 4, 0, 0, 2, 2};  // same partition, atoms renamed
  CHECK(matched_miou_shape(pred, gt, 5, 3) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("matched_miou_shape on fully crossed supports") {
  // gt = [0,0,1,1], pred = [0,1,0,1]: every (part, atom) pair has
  // intersection 1 and union 3, so the best matching scores 1/3 per part.
  const std::vector<int> gt{0, 0, 1, 1};
  const std::vector<int> pred{0, 1, 0, 1};
  CHECK(matched_miou_shape(pred, gt, 2, 2) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("matched_miou_shape with one atom covering everything") {
  const std::vector<int> gt{0, 0, 1, 1};
  const std::vector<int> pred{3, 3, 3, 3};
  // Matched part: IoU 2/4 = 0.5; the other part gets no atom: 0.
  CHECK(matched_miou_shape(pred, gt, 4, 2) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("matched_miou_category equals per-shape mean when atoms are consistent") {
  const std::vector<std::vector<int>> gts{{0, 0, 1, 1}, {0, 1, 1, 1}};
  const std::vector<std::vector<int>> preds{{2, 2, 5, 5}, {2, 5, 5, 5}};
  const double cat = matched_miou_category(preds, gts, 6, 2);
  double per_shape = 0;
  for (std::size_t s = 0; s < 2; ++s)
    per_shape += matched_miou_shape(preds[s], gts[s], 6, 2) / 2.0;
  CHECK(cat == doctest::Approx(per_shape).epsilon(1e-12));
  CHECK(cat == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("matched_miou_category drops below per-shape under swapped roles") {
  // Shape 1 maps part0->atom0, part1->atom1; shape 2 swaps them.
  const std::vector<std::vector<int>> gts{{0, 0, 1, 1}, {0, 0, 1, 1}};
  const std::vector<std::vector<int>> preds{{0, 0, 1, 1}, {1, 1, 0, 0}};
  const double cat = matched_miou_category(preds, gts, 2, 2);
  double per_shape = 0;
  for (std::size_t s = 0; s < 2; ++s)
    per_shape += matched_miou_shape(preds[s], gts[s], 2, 2) / 2.0;
  CHECK(per_shape == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cat < per_shape);
  CHECK(cat == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("matched_miou_category matches brute force on a 3-shape toy") {
  RngStream rng(5);
  std::vector<std::vector<int>> gts, preds;
  for (int s = 0; s < 3; ++s) {
    std::vector<int> gt(12), pred(12);
    for (auto& v : gt) v = static_cast<int>(rng.next_index(3));
    for (auto& v : pred) v = static_cast<int>(rng.next_index(4));
    gts.push_back(gt);
    preds.push_back(pred);
  }
  const double got = matched_miou_category(preds, gts, 4, 3);

  // Brute force: try every injective map from the 3 labels into the 4 atoms,
  // score mean per-shape mean-IoU under that fixed mapping.
  std::vector<int> atoms{0, 1, 2, 3};
  double best = 0;
  std::sort(atoms.begin(), atoms.end());
  do {
    double total = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const Matrix iou = iou_matrix(preds[s], gts[s], 4, 3);
      double shape_score = 0;
      for (int p = 0; p < 3; ++p)
        shape_score += iou(static_cast<std::size_t>(p),
                           static_cast<std::size_t>(atoms[static_cast<std::size_t>(p)]));
      total += shape_score / 3.0;
    }
    best = std::max(best, total / 3.0);
  } while (std::next_permutation(atoms.begin(), atoms.end()));
  CHECK(got == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("per-shape matched mIoU dominates the category score") {
  RngStream rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::vector<int>> gts, preds;
    for (int s = 0; s < 4; ++s) {
      std::vector<int> gt(20), pred(20);
      for (auto& v : gt) v = static_cast<int>(rng.next_index(3));
      for (auto& v : pred) v = static_cast<int>(rng.next_index(5));
      gts.push_back(gt);
      preds.push_back(pred);
    }
    double per_shape = 0;
    for (std::size_t s = 0; s < 4; ++s)
      per_shape += matched_miou_shape(preds[s], gts[s], 5, 3) / 4.0;
    const double cat = matched_miou_category(preds, gts, 5, 3);
    CHECK(per_shape >= cat - 1e-12);
  }
}

TEST_CASE("predict_keypoints takes column argmax points and skips dead atoms") {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  Matrix a(3, 3, 0.0);
  a(1, 0) = 0.9;  // atom 0 peaks at point 1
  a(0, 1) = 0.6;  // atom 1 peaks at point 0
  a(2, 2) = 1e-9;  // atom 2 effectively empty
  const auto kp = predict_keypoints(a, cloud);
  REQUIRE(kp.size() == 3);
  CHECK(kp[0].has_value());
  CHECK((*kp[0])[0] == 1.0);
  CHECK(kp[1].has_value());
  CHECK((*kp[1])[1] == 0.0);
  CHECK(!kp[2].has_value());
}

TEST_CASE("pck_curve on exact and hopeless predictions") {
  ShapeKeypointPrediction exact;
  exact.ground_truth = {{0, {0, 0, 0}}, {1, {1, 0, 0}}};
  exact.atom_points = {Point3{0, 0, 0}, Point3{1, 0, 0}};
  const PckResult hit = pck_curve({exact}, {0.01, 0.1});
  CHECK(hit.per_shape_matched == std::vector<double>{1.0, 1.0});
  CHECK(hit.global_matched == std::vector<double>{1.0, 1.0});

  ShapeKeypointPrediction far;
  far.ground_truth = {{0, {0, 0, 0}}};
  far.atom_points = {Point3{5, 5, 5}};
  const PckResult miss = pck_curve({far}, {0.01, 0.1});
  CHECK(miss.per_shape_matched == std::vector<double>{0.0, 0.0});
  CHECK(miss.global_matched == std::vector<double>{0.0, 0.0});
}

TEST_CASE("pck_curve hand-counted two-keypoint toy") {
  ShapeKeypointPrediction s;
  s.ground_truth = {{0, {0, 0, 0}}, {1, {1, 0, 0}}};
  s.atom_points = {Point3{0.01, 0, 0}, Point3{1.05, 0, 0}};
  const PckResult r = pck_curve({s}, {0.02, 0.1});
  CHECK(r.per_shape_matched[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.per_shape_matched[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.global_matched[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.global_matched[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pck_curve is monotone in the threshold") {
  RngStream rng(7);
  std::vector<ShapeKeypointPrediction> shapes;
  for (int s = 0; s < 5; ++s) {
    ShapeKeypointPrediction p;
    for (int kpt = 0; kpt < 3; ++kpt) {
      p.ground_truth.push_back(
          {kpt, {rng.next_double(), rng.next_double(), rng.next_double()}});
    }
    for (int atom = 0; atom < 4; ++atom)
      p.atom_points.push_back(
          Point3{rng.next_double(), rng.next_double(), rng.next_double()});
    shapes.push_back(std::move(p));
  }
  const PckResult r = pck_curve(shapes, {0.05, 0.1, 0.2, 0.5, 1.0, 2.0});
  for (std::size_t t = 1; t < r.thresholds.size(); ++t) {
    CHECK(r.per_shape_matched[t] >= r.per_shape_matched[t - 1]);
    CHECK(r.global_matched[t] >= r.global_matched[t - 1]);
  }
  for (std::size_t t = 0; t < r.thresholds.size(); ++t) {
    CHECK(r.per_shape_matched[t] >= r.global_matched[t] - 1e-12);
    CHECK(r.per_shape_matched[t] <= 1.0);
    CHECK(r.global_matched[t] >= 0.0);
  }
}

TEST_CASE("proposal_recall basics and the boundary rule") {
  const std::vector<std::vector<int>> gts{{0, 0, 1, 1}};
  // pred = gt: full recall at 0.5.
  CHECK(proposal_recall({{0, 0, 1, 1}}, gts, 2, 2, 0.5).recall ==
        doctest::Approx(1.0).epsilon(1e-12));
  // An atom covering half of part 0 and nothing else: IoU exactly 0.5 with
  // part 0 ({i=1}, union {0,1}); the >= rule counts it.
  const std::vector<std::vector<int>> half{{2, 0, 3, 3}};
  const ProposalRecall r = proposal_recall(half, gts, 4, 2, 0.5);
  CHECK(r.per_class[0] == doctest::Approx(1.0).epsilon(1e-12));
  // Part 1 is covered exactly by atom 3.
  CHECK(r.per_class[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.recall == doctest::Approx(1.0).epsilon(1e-12));
  // Strictly above the boundary fails.
  CHECK(proposal_recall(half, gts, 4, 2, 0.51).per_class[0] == 0.0);
}

TEST_CASE("label_confusion identity and merging cases") {
  // Each label consistently on its own atom: identity.
  const std::vector<std::vector<int>> gts{{0, 0, 1, 1}, {0, 1, 1, 1}};
  const std::vector<std::vector<int>> preds{{2, 2, 4, 4}, {2, 4, 4, 4}};
  const Matrix id = label_confusion(preds, gts, 5, 2);
  CHECK(id(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(id(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(id(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(id(1, 0) == doctest::Approx(0.0).epsilon(1e-12));

  // Both labels always on the same atom: fully confused.
  const std::vector<std::vector<int>> merged{{3, 3, 3, 3}};
  const Matrix ones = label_confusion(merged, {{0, 0, 1, 1}}, 5, 2);
  CHECK(ones(0, 1) == doctest::Approx(1.0).epsilon(1e-12));

  // Hand-built 2-label, 2-atom table: label 0 counts (3,1), label 1 (1,1).
  const std::vector<std::vector<int>> hand{{0, 0, 0, 1, 0, 1}};
  const std::vector<std::vector<int>> hand_gt{{0, 0, 0, 0, 1, 1}};
  const Matrix conf = label_confusion(hand, hand_gt, 2, 2);
  const double expect =
      (3.0 * 1.0 + 1.0 * 1.0) / (std::sqrt(10.0) * std::sqrt(2.0));
  CHECK(conf(0, 1) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(conf(1, 0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("iou_matrix hand check") {
  const std::vector<int> gt{0, 0, 1, 1, 1};
  const std::vector<int> pred{0, 1, 1, 1, 2};
  const Matrix iou = iou_matrix(pred, gt, 3, 2);
  CHECK(iou(0, 0) == doctest::Approx(0.5).epsilon(1e-12));        // {0} / {0,1}
  CHECK(iou(0, 1) == doctest::Approx(0.25).epsilon(1e-12));       // {1} / {1,2,3,0}
  CHECK(iou(1, 1) == doctest::Approx(0.5).epsilon(1e-12));        // {2,3} / {1..4}
  CHECK(iou(1, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));  // {4} / {2,3,4}
  CHECK(iou(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
}
