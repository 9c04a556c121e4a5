// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "golden.hpp"
#include "rsbench/metrics.hpp"

namespace {

using namespace rsbench;
using rsbench::testing::error_kind;
using rsbench::testing::random_boxes;

BoundingBox box(double x1, double y1, double x2, double y2) { return *BoundingBox::make(x1, y1, x2, y2); }

double round2(double v) { return std::round(v * 100.0) / 100.0; }

TEST(Rpd, GoldenRows) {
  for (const auto& row : rsbench::testing::kRpdGolden) {
    EXPECT_NEAR(round2(rpd(row.clean, row.pert)), row.printed, 0.01 + 1e-9) << row.clean << " -> " << row.pert;
  }
  for (const auto& row : rsbench::testing::kRpdGoldenExtra) {
    EXPECT_NEAR(round2(rpd(row.clean, row.pert)), row.printed, 0.01 + 1e-9) << row.clean << " -> " << row.pert;
  }
}

TEST(Rpd, Examples) {
  EXPECT_EQ(round2(rpd(53.95, 49.35)), 8.53);
  EXPECT_EQ(round2(rpd(89.47, 86.65)), 3.15);
  EXPECT_EQ(rpd(0.7, 0.7), 0.0);
  EXPECT_LT(rpd(50, 60), 0.0);
}

TEST(Rpd, DegenerateClean) {
  EXPECT_EQ(error_kind([] { rpd(0.0, 0.1); }), ErrorKind::DegenerateClean);
  EXPECT_EQ(error_kind([] { rpd(-1.0, 0.1); }), ErrorKind::DegenerateClean);
  EXPECT_EQ(error_kind([] { rpd(std::nan(""), 0.1); }), ErrorKind::DegenerateClean);
}

TEST(Rpd, StrictlyIncreasingAsPerturbedDrops) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double c = u(rng), a = u(rng), b = u(rng);
    if (a == b) continue;
    EXPECT_EQ(rpd(c, std::min(a, b)) > rpd(c, std::max(a, b)), true);
    EXPECT_EQ(rpd(c, c), 0.0);
  }
}

TEST(Accuracy, Examples) {
  EXPECT_EQ(accuracy({"Beach", "the farmland"}, {"beach", "Farmland"}, AnswerStructure::Discrete), 1.0);
  EXPECT_EQ(accuracy({"yes", "no", "yes", "yes"}, {"yes", "yes", "no", "yes"}, AnswerStructure::Discrete), 0.5);
  EXPECT_EQ(accuracy({"There are 3.", "four", "2"}, {"3", "4", "5"}, AnswerStructure::Count), 2.0 / 3.0);
  EXPECT_EQ(error_kind([] { accuracy({}, {}, AnswerStructure::Discrete); }), ErrorKind::EmptyInput);
  EXPECT_EQ(error_kind([] { accuracy({"a"}, {"a", "b"}, AnswerStructure::Discrete); }), ErrorKind::LengthMismatch);
}

TEST(AccAt05, ClosedThreshold) {
  const BoxSet ref = {box(0, 0, 10, 10)};
  // contained boxes: IoU is the area ratio
  EXPECT_EQ(acc_at_05({{box(0, 0, 6, 10)}}, {ref}), 1.0);
  EXPECT_EQ(acc_at_05({{box(0, 0, 5, 10)}}, {ref}), 1.0);  // exactly 0.5
  EXPECT_EQ(acc_at_05({{box(0, 0, 4, 10)}}, {ref}), 0.0);
  EXPECT_EQ(acc_at_05({{box(20, 20, 30, 30)}, {}}, {ref, ref}), 0.0);
  EXPECT_EQ(error_kind([&] { acc_at_05({{}}, {ref, ref}); }), ErrorKind::LengthMismatch);
}

TEST(GIouMetric, UnmatchedReferencesCountAsMinusOne) {
  const BoxSet ref = {box(0, 0, 2, 1), box(10, 10, 12, 12)};
  EXPECT_NEAR(sample_g_iou(ref, {box(0, 0, 2, 1)}), (1.0 - 1.0) / 2.0, 1e-15);
  EXPECT_NEAR(sample_g_iou({box(0, 0, 1, 1)}, {box(2, 0, 3, 1)}), -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(mean_g_iou({{box(1, 0, 3, 1)}, {box(0, 0, 1, 1)}}, {{box(0, 0, 2, 1)}, {box(0, 0, 1, 1)}}),
              (1.0 / 3.0 + 1.0) / 2.0, 1e-15);
}

TEST(CcaText, Examples) {
  EXPECT_EQ(cca_text({{"a", "a"}, {"b", "b"}}, {{"a", "a"}, {"b", "b"}}), 1.0);
  EXPECT_EQ(cca_text({{"a", "a"}, {"b", "b"}}, {{"c", "c"}, {"a", "a"}}), 0.0);
  EXPECT_EQ(cca_text({{"a", "a", "b"}}, {{"b", "a", "a"}}), 1.0);
  EXPECT_EQ(error_kind([] { cca_text({{"a"}}, {{"a", "b"}}); }), ErrorKind::LengthMismatch);
  EXPECT_EQ(error_kind([] { cca_text({{"a"}}, {}); }), ErrorKind::LengthMismatch);
}

TEST(CcaText, ModeUsesNormalizedStringsAndLexicalTies) {
  EXPECT_EQ(group_mode({"The Beach.", "beach", "harbor"}), "beach");
  EXPECT_EQ(group_mode({"y", "x"}), "x");
  EXPECT_EQ(group_mode({"y", "y", "x", "x", "z"}), "x");
  EXPECT_EQ(group_mode({"a", "b"}), "");  // a lone article normalizes away
  EXPECT_EQ(cca_text({{"Beach", "harbor"}}, {{"harbor", "the beach"}}), 1.0);
}

TEST(CcaVg, Examples) {
  const BoxSet a = {box(0, 0, 10, 10)}, b = {box(20, 20, 30, 30)};
  EXPECT_EQ(cca_vg({{a}}, {{a}}), 1.0);
  EXPECT_EQ(cca_vg({{a}}, {{b}}), 0.0);
  // K=2, cross-pair values {1, 0, 0, 1}
  EXPECT_EQ(cca_vg({{a, b}}, {{a, b}}), 0.5);
}

TEST(CcaVg, PairIouEdgeCases) {
  const BoxSet a = {box(0, 0, 10, 10)};
  EXPECT_EQ(pair_iou({}, {}), 1.0);
  EXPECT_EQ(pair_iou(a, {}), 0.0);
  EXPECT_EQ(pair_iou({}, a), 0.0);
  // one matched box out of two
  EXPECT_EQ(pair_iou(a, {box(0, 0, 10, 10), box(50, 50, 60, 60)}), 0.5);
}

TEST(Cca, SymmetricAndBoundedOnRandomGroups) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> vocab = {"beach", "Beach.", "harbor", "the harbor", "yes", "no"};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 6, k = 1 + rng() % 5;
    std::vector<OutputGroup> tc(n), tp(n);
    std::vector<BoxGroup> bc(n), bp(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t m = 0; m < k; ++m) {
        tc[i].push_back(vocab[rng() % vocab.size()]);
        tp[i].push_back(vocab[rng() % vocab.size()]);
        bc[i].push_back(random_boxes(rng, rng() % 4, 30.0));
        bp[i].push_back(random_boxes(rng, rng() % 4, 30.0));
      }
    }
    EXPECT_EQ(cca_text(tc, tp), cca_text(tp, tc));
    const double v = cca_vg(bc, bp);
    EXPECT_NEAR(v, cca_vg(bp, bc), 1e-12);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_EQ(cca_text(tc, tc), 1.0);
  }
}

TEST(CcaVg, IdenticalConstantGroupsScoreOne) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng() % 5;
    const BoxSet s = random_boxes(rng, rng() % 4, 30.0);
    const BoxGroup g(k, s);
    EXPECT_NEAR(cca_vg({g}, {g}), 1.0, 1e-12);
  }
}

EvalSample text_sample(std::string ref, std::string gc, std::string gp, OutputGroup sc, OutputGroup sp) {
  return {"s", std::move(ref), std::move(gc), std::move(gp), std::move(sc), std::move(sp)};
}

TEST(EvaluateRun, DiscreteReport) {
  EvalRun run;
  run.task = {TaskKind::SceneClassification};
  run.k = 2;
  run.samples = {text_sample("beach", "beach", "harbor", {"beach", "beach"}, {"beach", "harbor"}),
                 text_sample("farmland", "farmland", "farmland", {"farmland", "forest"}, {"forest", "forest"})};
  const auto r = evaluate_run(run);
  EXPECT_EQ(r.m_clean, 1.0);
  EXPECT_EQ(r.m_pert, 0.5);
  ASSERT_TRUE(r.rpd_percent);
  EXPECT_DOUBLE_EQ(*r.rpd_percent, (r.m_clean - r.m_pert) / r.m_clean * 100.0);
  // sample 1: modes beach / beach; sample 2: farmland / forest
  EXPECT_EQ(r.cca, 0.5);
  EXPECT_FALSE(r.giou_clean);
}

TEST(EvaluateRun, CountModesCompareByValue) {
  EvalRun run;
  run.task = {TaskKind::Vqa, AnswerStructure::Count};
  run.k = 3;
  run.samples = {text_sample("3", "There are 3 tanks.", "3", {"3", "three", "There are 3."}, {"3", "3", "4"})};
  const auto r = evaluate_run(run);
  EXPECT_EQ(r.m_clean, 1.0);
  EXPECT_EQ(r.m_pert, 1.0);
  EXPECT_EQ(r.cca, 1.0);
  EXPECT_EQ(*r.rpd_percent, 0.0);
}

TEST(EvaluateRun, GroundingReportHasGIou) {
  EvalRun run;
  run.task = {TaskKind::VisualGrounding};
  run.k = 1;
  run.samples = {text_sample("[0, 0, 2, 1]", "[0, 0, 2, 1]", "[1, 0, 3, 1]", {"[0, 0, 2, 1]"}, {"[1, 0, 3, 1]"})};
  const auto r = evaluate_run(run);
  EXPECT_EQ(r.m_clean, 1.0);
  EXPECT_EQ(r.m_pert, 0.0);
  EXPECT_EQ(*r.rpd_percent, 100.0);
  EXPECT_NEAR(*r.giou_clean, 1.0, 1e-15);
  EXPECT_NEAR(*r.giou_pert, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.cca, 1.0 / 3.0, 1e-15);
}

TEST(EvaluateRun, ZeroCleanMetricOmitsRpd) {
  EvalRun run;
  run.task = {TaskKind::SceneClassification};
  run.k = 1;
  run.samples = {text_sample("beach", "harbor", "harbor", {"x"}, {"x"})};
  const auto r = evaluate_run(run);
  EXPECT_FALSE(r.rpd_percent);
}

TEST(EvaluateRun, RejectsUnequalK) {
  EvalRun run;
  run.task = {TaskKind::SceneClassification};
  run.k = 2;
  run.samples = {text_sample("beach", "beach", "beach", {"a", "b"}, {"a"})};
  EXPECT_EQ(error_kind([&] { evaluate_run(run); }), ErrorKind::LengthMismatch);
  run.samples.clear();
  EXPECT_EQ(error_kind([&] { evaluate_run(run); }), ErrorKind::EmptyInput);
}

TEST(StableSum, CompensatesCancellation) {
  std::vector<double> terms(1000, 0.1);
  terms.push_back(1e16);
  terms.push_back(-1e16);
  EXPECT_NEAR(stable_sum(terms), 100.0, 1e-9);
}

}  // namespace
