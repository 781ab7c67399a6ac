#include "graspmap/train_eval.hpp"

#include <gtest/gtest.h>

#include "graspmap/dataset.hpp"

using namespace graspmap;

namespace {

TrainConfig quick_config(int epochs, int batch = 8, bool augment = false) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.folds = 2;
  cfg.seed = 77;
  cfg.augment = augment;
  return cfg;
}

bool parameters_equal(GraspFCN<float>& a, GraspFCN<float>& b) {
  const auto pa = a.parameters(), pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->value.size() != pb[i]->value.size()) return false;
    for (std::int64_t j = 0; j < pa[i]->value.size(); ++j) {
      if (pa[i]->value[j] != pb[i]->value[j]) return false;
    }
  }
  return true;
}

}  // namespace

TEST(Train, ZeroEpochsLeavesParametersUntouched) {
  const auto samples = make_synthetic(4, 96, 3);
  auto net = GraspFCN<float>::build(GraspFCNConfig::desk(), 9);
  auto reference = GraspFCN<float>::build(GraspFCNConfig::desk(), 9);
  const TrainResult result = train(net, samples, quick_config(0));
  EXPECT_TRUE(result.epoch_loss.empty());
  EXPECT_TRUE(parameters_equal(net, reference));
}

TEST(Train, SameSeedGivesIdenticalLossHistoryAndWeights) {
  const auto samples = make_synthetic(6, 96, 5);
  auto net_a = GraspFCN<float>::build(GraspFCNConfig::desk(), 21);
  auto net_b = GraspFCN<float>::build(GraspFCNConfig::desk(), 21);
  const TrainResult a = train(net_a, samples, quick_config(3));
  const TrainResult b = train(net_b, samples, quick_config(3));
  ASSERT_EQ(a.epoch_loss.size(), b.epoch_loss.size());
  for (std::size_t i = 0; i < a.epoch_loss.size(); ++i) {
    EXPECT_EQ(a.epoch_loss[i], b.epoch_loss[i]);
  }
  EXPECT_TRUE(parameters_equal(net_a, net_b));
}

TEST(Train, LossHistoryStaysFiniteAndProgressSinkFires) {
  const auto samples = make_synthetic(6, 96, 8);
  auto net = GraspFCN<float>::build(GraspFCNConfig::desk(), 22);
  int calls = 0;
  const TrainResult result =
      train(net, samples, quick_config(3), [&](int, double loss) {
        ++calls;
        EXPECT_TRUE(std::isfinite(loss));
      });
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(result.epoch_loss.size(), 3u);
}

TEST(Train, EmptyTrainingSetThrows) {
  auto net = GraspFCN<float>::build(GraspFCNConfig::desk(), 9);
  EXPECT_THROW(train(net, {}, quick_config(1)), Error);
}

TEST(Train, AugmentedTrainingFromLargerSourceImages) {
  // 120-pixel sources admit the full zoom range when cropping to 96.
  const auto samples = make_synthetic(4, 120, 31);
  auto net = GraspFCN<float>::build(GraspFCNConfig::desk(), 23);
  const TrainResult result = train(net, samples, quick_config(2, 4, true));
  EXPECT_EQ(result.epoch_loss.size(), 2u);
  for (double l : result.epoch_loss) EXPECT_TRUE(std::isfinite(l));
}

TEST(Evaluate, PerfectMapsScoreFullAccuracy) {
  // Predictions decoded straight from rasterized ground truth stand in for a
  // network that reproduces its targets exactly.
  const auto samples = make_synthetic(10, 96, 13);
  const double width_max = default_width_max(96);
  std::vector<CachedPrediction> predictions;
  for (const Sample& s : samples) {
    const auto maps = rasterize_sample(s, width_max);
    CachedPrediction p;
    p.best = pixel_grasp_to_rectangle(decode_best_grasp(maps, width_max));
    predictions.push_back(p);
  }
  const EvalReport report = score_predictions(predictions, samples, 0.25);
  EXPECT_EQ(report.accuracy, 1.0);
  EXPECT_EQ(report.n_test, 10);
}

TEST(Evaluate, UntrainedNetworkRunsWithoutCrash) {
  const auto samples = make_synthetic(4, 96, 17);
  auto net = GraspFCN<float>::build(GraspFCNConfig::desk(), 29);
  const EvalReport report = evaluate(net, samples, 0.25, default_width_max(96));
  EXPECT_GE(report.accuracy, 0.0);
  EXPECT_LE(report.accuracy, 1.0);
  EXPECT_EQ(report.n_test, 4);
  EXPECT_GT(report.mean_inference_ms, 0.0);
}

TEST(Evaluate, RejectsEmptyOrMismatchedInput) {
  auto net = GraspFCN<float>::build(GraspFCNConfig::desk(), 29);
  EXPECT_THROW(evaluate(net, {}, 0.25, 36.0), Error);
  const auto wrong_size = make_synthetic(2, 120, 5);
  EXPECT_THROW(evaluate(net, wrong_size, 0.25, 36.0), ShapeError);
}

TEST(Evaluate, EvalForwardLeavesRunningStatsUntouched) {
  const auto samples = make_synthetic(2, 96, 19);
  auto net = GraspFCN<float>::build(GraspFCNConfig::desk(), 31);
  std::vector<Tensor<float>> before;
  for (Tensor<float>* b : net.buffers()) before.push_back(*b);
  evaluate(net, samples, 0.25, default_width_max(96));
  const auto after = net.buffers();
  for (std::size_t i = 0; i < after.size(); ++i) {
    for (std::int64_t j = 0; j < after[i]->size(); ++j) {
      EXPECT_EQ((*after[i])[j], before[i][j]);
    }
  }
}

TEST(JaccardSweep, MonotoneAndConsistentWithEvaluate) {
  const auto samples = make_synthetic(8, 96, 23);
  auto net = GraspFCN<float>::build(GraspFCNConfig::desk(), 37);
  const double width_max = default_width_max(96);
  const std::vector<double> thresholds = {0.0, 0.25, 0.30, 0.35, 0.40};
  const auto reports = jaccard_sweep(net, samples, thresholds, width_max);
  ASSERT_EQ(reports.size(), thresholds.size());
  for (std::size_t i = 1; i < reports.size(); ++i) {
    EXPECT_LE(reports[i].accuracy, reports[i - 1].accuracy + 1e-12);
  }
  const EvalReport direct = evaluate(net, samples, 0.30, width_max);
  EXPECT_EQ(reports[2].accuracy, direct.accuracy);
  // Threshold 0 admits at least as much as 0.25.
  EXPECT_GE(reports[0].accuracy, reports[1].accuracy);
}

TEST(JaccardSweep, RejectsBadThresholdLists) {
  const auto samples = make_synthetic(2, 96, 29);
  auto net = GraspFCN<float>::build(GraspFCNConfig::desk(), 41);
  EXPECT_THROW(jaccard_sweep(net, samples, {}, 36.0), ConfigError);
  EXPECT_THROW(jaccard_sweep(net, samples, {0.3, 0.25}, 36.0), ConfigError);
}

TEST(MultiGrasp, ImpossibleThresholdReportsAbsent) {
  const auto samples = make_synthetic(3, 96, 31);
  auto net = GraspFCN<float>::build(GraspFCNConfig::desk(), 43);
  const auto table = multi_grasp_eval(net, samples, {1, 2, 3}, 1.01, default_width_max(96));
  for (const MultiGraspRow& row : table) {
    EXPECT_FALSE(row.defined);
    EXPECT_EQ(row.emitted, 0);
  }
}

TEST(MultiGrasp, TopOneAgreesWithEvaluateWhenEverySampleEmits) {
  const auto samples = make_synthetic(6, 96, 37);
  auto net = GraspFCN<float>::build(GraspFCNConfig::desk(), 47);
  const double width_max = default_width_max(96);
  // Threshold 0 guarantees at least one candidate per sample.
  const auto table = multi_grasp_eval(net, samples, {1}, 0.0, width_max);
  ASSERT_TRUE(table[0].defined);
  EXPECT_EQ(table[0].emitted, 6);
  const EvalReport direct = evaluate(net, samples, 0.25, width_max);
  EXPECT_EQ(table[0].accuracy, direct.accuracy);
}

TEST(CrossValidate, AggregateIsMeanOfFolds) {
  const auto samples = make_synthetic(6, 96, 41);
  TrainConfig cfg = quick_config(2, 4);
  const CrossValResult result = cross_validate(samples, GraspFCNConfig::desk(), cfg);
  ASSERT_EQ(result.fold_reports.size(), 2u);
  EXPECT_DOUBLE_EQ(
      result.aggregate.accuracy,
      (result.fold_reports[0].accuracy + result.fold_reports[1].accuracy) / 2.0);
  EXPECT_EQ(result.aggregate.per_fold.size(), 2u);
  EXPECT_EQ(result.aggregate.n_test, 6);
}

TEST(CrossValidate, DeterministicAcrossRuns) {
  const auto samples = make_synthetic(6, 96, 43);
  TrainConfig cfg = quick_config(2, 4);
  const CrossValResult a = cross_validate(samples, GraspFCNConfig::desk(), cfg);
  const CrossValResult b = cross_validate(samples, GraspFCNConfig::desk(), cfg);
  EXPECT_EQ(a.aggregate.accuracy, b.aggregate.accuracy);
  ASSERT_EQ(a.fold_reports.size(), b.fold_reports.size());
  for (std::size_t i = 0; i < a.fold_reports.size(); ++i) {
    EXPECT_EQ(a.fold_reports[i].accuracy, b.fold_reports[i].accuracy);
  }
}

TEST(Report, JsonlRoundTripPreservesFields) {
  std::vector<ReportRecord> records;
  records.push_back({"image", 0, 0.25, 0.9375, 16, 12.5, 7, "deadbeefdeadbeef"});
  records.push_back({"object", -1, 0.30, 0.875, 32, 9.25, 7, "deadbeefdeadbeef"});
  const std::string text = report_to_jsonl(records);
  const auto back = report_from_jsonl(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].split, "image");
  EXPECT_EQ(back[0].fold, 0);
  EXPECT_EQ(back[0].accuracy, 0.9375);
  EXPECT_EQ(back[1].fold, -1);
  EXPECT_EQ(back[1].n_test, 32);
  EXPECT_EQ(back[1].config_checksum, "deadbeefdeadbeef");
}

TEST(Report, LossHistoryIsTwoColumnText) {
  const std::string text = loss_history_to_text({1.5, 0.75, 0.25});
  EXPECT_EQ(text, "0 1.5\n1 0.75\n2 0.25\n");
}

TEST(Report, ConfigChecksumSeparatesConfigs) {
  TrainConfig a;
  TrainConfig b;
  b.epochs = 101;
  const auto net_cfg = GraspFCNConfig::desk();
  EXPECT_EQ(config_checksum(net_cfg, a), config_checksum(net_cfg, a));
  EXPECT_NE(config_checksum(net_cfg, a), config_checksum(net_cfg, b));
}

TEST(RunTraining, SingleFoldSkipsCrossValidation) {
  const auto samples = make_synthetic(4, 96, 47);
  TrainConfig cfg = quick_config(1, 4);
  cfg.folds = 1;
  const TrainPipelineResult result = run_training(samples, GraspFCNConfig::desk(), cfg);
  ASSERT_EQ(result.records.size(), 1u);
  EXPECT_EQ(result.records[0].fold, -1);
  EXPECT_EQ(result.final_loss_history.size(), 1u);
}
