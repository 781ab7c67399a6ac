#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "graspmap/adam.hpp"
#include "graspmap/dataset.hpp"
#include "graspmap/errors.hpp"
#include "graspmap/loss.hpp"
#include "graspmap/model.hpp"
#include "graspmap/rng.hpp"

namespace graspmap {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double lr = 0.001;
  LossWeights loss_weights{};
  int folds = 5;
  SplitMode split = SplitMode::kImageWise;
  std::uint64_t seed = 0;
  double width_max = 0;  // 0: derived from the network input size
  bool augment = true;

  double resolved_width_max(int input_size) const {
    return width_max > 0 ? width_max : default_width_max(input_size);
  }

  void validate() const {
    if (epochs < 0) throw ConfigError(msg("train config: epochs must be >= 0, got ", epochs));
    if (batch_size < 1) {
      throw ConfigError(msg("train config: batch size must be >= 1, got ", batch_size));
    }
    if (lr <= 0) throw ConfigError(msg("train config: learning rate must be > 0, got ", lr));
    if (folds < 1) throw ConfigError(msg("train config: folds must be >= 1, got ", folds));
  }
};

struct EvalReport {
  double accuracy = 0;
  std::vector<double> per_fold;
  double jaccard_threshold = 0.25;
  double mean_inference_ms = 0;
  int n_test = 0;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean loss per epoch
};

using ProgressSink = std::function<void(int epoch, double mean_loss)>;

namespace detail {

/// Prepares one training view of a sample: seeded augmentation when enabled,
/// otherwise a deterministic center crop. Draws that drop every rectangle
/// are retried on a derived seed.
inline Sample training_view(const Sample& s, int input_size, bool augment,
                            std::uint64_t draw_seed) {
  if (!augment) return center_crop_sample(s, input_size);
  for (int attempt = 0; attempt < 16; ++attempt) {
    const AugmentParams params = AugmentParams::draw(seed_mix(draw_seed, attempt),
                                                     s.depth.height, s.depth.width, input_size);
    try {
      return augment_sample(s, params, input_size);
    } catch (const Error&) {
      continue;
    }
  }
  return center_crop_sample(s, input_size);
}

}  // namespace detail

/// Trains for cfg.epochs epochs: seeded shuffle, batching, per-sample
/// augmentation, target rasterization, forward/backward, and an Adam step on
/// every parameter. Returns the per-epoch mean loss.
inline TrainResult train(GraspFCN<float>& net, const std::vector<Sample>& train_samples,
                         const TrainConfig& cfg, const ProgressSink& progress = {}) {
  cfg.validate();
  if (train_samples.empty()) throw Error("train: empty training set");
  const int input_size = net.config().input_size;
  const double width_max = cfg.resolved_width_max(input_size);

  TrainResult result;
  std::vector<int> order(train_samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = make_rng(seed_mix(cfg.seed, 0xE70C, static_cast<std::uint64_t>(epoch)));
    shuffle(order, shuffle_rng);

    double loss_sum = 0;
    std::int64_t example_count = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const int n = static_cast<int>(end - start);

      Tensor<float> batch({n, 1, input_size, input_size});
      Tensor<float> tq({n, 1, input_size, input_size});
      Tensor<float> tc({n, 1, input_size, input_size});
      Tensor<float> ts({n, 1, input_size, input_size});
      Tensor<float> tw({n, 1, input_size, input_size});
      for (int bi = 0; bi < n; ++bi) {
        const int si = order[start + static_cast<std::size_t>(bi)];
        const Sample view = detail::training_view(
            train_samples[static_cast<std::size_t>(si)], input_size, cfg.augment,
            seed_mix(cfg.seed, static_cast<std::uint64_t>(epoch) * 0x10001 + 0xA06,
                     static_cast<std::uint64_t>(si)));
        const Tensor<float> plane = depth_to_input(view.depth);
        const GraspMapSet<float> maps = rasterize_sample(view, width_max);
        const std::int64_t plane_size = static_cast<std::int64_t>(input_size) * input_size;
        std::copy(plane.data(), plane.data() + plane_size,
                  batch.data() + batch.index4(bi, 0, 0, 0));
        std::copy(maps.quality.data(), maps.quality.data() + plane_size,
                  tq.data() + tq.index4(bi, 0, 0, 0));
        std::copy(maps.angle_cos.data(), maps.angle_cos.data() + plane_size,
                  tc.data() + tc.index4(bi, 0, 0, 0));
        std::copy(maps.angle_sin.data(), maps.angle_sin.data() + plane_size,
                  ts.data() + ts.index4(bi, 0, 0, 0));
        std::copy(maps.width_plane.data(), maps.width_plane.data() + plane_size,
                  tw.data() + tw.index4(bi, 0, 0, 0));
      }

      const auto out = net.forward(batch, Mode::kTrain);
      const auto loss = weighted_mse_loss(out.q, out.cos, out.sin, out.w, tq, tc, ts, tw,
                                          cfg.loss_weights);
      if (!std::isfinite(static_cast<double>(loss.loss))) {
        throw NumericError(msg("train: non-finite loss at epoch ", epoch, ", batch ",
                               start / static_cast<std::size_t>(cfg.batch_size)));
      }
      net.zero_grad();
      net.backward(loss.grad_q, loss.grad_cos, loss.grad_sin, loss.grad_w);
      for (Parameter<float>* p : net.parameters()) {
        adam_step<float>(*p, static_cast<float>(cfg.lr));
      }
      loss_sum += static_cast<double>(loss.loss) * n;
      example_count += n;
    }
    const double mean_loss = loss_sum / static_cast<double>(example_count);
    result.epoch_loss.push_back(mean_loss);
    if (progress) progress(epoch, mean_loss);
  }
  return result;
}

/// One cached prediction: the decoded best rectangle and its forward time.
struct CachedPrediction {
  GraspRectangle best;
  double forward_ms = 0;
};

/// Runs Eval-mode forwards over the test set and decodes the best grasp per
/// sample. Samples must already match the network input size.
inline std::vector<CachedPrediction> predict_all(GraspFCN<float>& net,
                                                 const std::vector<Sample>& samples,
                                                 double width_max) {
  const int input_size = net.config().input_size;
  std::vector<CachedPrediction> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) {
    if (s.depth.height != input_size || s.depth.width != input_size) {
      throw ShapeError(msg("evaluate: sample '", s.id, "' is ", s.depth.height, "x",
                           s.depth.width, " but the network expects ", input_size));
    }
    Tensor<float> batch({1, 1, input_size, input_size});
    const Tensor<float> plane = depth_to_input(s.depth);
    std::copy(plane.data(), plane.data() + plane.size(), batch.data());

    const auto t0 = std::chrono::steady_clock::now();
    const auto planes = net.forward(batch, Mode::kEval);
    const auto t1 = std::chrono::steady_clock::now();

    GraspMapSet<float> maps = GraspMapSet<float>::zeros(input_size, input_size);
    const std::int64_t n = maps.quality.size();
    std::copy(planes.q.data(), planes.q.data() + n, maps.quality.data());
    std::copy(planes.cos.data(), planes.cos.data() + n, maps.angle_cos.data());
    std::copy(planes.sin.data(), planes.sin.data() + n, maps.angle_sin.data());
    std::copy(planes.w.data(), planes.w.data() + n, maps.width_plane.data());

    CachedPrediction p;
    const PixelGrasp g = decode_best_grasp(maps, width_max);
    p.best = pixel_grasp_to_rectangle(g);
    p.forward_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    out.push_back(p);
  }
  return out;
}

/// Scores cached predictions against their samples' ground truth.
inline EvalReport score_predictions(const std::vector<CachedPrediction>& predictions,
                                    const std::vector<Sample>& samples,
                                    double jaccard_threshold) {
  if (predictions.size() != samples.size()) {
    throw ShapeError("score_predictions: prediction/sample count mismatch");
  }
  EvalReport report;
  report.jaccard_threshold = jaccard_threshold;
  report.n_test = static_cast<int>(samples.size());
  int passes = 0;
  double ms = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (rectangle_metric_match(predictions[i].best, samples[i].rects, jaccard_threshold)) {
      ++passes;
    }
    ms += predictions[i].forward_ms;
  }
  report.accuracy = samples.empty() ? 0 : static_cast<double>(passes) / samples.size();
  report.mean_inference_ms = samples.empty() ? 0 : ms / samples.size();
  return report;
}

/// Rectangle-metric evaluation: per sample, Eval forward, best-grasp decode,
/// rectangle conversion, and a match against the ground truth set.
inline EvalReport evaluate(GraspFCN<float>& net, const std::vector<Sample>& test_samples,
                           double jaccard_threshold, double width_max) {
  if (test_samples.empty()) throw Error("evaluate: empty test set");
  return score_predictions(predict_all(net, test_samples, width_max), test_samples,
                           jaccard_threshold);
}

/// One report per threshold from a single pass of cached predictions.
/// Pass sets are nested, so accuracy is non-increasing in the threshold.
inline std::vector<EvalReport> jaccard_sweep(GraspFCN<float>& net,
                                             const std::vector<Sample>& test_samples,
                                             const std::vector<double>& thresholds,
                                             double width_max) {
  if (thresholds.empty()) throw ConfigError("jaccard_sweep: empty threshold list");
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (thresholds[i] <= thresholds[i - 1]) {
      throw ConfigError("jaccard_sweep: thresholds must be strictly increasing");
    }
  }
  const auto cached = predict_all(net, test_samples, width_max);
  std::vector<EvalReport> reports;
  reports.reserve(thresholds.size());
  for (double t : thresholds) reports.push_back(score_predictions(cached, test_samples, t));
  return reports;
}

struct MultiGraspRow {
  int k = 0;
  int emitted = 0;
  int passed = 0;
  bool defined = false;  // false when no grasp cleared the quality threshold
  double accuracy = 0;
  double min_emitted_quality = 1.0;
};

/// Per-grasp accuracy when emitting up to k grasps per image via top-k
/// extraction at the given quality threshold, pooled over samples.
inline std::vector<MultiGraspRow> multi_grasp_eval(GraspFCN<float>& net,
                                                   const std::vector<Sample>& test_samples,
                                                   const std::vector<int>& k_values,
                                                   double q_threshold, double width_max) {
  for (int k : k_values) {
    if (k < 1) throw ConfigError(msg("multi_grasp_eval: k must be positive, got ", k));
  }
  const int input_size = net.config().input_size;
  int k_max = 1;
  for (int k : k_values) k_max = std::max(k_max, k);
  const double min_sep = default_min_separation(input_size);

  // Greedy top-k lists are prefix-stable: the k-grasp list is a prefix of the
  // k_max list, so one decode per sample covers every k.
  std::vector<std::vector<std::pair<PixelGrasp, bool>>> scored;
  scored.reserve(test_samples.size());
  for (const Sample& s : test_samples) {
    if (s.depth.height != input_size || s.depth.width != input_size) {
      throw ShapeError(msg("multi_grasp_eval: sample '", s.id, "' size mismatch"));
    }
    Tensor<float> batch({1, 1, input_size, input_size});
    const Tensor<float> plane = depth_to_input(s.depth);
    std::copy(plane.data(), plane.data() + plane.size(), batch.data());
    const auto planes = net.forward(batch, Mode::kEval);
    GraspMapSet<float> maps = GraspMapSet<float>::zeros(input_size, input_size);
    const std::int64_t n = maps.quality.size();
    std::copy(planes.q.data(), planes.q.data() + n, maps.quality.data());
    std::copy(planes.cos.data(), planes.cos.data() + n, maps.angle_cos.data());
    std::copy(planes.sin.data(), planes.sin.data() + n, maps.angle_sin.data());
    std::copy(planes.w.data(), planes.w.data() + n, maps.width_plane.data());

    const auto grasps = decode_top_k(maps, k_max, q_threshold, min_sep, width_max);
    std::vector<std::pair<PixelGrasp, bool>> rows;
    for (const PixelGrasp& g : grasps) {
      bool ok = false;
      if (g.width_px > 0) {
        ok = rectangle_metric_match(pixel_grasp_to_rectangle(g), s.rects, 0.25);
      }
      rows.emplace_back(g, ok);
    }
    scored.push_back(std::move(rows));
  }

  std::vector<MultiGraspRow> table;
  for (int k : k_values) {
    MultiGraspRow row;
    row.k = k;
    for (const auto& rows : scored) {
      const int take = std::min<int>(k, static_cast<int>(rows.size()));
      for (int i = 0; i < take; ++i) {
        row.emitted += 1;
        row.passed += rows[static_cast<std::size_t>(i)].second ? 1 : 0;
        row.min_emitted_quality =
            std::min(row.min_emitted_quality, rows[static_cast<std::size_t>(i)].first.quality);
      }
    }
    row.defined = row.emitted > 0;
    row.accuracy = row.defined ? static_cast<double>(row.passed) / row.emitted : 0;
    table.push_back(row);
  }
  return table;
}

struct CrossValResult {
  EvalReport aggregate;
  std::vector<EvalReport> fold_reports;
};

/// Five-fold style cross validation: per fold, a fresh seeded build, training
/// on the train split and evaluation on the held-out split; the aggregate
/// accuracy is the mean over folds.
inline CrossValResult cross_validate(const std::vector<Sample>& samples,
                                     const GraspFCNConfig& net_config, const TrainConfig& cfg,
                                     const ProgressSink& progress = {}) {
  cfg.validate();
  const auto folds = split_folds(samples, cfg.split, cfg.folds, cfg.seed);
  const double width_max = cfg.resolved_width_max(net_config.input_size);

  CrossValResult result;
  result.aggregate.jaccard_threshold = 0.25;
  double acc_sum = 0;
  double ms_sum = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    try {
      GraspFCN<float> net = GraspFCN<float>::build(
          net_config, seed_mix(cfg.seed, 0xF01D, static_cast<std::uint64_t>(f)));
      std::vector<Sample> train_set, test_set;
      for (int i : folds[f].train) train_set.push_back(samples[static_cast<std::size_t>(i)]);
      for (int i : folds[f].test) {
        test_set.push_back(
            center_crop_sample(samples[static_cast<std::size_t>(i)], net_config.input_size));
      }
      train(net, train_set, cfg, progress);
      EvalReport rep = evaluate(net, test_set, 0.25, width_max);
      acc_sum += rep.accuracy;
      ms_sum += rep.mean_inference_ms;
      result.aggregate.n_test += rep.n_test;
      result.fold_reports.push_back(std::move(rep));
    } catch (const Error& e) {
      throw Error(msg("cross_validate: fold ", f, " failed: ", e.what()));
    }
  }
  result.aggregate.accuracy = acc_sum / static_cast<double>(folds.size());
  result.aggregate.mean_inference_ms = ms_sum / static_cast<double>(folds.size());
  for (const EvalReport& rep : result.fold_reports) {
    result.aggregate.per_fold.push_back(rep.accuracy);
  }
  return result;
}

/// One line of the evaluation report file.
struct ReportRecord {
  std::string split;  // "image" | "object"
  int fold = -1;      // -1 marks the aggregate record
  double jaccard_threshold = 0.25;
  double accuracy = 0;
  int n_test = 0;
  double mean_inference_ms = 0;
  std::uint64_t seed = 0;
  std::string config_checksum;
};

inline std::string split_name(SplitMode mode) {
  return mode == SplitMode::kImageWise ? "image" : "object";
}

/// Stable content checksum over the network and training configuration.
inline std::string config_checksum(const GraspFCNConfig& net_config, const TrainConfig& cfg) {
  std::ostringstream os;
  os << net_config.input_size;
  for (int i = 0; i < 6; ++i) {
    os << "," << net_config.down_kernels[static_cast<std::size_t>(i)] << ","
       << net_config.up_kernels[static_cast<std::size_t>(i)] << ","
       << net_config.down_channels[static_cast<std::size_t>(i)] << ","
       << net_config.down_strides[static_cast<std::size_t>(i)];
    }
  os << ";" << cfg.epochs << "," << cfg.batch_size << "," << cfg.lr << ","
     << cfg.loss_weights.lambda_q << "," << cfg.loss_weights.lambda_phi << ","
     << cfg.loss_weights.lambda_w << "," << cfg.folds << "," << split_name(cfg.split) << ","
     << cfg.seed << "," << cfg.width_max << "," << (cfg.augment ? 1 : 0);
  const std::string text = os.str();
  const std::uint64_t h = detail::fnv1a64(text.data(), text.size());
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string report_to_jsonl(const std::vector<ReportRecord>& records) {
  std::string out;
  for (const ReportRecord& r : records) {
    nlohmann::json rec;
    rec["split"] = r.split;
    rec["fold"] = r.fold;
    rec["jaccard_threshold"] = r.jaccard_threshold;
    rec["accuracy"] = r.accuracy;
    rec["n_test"] = r.n_test;
    rec["mean_inference_ms"] = r.mean_inference_ms;
    rec["seed"] = r.seed;
    rec["config_checksum"] = r.config_checksum;
    out += rec.dump() + "\n";
  }
  return out;
}

inline std::vector<ReportRecord> report_from_jsonl(const std::string& text) {
  std::vector<ReportRecord> records;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const nlohmann::json rec = nlohmann::json::parse(line);
    ReportRecord r;
    r.split = rec.at("split").get<std::string>();
    r.fold = rec.at("fold").get<int>();
    r.jaccard_threshold = rec.at("jaccard_threshold").get<double>();
    r.accuracy = rec.at("accuracy").get<double>();
    r.n_test = rec.at("n_test").get<int>();
    r.mean_inference_ms = rec.at("mean_inference_ms").get<double>();
    r.seed = rec.at("seed").get<std::uint64_t>();
    r.config_checksum = rec.at("config_checksum").get<std::string>();
    records.push_back(std::move(r));
  }
  return records;
}

/// Two-column loss history text: epoch index and mean loss.
inline std::string loss_history_to_text(const std::vector<double>& epoch_loss) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu %.9g\n", i, epoch_loss[i]);
    out += buf;
  }
  return out;
}

struct TrainPipelineResult {
  std::vector<ReportRecord> records;
  std::vector<double> final_loss_history;
  GraspFCN<float> final_net;
};

/// The cmd-level training pipeline: cross-validates when cfg.folds > 1, then
/// trains the final model on the full sample set.
inline TrainPipelineResult run_training(const std::vector<Sample>& samples,
                                        const GraspFCNConfig& net_config,
                                        const TrainConfig& cfg,
                                        const ProgressSink& progress = {}) {
  cfg.validate();
  const std::string checksum = config_checksum(net_config, cfg);
  const std::string split = split_name(cfg.split);

  std::vector<ReportRecord> records;
  if (cfg.folds > 1) {
    const CrossValResult cv = cross_validate(samples, net_config, cfg, progress);
    for (std::size_t f = 0; f < cv.fold_reports.size(); ++f) {
      const EvalReport& rep = cv.fold_reports[f];
      records.push_back({split, static_cast<int>(f), rep.jaccard_threshold, rep.accuracy,
                         rep.n_test, rep.mean_inference_ms, cfg.seed, checksum});
    }
    records.push_back({split, -1, cv.aggregate.jaccard_threshold, cv.aggregate.accuracy,
                       cv.aggregate.n_test, cv.aggregate.mean_inference_ms, cfg.seed,
                       checksum});
  }

  GraspFCN<float> net = GraspFCN<float>::build(net_config, seed_mix(cfg.seed, 0xF1AA1));
  const TrainResult tr = train(net, samples, cfg, progress);
  if (cfg.folds <= 1) {
    records.push_back({split, -1, 0.25, 0.0, 0, 0.0, cfg.seed, checksum});
  }
  return TrainPipelineResult{std::move(records), tr.epoch_loss, std::move(net)};
}

}  // namespace graspmap
