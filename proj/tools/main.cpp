// Command-line surface for the grasp-map toolkit: dataset synthesis and
// conversion, training, evaluation, sweeps and prediction overlays.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "graspmap/graspmap.hpp"

namespace {

namespace fs = std::filesystem;
using namespace graspmap;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;

void echo_config(const std::string& command, const nlohmann::json& resolved) {
  nlohmann::json line;
  line["command"] = command;
  line["config"] = resolved;
  std::cout << line.dump() << "\n";
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::istringstream is(csv);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::istringstream is(csv);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

GraspFCNConfig preset_config(const std::string& preset) {
  if (preset == "paper") return GraspFCNConfig::cornell();
  if (preset == "desk") return GraspFCNConfig::desk();
  throw ConfigError(msg("unknown preset '", preset, "'"));
}

/// Center-crops samples to the network input size; samples whose rectangles
/// all fall outside the crop are skipped.
std::vector<Sample> prepare_eval_samples(const std::vector<Sample>& samples, int input_size,
                                         int* skipped = nullptr) {
  std::vector<Sample> out;
  int skip_count = 0;
  for (const Sample& s : samples) {
    try {
      out.push_back(center_crop_sample(s, input_size));
    } catch (const Error&) {
      ++skip_count;
    }
  }
  if (skipped) *skipped = skip_count;
  return out;
}

class UsageError : public std::exception {
 public:
  explicit UsageError(std::string what) : what_(std::move(what)) {}
  const char* what() const noexcept override { return what_.c_str(); }

 private:
  std::string what_;
};

GraspFCN<float> load_model_file(const std::string& path) {
  if (path.empty()) throw UsageError("--model requires a non-empty path");
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(msg("cannot open model file '", path, "'"));
  return GraspFCN<float>::load(is);
}

void save_model_file(GraspFCN<float>& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(msg("cannot open model file '", path, "' for writing"));
  net.save(os);
}

int cmd_synth(int count, int size, std::uint64_t seed, const std::string& out_dir, int bars) {
  echo_config("synth", {{"count", count},
                        {"size", size},
                        {"seed", seed},
                        {"out_dir", out_dir},
                        {"bars", bars}});
  const auto samples = make_synthetic(count, size, seed, bars);
  save_dataset(out_dir, samples);
  std::cout << "wrote " << samples.size() << " samples to " << out_dir << "\n";
  return kExitOk;
}

int cmd_convert(const std::string& cornell_dir, const std::string& out_dir) {
  echo_config("convert", {{"cornell_dir", cornell_dir}, {"out_dir", out_dir}});
  const ConvertResult result = convert_cornell(cornell_dir, out_dir);
  std::cout << "converted " << result.converted << " samples\n";
  if (!result.failures.empty()) {
    std::cout << result.failures.size() << " failures:\n";
    for (const std::string& f : result.failures) std::cout << "  " << f << "\n";
    return kExitIo;
  }
  return kExitOk;
}

int cmd_train(const std::string& data_dir, const std::string& preset, const std::string& split,
              int folds, int epochs, int batch, double lr, std::uint64_t seed,
              double width_max, bool no_augment, const std::string& out_model,
              const std::string& report_path, std::string loss_history_path) {
  if (loss_history_path.empty()) loss_history_path = out_model + ".loss.txt";
  echo_config("train", {{"data", data_dir},
                        {"preset", preset},
                        {"split", split},
                        {"folds", folds},
                        {"epochs", epochs},
                        {"batch", batch},
                        {"lr", lr},
                        {"seed", seed},
                        {"width_max", width_max},
                        {"augment", !no_augment},
                        {"out_model", out_model},
                        {"report", report_path},
                        {"loss_history", loss_history_path}});

  const GraspFCNConfig net_config = preset_config(preset);
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.lr = lr;
  cfg.folds = folds;
  cfg.split = split == "object" ? SplitMode::kObjectWise : SplitMode::kImageWise;
  cfg.seed = seed;
  cfg.width_max = width_max;
  cfg.augment = !no_augment;

  const auto samples = load_dataset(data_dir);
  std::cout << "loaded " << samples.size() << " samples\n";

  const auto progress = [](int epoch, double mean_loss) {
    if (epoch % 10 == 0) {
      std::cout << "epoch " << epoch << " mean loss " << mean_loss << "\n";
    }
  };
  TrainPipelineResult result = run_training(samples, net_config, cfg, progress);

  save_model_file(result.final_net, out_model);
  write_text_file(loss_history_path, loss_history_to_text(result.final_loss_history));
  if (!report_path.empty()) {
    write_text_file(report_path, report_to_jsonl(result.records));
  }
  if (result.final_loss_history.empty()) {
    std::cout << "trained 0 epochs; model holds its initialization\n";
  } else {
    std::cout << "final mean loss " << result.final_loss_history.back() << "\n";
  }
  for (const ReportRecord& r : result.records) {
    if (r.fold >= 0) {
      std::cout << "fold " << r.fold << " accuracy " << r.accuracy << "\n";
    } else if (folds > 1) {
      std::cout << "aggregate accuracy " << r.accuracy << "\n";
    }
  }
  std::cout << "model written to " << out_model << "\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_dir,
                 double jaccard_threshold, double width_max, const std::string& report_path) {
  echo_config("evaluate", {{"model", model_path},
                           {"data", data_dir},
                           {"jaccard_threshold", jaccard_threshold},
                           {"width_max", width_max},
                           {"report", report_path}});
  GraspFCN<float> net = load_model_file(model_path);
  const double wm = width_max > 0 ? width_max : default_width_max(net.config().input_size);
  int skipped = 0;
  const auto samples = prepare_eval_samples(load_dataset(data_dir),
                                            net.config().input_size, &skipped);
  if (skipped > 0) std::cout << "skipped " << skipped << " samples without usable crops\n";
  const EvalReport rep = evaluate(net, samples, jaccard_threshold, wm);
  std::cout << "accuracy " << rep.accuracy << " over " << rep.n_test
            << " samples, mean inference " << rep.mean_inference_ms << " ms\n";
  if (!report_path.empty()) {
    write_text_file(report_path,
                    report_to_jsonl({{"image", -1, rep.jaccard_threshold, rep.accuracy,
                                      rep.n_test, rep.mean_inference_ms, 0, ""}}));
  }
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& input_path, int num_grasps,
                double q_threshold, double width_max, const std::string& out_overlay,
                const std::string& out_maps, const std::string& out_grasps) {
  echo_config("predict", {{"model", model_path},
                          {"input", input_path},
                          {"num_grasps", num_grasps},
                          {"q_threshold", q_threshold},
                          {"width_max", width_max},
                          {"out_overlay", out_overlay},
                          {"out_maps", out_maps},
                          {"out_grasps", out_grasps}});
  GraspFCN<float> net = load_model_file(model_path);
  const int input_size = net.config().input_size;
  const double wm = width_max > 0 ? width_max : default_width_max(input_size);

  DepthImage depth = read_png_gray16(input_path);
  if (!depth.all_valid()) depth = inpaint_depth(depth);
  if (depth.height < input_size || depth.width < input_size) {
    throw IoError(msg("input is ", depth.height, "x", depth.width,
                      " but the model expects at least ", input_size, "x", input_size));
  }
  if (depth.height != input_size || depth.width != input_size) {
    Sample tmp;
    tmp.depth = depth;
    depth = center_crop_sample(tmp, input_size).depth;
  }

  Tensor<float> batch({1, 1, input_size, input_size});
  const Tensor<float> plane = depth_to_input(depth);
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

  const auto grasps = decode_top_k(maps, num_grasps, q_threshold,
                                   default_min_separation(input_size), wm);

  std::string listing;
  for (const PixelGrasp& g : grasps) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d %d %.3f %.3f %.4f\n", g.u, g.v,
                  g.phi * 180.0 / kPi, g.width_px, g.quality);
    listing += buf;
  }
  std::cout << "inference " << std::chrono::duration<double, std::milli>(t1 - t0).count()
            << " ms, " << grasps.size() << " grasps (u v phi_deg width_px quality):\n"
            << listing;
  if (!out_grasps.empty()) write_text_file(out_grasps, listing);

  if (!out_overlay.empty()) {
    ImageU8 overlay = depth_to_gray_rgb(depth);
    for (const PixelGrasp& g : grasps) {
      if (g.width_px <= 0) continue;
      draw_grasp_rect(overlay, pixel_grasp_to_rectangle(g), 230, 30, 30);
    }
    write_png_rgb(out_overlay, overlay);
  }
  if (!out_maps.empty()) {
    write_png_rgb(out_maps + "_quality.png", quality_to_rgb(maps));
    write_png_rgb(out_maps + "_angle.png", angle_to_rgb(maps));
    write_png_rgb(out_maps + "_width.png", width_to_rgb(maps));
  }
  return kExitOk;
}

int cmd_sweep(const std::string& model_path, const std::string& data_dir,
              const std::string& jaccard_csv, const std::string& topk_csv, double q_threshold,
              double width_max, const std::string& report_path) {
  echo_config("sweep", {{"model", model_path},
                        {"data", data_dir},
                        {"jaccard", jaccard_csv},
                        {"topk", topk_csv},
                        {"q_threshold", q_threshold},
                        {"width_max", width_max},
                        {"report", report_path}});
  GraspFCN<float> net = load_model_file(model_path);
  const double wm = width_max > 0 ? width_max : default_width_max(net.config().input_size);
  const auto samples = prepare_eval_samples(load_dataset(data_dir), net.config().input_size);

  std::vector<ReportRecord> records;
  if (!jaccard_csv.empty()) {
    const auto thresholds = parse_double_list(jaccard_csv);
    const auto reports = jaccard_sweep(net, samples, thresholds, wm);
    bool monotone = true;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      std::cout << "jaccard " << thresholds[i] << " accuracy " << reports[i].accuracy << " ("
                << reports[i].n_test << " samples)\n";
      if (i > 0 && reports[i].accuracy > reports[i - 1].accuracy + 1e-12) monotone = false;
      records.push_back({"image", -1, thresholds[i], reports[i].accuracy, reports[i].n_test,
                         reports[i].mean_inference_ms, 0, ""});
    }
    std::cout << "monotone non-increasing: " << (monotone ? "yes" : "NO") << "\n";
  }
  if (!topk_csv.empty()) {
    const auto ks = parse_int_list(topk_csv);
    const auto table = multi_grasp_eval(net, samples, ks, q_threshold, wm);
    for (const MultiGraspRow& row : table) {
      std::cout << "top-" << row.k << " ";
      if (row.defined) {
        std::cout << "accuracy " << row.accuracy << " (" << row.passed << "/" << row.emitted
                  << " grasps)\n";
      } else {
        std::cout << "accuracy absent (no grasps above threshold)\n";
      }
    }
  }
  if (!report_path.empty()) write_text_file(report_path, report_to_jsonl(records));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pixel-wise grasp detection toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic bar dataset");
  int synth_count = 10, synth_size = 96, synth_bars = 1;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth->add_option("--count", synth_count, "Number of samples");
  synth->add_option("--size", synth_size, "Image side length in pixels");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--bars", synth_bars, "Bars per scene (1-4)");
  synth->add_option("--out-dir", synth_out, "Output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a grasp network");
  std::string train_data, train_preset = "paper", train_split = "image";
  std::string train_model, train_report, train_loss_history;
  int train_folds = 5, train_epochs = 100, train_batch = 32;
  double train_lr = 0.001, train_width_max = 0;
  bool train_no_augment = false;
  std::uint64_t train_seed = 0;
  train_cmd->add_option("--data", train_data, "Dataset directory")->required();
  train_cmd->add_option("--preset", train_preset, "Network preset")
      ->check(CLI::IsMember({"paper", "desk"}));
  train_cmd->add_option("--split", train_split, "Cross-validation split")
      ->check(CLI::IsMember({"image", "object"}));
  train_cmd->add_option("--folds", train_folds, "Cross-validation folds (1 = no CV)");
  train_cmd->add_option("--epochs", train_epochs, "Training epochs");
  train_cmd->add_option("--batch", train_batch, "Batch size");
  train_cmd->add_option("--lr", train_lr, "Learning rate");
  train_cmd->add_option("--seed", train_seed, "Training seed");
  train_cmd->add_option("--width-max", train_width_max, "Width normalization divisor");
  train_cmd->add_flag("--no-augment", train_no_augment, "Disable augmentation");
  train_cmd->add_option("--out-model", train_model, "Weight file path")->required();
  train_cmd->add_option("--report", train_report, "Report file path");
  train_cmd->add_option("--loss-history", train_loss_history, "Loss history path");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a model with the rectangle metric");
  std::string eval_model, eval_data, eval_report;
  double eval_jaccard = 0.25, eval_width_max = 0;
  eval_cmd->add_option("--model", eval_model, "Weight file")->required();
  eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
  eval_cmd->add_option("--jaccard-threshold", eval_jaccard, "Jaccard pass threshold");
  eval_cmd->add_option("--width-max", eval_width_max, "Width normalization divisor");
  eval_cmd->add_option("--report", eval_report, "Report file path");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Predict grasps for one depth image");
  std::string pred_model, pred_input, pred_overlay, pred_maps, pred_grasps;
  int pred_k = 1;
  double pred_q = 0.5, pred_width_max = 0;
  predict_cmd->add_option("--model", pred_model, "Weight file")->required();
  predict_cmd->add_option("--input", pred_input, "16-bit depth PNG")->required();
  predict_cmd->add_option("--num-grasps", pred_k, "Grasp candidates to emit");
  predict_cmd->add_option("--q-threshold", pred_q, "Quality floor for candidates");
  predict_cmd->add_option("--width-max", pred_width_max, "Width normalization divisor");
  predict_cmd->add_option("--out-overlay", pred_overlay, "Overlay PNG path");
  predict_cmd->add_option("--out-maps", pred_maps, "Prefix for map PNGs");
  predict_cmd->add_option("--out-grasps", pred_grasps, "Grasp list text path");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Threshold / top-k sweeps");
  std::string sweep_model, sweep_data, sweep_jaccard, sweep_topk, sweep_report;
  double sweep_q = 0.5, sweep_width_max = 0;
  sweep_cmd->add_option("--model", sweep_model, "Weight file")->required();
  sweep_cmd->add_option("--data", sweep_data, "Dataset directory")->required();
  sweep_cmd->add_option("--jaccard", sweep_jaccard, "Comma-separated Jaccard thresholds");
  sweep_cmd->add_option("--topk", sweep_topk, "Comma-separated k values");
  sweep_cmd->add_option("--q-threshold", sweep_q, "Quality floor for top-k");
  sweep_cmd->add_option("--width-max", sweep_width_max, "Width normalization divisor");
  sweep_cmd->add_option("--report", sweep_report, "Report file path");

  // convert
  auto* convert_cmd = app.add_subcommand("convert", "Convert a Cornell directory");
  std::string conv_in, conv_out;
  convert_cmd->add_option("--cornell-dir", conv_in, "Cornell dataset directory")->required();
  convert_cmd->add_option("--out-dir", conv_out, "Portable dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth(synth_count, synth_size, synth_seed, synth_out, synth_bars);
    }
    if (train_cmd->parsed()) {
      return cmd_train(train_data, train_preset, train_split, train_folds, train_epochs,
                       train_batch, train_lr, train_seed, train_width_max, train_no_augment,
                       train_model, train_report, train_loss_history);
    }
    if (eval_cmd->parsed()) {
      return cmd_evaluate(eval_model, eval_data, eval_jaccard, eval_width_max, eval_report);
    }
    if (predict_cmd->parsed()) {
      return cmd_predict(pred_model, pred_input, pred_k, pred_q, pred_width_max, pred_overlay,
                         pred_maps, pred_grasps);
    }
    if (sweep_cmd->parsed()) {
      return cmd_sweep(sweep_model, sweep_data, sweep_jaccard, sweep_topk, sweep_q,
                       sweep_width_max, sweep_report);
    }
    if (convert_cmd->parsed()) {
      return cmd_convert(conv_in, conv_out);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
