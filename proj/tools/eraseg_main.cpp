#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eraseg/pipeline.hpp"

namespace {

// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

eraseg::RunConfig resolve_config(const std::string& config_path,
                                 const std::vector<std::string>& overrides) {
  eraseg::RunConfig config;
  if (!config_path.empty()) config = eraseg::load_config(config_path);
  for (const std::string& assignment : overrides)
    eraseg::apply_override(config, assignment);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "eraseg - weakly supervised nodule segmentation: multiple Q-learning "
      "agents erase superpixels inside an annotated box until a binary "
      "classifier tags the region as normal tissue; the erased area is the "
      "predicted mask.\n"
      "Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure."};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "Run configuration file");
  app.add_option("--set", overrides,
                 "Override a config value (section.key=value), repeatable");

  auto* gen = app.add_subcommand("gen-data",
                                 "Generate a synthetic speckle dataset with "
                                 "masks and box annotations");

  auto* train_clf = app.add_subcommand(
      "train-classifier",
      "Mine pseudo samples from boxes, train the nodule/normal classifier");

  auto* train_agents = app.add_subcommand(
      "train-agents", "Train the erasing agents with the curriculum schedule");
  bool resume = false;
  std::string classifier_path;
  train_agents->add_flag("--resume", resume,
                         "Continue from the checkpoint in the output dir");
  train_agents->add_option("--classifier", classifier_path,
                           "Classifier model (default: <output>/classifier.flnn)");

  auto* segment = app.add_subcommand(
      "segment", "Segment one image: greedy rollout, mask + trace output");
  std::string model_path, seg_classifier, image_path, box_path, out_dir, gt_path;
  segment->add_option("--model", model_path,
                      "Checkpoint directory or qnet .flnn file")->required();
  segment->add_option("--classifier", seg_classifier, "Classifier .flnn file")
      ->required();
  segment->add_option("--image", image_path, "Input image (.pgm or .flv)")
      ->required();
  segment->add_option("--box", box_path, "Box annotation sidecar (.box)")
      ->required();
  segment->add_option("--out", out_dir, "Output directory")->required();
  segment->add_option("--gt", gt_path,
                      "Optional ground-truth mask; adds a dice column to the "
                      "trace");

  auto* eval = app.add_subcommand(
      "eval", "DICE/JAC/HD/ASD per image plus mean and std aggregates");
  std::string pred_dir, gt_dir, eval_csv;
  eval->add_option("--pred", pred_dir, "Directory of predicted masks")
      ->required();
  eval->add_option("--gt", gt_dir, "Directory of ground-truth masks")
      ->required();
  eval->add_option("--out", eval_csv, "Output CSV path");

  auto* plot = app.add_subcommand("dump-trace-plot",
                                  "Render a trace CSV as an SVG line chart");
  std::string trace_path, svg_path;
  plot->add_option("--trace", trace_path, "Trace CSV from segment")->required();
  plot->add_option("--out", svg_path, "Output SVG path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const eraseg::RunConfig config = resolve_config(config_path, overrides);
      eraseg::cmd_gen_data(config);
      std::cout << "dataset written to " << config.data_root << std::endl;
    } else if (train_clf->parsed()) {
      const eraseg::RunConfig config = resolve_config(config_path, overrides);
      const auto outcome = eraseg::cmd_train_classifier(config);
      std::cout << "model " << outcome.model_path << "\naccuracy "
                << outcome.report.accuracy << " precision "
                << outcome.report.precision << " recall "
                << outcome.report.recall << " f1 " << outcome.report.f1
                << std::endl;
    } else if (train_agents->parsed()) {
      const eraseg::RunConfig config = resolve_config(config_path, overrides);
      const auto outcome =
          eraseg::cmd_train_agents(config, resume, classifier_path);
      std::cout << "checkpoint " << outcome.checkpoint_dir << std::endl;
    } else if (segment->parsed()) {
      const eraseg::RunConfig config = resolve_config(config_path, overrides);
      const auto outcome =
          eraseg::cmd_segment(config, model_path, seg_classifier, image_path,
                              box_path, out_dir, gt_path);
      std::cout << "mask " << outcome.mask_path << "\ntrace "
                << outcome.trace_path << "\nterminal "
                << eraseg::to_string(outcome.reason) << " sc_nodule "
                << outcome.final_sc_nodule << std::endl;
    } else if (eval->parsed()) {
      const auto summary = eraseg::cmd_eval(pred_dir, gt_dir, eval_csv);
      std::cout << "DICE " << summary.dice_mean << " +- " << summary.dice_std
                << "\nJAC " << summary.jac_mean << " +- " << summary.jac_std
                << "\nHD " << summary.hd_mean << " +- " << summary.hd_std
                << "\nASD " << summary.asd_mean << " +- " << summary.asd_std
                << std::endl;
    } else if (plot->parsed()) {
      eraseg::cmd_dump_trace_plot(trace_path, svg_path);
      std::cout << "chart " << svg_path << std::endl;
    }
  } catch (const eraseg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const eraseg::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << std::endl;
    return kExitNumeric;
  } catch (const eraseg::DataError& e) {
    std::cerr << "data error: " << e.what() << std::endl;
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitData;
  }
  return 0;
}
