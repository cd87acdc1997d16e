#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eraseg/classifier.hpp"
#include "eraseg/learner.hpp"
#include "eraseg/synthetic.hpp"

namespace eraseg {

// Resolved run configuration. The on-disk format is sectioned key = value
// text ('#' comments); unknown sections or keys are rejected.
struct RunConfig {
  // [data]
  std::string data_root = "data";

  // [synthetic]
  SyntheticSpec synthetic;
  int count_train = 200;
  int count_val = 20;
  int count_test = 50;

  // [classifier]
  ClassifierConfig classifier;
  int pos_per_image = 6;
  int neg_per_image = 6;
  int fill_per_image = 6;
  int fill_n_segment = 1000;
  int bootstrap_epochs = 5;

  // [rl]
  TrainHyper rl;
  EpisodeConfig episode;
  std::string curriculum = "0:100,20:1000,40:2000";
  double epoch_scale = 1.0;

  // [output]
  std::string output_dir = "runs/out";

  // Curriculum and epoch count after applying epoch_scale.
  CurriculumSchedule scaled_schedule() const;
  int scaled_epochs() const;
  // n_segment of the hardest stage (used at inference).
  int final_n_segment() const;

  std::string to_text() const;  // resolved form, reloadable
};

RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

// Applies "section.key=value" overrides on top of a config.
void apply_override(RunConfig& config, const std::string& assignment);

// ---------------------------------------------------------------------------
// Dataset directory layout: <root>/{train,val,test}/img_NNNN.{pgm|flv}
// with img_NNNN_mask.* ground truth and img_NNNN.box annotations, plus
// manifest.txt at the root.
// ---------------------------------------------------------------------------

struct DatasetEntry {
  std::string stem;  // e.g. "img_0007"
  ImageGrid image;
  BoundingBox box;
  std::optional<BinaryMask> mask;
};

std::vector<DatasetEntry> load_dataset_split(const std::string& root,
                                             const std::string& split,
                                             bool want_masks);

// ---------------------------------------------------------------------------
// Commands (the CLI maps exceptions to exit codes: ConfigError 2,
// DataError 3, NumericError 4).
// ---------------------------------------------------------------------------

void cmd_gen_data(const RunConfig& config);

struct TrainClassifierOutcome {
  ClassifierReport report;
  std::string model_path;
};
TrainClassifierOutcome cmd_train_classifier(const RunConfig& config);

struct TrainAgentsOutcome {
  std::string checkpoint_dir;
  std::vector<EpochLog> epochs;
};
TrainAgentsOutcome cmd_train_agents(const RunConfig& config, bool resume,
                                    const std::string& classifier_path = "");

struct SegmentOutcome {
  std::string mask_path;
  std::string trace_path;
  TerminalReason reason;
  double final_sc_nodule;
};
SegmentOutcome cmd_segment(const RunConfig& config,
                           const std::string& model_path,
                           const std::string& classifier_path,
                           const std::string& image_path,
                           const std::string& box_path,
                           const std::string& out_dir,
                           const std::string& gt_mask_path = "");

struct EvalRow {
  std::string name;
  double dice_pct;
  double jac_pct;
  double hd;
  double asd;
};
struct EvalSummary {
  std::vector<EvalRow> rows;
  double dice_mean, dice_std;
  double jac_mean, jac_std;
  double hd_mean, hd_std;
  double asd_mean, asd_std;
};
EvalSummary cmd_eval(const std::string& pred_dir, const std::string& gt_dir,
                     const std::string& out_csv);

void cmd_dump_trace_plot(const std::string& trace_csv,
                         const std::string& svg_path);

// Trace CSV shared by segment and the acceptance harness.
void write_trace_csv(const std::string& path,
                     const std::vector<TraceRow>& trace, int k_agents);

}  // namespace eraseg
