#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "eraseg/classifier.hpp"
#include "eraseg/eraser.hpp"
#include "eraseg/grid.hpp"
#include "eraseg/neural.hpp"
#include "eraseg/superpixel.hpp"

namespace eraseg {

struct EpisodeConfig {
  int k_agents = 2;
  int state_patch = 16;     // observation window per axis
  int history = 3;          // stacked frames per agent
  double theta = 25.0;      // IDR1 threshold, intensity units
  int max_traversals = 2;
  double stop_score = 0.01;  // terminal when p(nodule) falls below this
  int n_segment = 100;
  int norm_target = 100;     // shortest-side normalization
  double slic_compactness = 10.0;
  int slic_iters = 10;

  void validate() const;
};

enum class Action : std::uint8_t { Pass = 0, Erase = 1 };

enum class TerminalReason { None, ScoreFlip, TraversalLimit, Exhausted };
const char* to_string(TerminalReason reason);

struct AgentRewards {
  int csr = 0;
  int idr1 = 0;
  int idr2 = 0;
  int total() const { return csr + idr1 + idr2; }
};

struct StepOutcome {
  std::vector<AgentRewards> rewards;  // one entry per agent, shared values
  bool terminal = false;
  TerminalReason reason = TerminalReason::None;
  double sc_normal = 0.0;
  double sc_nodule = 0.0;
  double wd1 = 0.0;
  double wd2 = 0.0;
  double wd3 = 0.0;
};

// One erasing episode over the normalized box region. Construction crops
// and normalizes the box, runs SLIC, orders regions inner-to-outer, splits
// them among agents and seeds the observation history. The classifier score
// uses the normal-tissue probability; the terminal flip tests the nodule
// probability against stop_score. All mutation goes through step().
class Episode {
 public:
  // `source` must have the normalized box extents (see build_eraser_source).
  Episode(const ImageGrid& image, const BoundingBox& box,
          const ImageGrid& source, const EpisodeConfig& config,
          const Classifier& classifier);

  // Per-agent stacked observation (history, patch, patch[, patch]),
  // intensities scaled to [0, 1], zero padding at borders.
  Tensor observe(int agent) const;

  // All agents' stacks concatenated channel-wise: (history*K, patch, ...).
  Tensor joint_observation() const;

  // Applies one action per agent (in agent order), advances cursors,
  // recomputes the score and rewards. Throws DataError when terminal.
  StepOutcome step(const std::vector<Action>& actions,
                   const Classifier& classifier, const ImageGrid& source);

  // Union of erased regions, nearest-neighbor mapped back to the native box
  // extents and embedded at the box origin in an image-sized mask.
  BinaryMask extract_mask(const Extents& image_dims) const;

  // Erased mask in normalized coordinates.
  BinaryMask normalized_mask() const;

  bool terminal() const { return terminal_; }
  TerminalReason reason() const { return reason_; }
  double sc_normal() const { return sc_normal_; }
  double sc_nodule() const { return 1.0 - sc_normal_; }
  double erased_fraction() const;
  int steps() const { return step_count_; }
  int k_agents() const { return config_.k_agents; }
  const SuperRegionMap& map() const { return map_; }
  const ImageGrid& current_image() const { return current_; }
  const ImageGrid& base_image() const { return base_; }
  const BoundingBox& box() const { return box_; }
  // Region the agent would act on next; nullopt when the agent is done.
  std::optional<int> cursor(int agent) const;

 private:
  void advance_cursor(int agent);
  void push_frames();
  Tensor cut_patch(int agent) const;

  EpisodeConfig config_;
  BoundingBox box_;
  ImageGrid base_;     // normalized, never mutated after construction
  ImageGrid current_;  // base_ with fills applied
  SuperRegionMap map_;
  std::vector<std::vector<std::size_t>> region_cells_;
  std::vector<std::vector<double>> region_sorted_;  // ascending intensities

  std::vector<std::vector<int>> agent_all_;      // fixed partition, rank order
  std::vector<std::vector<int>> agent_regions_;  // current traversal list
  std::vector<std::size_t> agent_pos_;           // index into agent_regions_
  std::vector<int> agent_pass_;                  // 1-based traversal counter
  std::vector<bool> agent_done_;
  std::vector<int> obs_region_;                  // region each agent observes

  std::vector<bool> erased_;
  std::size_t erased_cells_ = 0;

  std::vector<double> fg_sorted_;  // original intensities of erased cells
  std::vector<double> bg_sorted_;  // original intensities of the rest

  std::vector<std::deque<Tensor>> history_;

  double sc_normal_ = 0.0;
  double wd3_prev_ = 0.0;
  int step_count_ = 0;
  bool terminal_ = false;
  TerminalReason reason_ = TerminalReason::None;
};

}  // namespace eraseg
