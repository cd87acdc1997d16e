#include "eraseg/environment.hpp"

#include <algorithm>
#include <cmath>

#include "eraseg/metrics.hpp"

namespace eraseg {

void EpisodeConfig::validate() const {
  if (k_agents < 1) throw ConfigError("episode: k_agents must be >= 1");
  if (history < 1) throw ConfigError("episode: history must be >= 1");
  if (!(theta > 0.0)) throw ConfigError("episode: theta must be > 0");
  if (!(stop_score > 0.0 && stop_score < 1.0))
    throw ConfigError("episode: stop_score must be in (0, 1)");
  if (max_traversals < 1)
    throw ConfigError("episode: max_traversals must be >= 1");
  if (state_patch < 1) throw ConfigError("episode: state_patch must be >= 1");
  if (n_segment < 1) throw ConfigError("episode: n_segment must be >= 1");
  if (norm_target < 1) throw ConfigError("episode: norm_target must be >= 1");
}

const char* to_string(TerminalReason reason) {
  switch (reason) {
    case TerminalReason::None: return "none";
    case TerminalReason::ScoreFlip: return "score-flip";
    case TerminalReason::TraversalLimit: return "traversal-limit";
    case TerminalReason::Exhausted: return "exhausted";
  }
  return "?";
}

Episode::Episode(const ImageGrid& image, const BoundingBox& box,
                 const ImageGrid& source, const EpisodeConfig& config,
                 const Classifier& classifier)
    : config_(config), box_(box) {
  config_.validate();
  box_.validate_annotation(image.dims);

  base_ = resize_shortest_side(crop(image, box_), config_.norm_target);
  if (source.dims != base_.dims)
    throw DataError("episode: eraser source dims differ from normalized box");
  current_ = base_;

  map_ = slic(base_, config_.n_segment, config_.slic_compactness,
              config_.slic_iters);

  std::array<double, 3> center{0.0, 0.0, 0.0};
  for (int a = 0; a < base_.rank(); ++a)
    center[a] = 0.5 * static_cast<double>(base_.dims[a] - 1);
  traversal_order(map_, center);

  const auto partition = partition_among_agents(map_, config_.k_agents);

  // Each agent visits its own regions in global inner-to-outer order.
  agent_all_.resize(partition.size());
  for (std::size_t a = 0; a < partition.size(); ++a) {
    agent_all_[a] = partition[a];
    std::sort(agent_all_[a].begin(), agent_all_[a].end(), [&](int x, int y) {
      return map_.regions[x].traversal_rank < map_.regions[y].traversal_rank;
    });
  }
  agent_regions_ = agent_all_;
  agent_pos_.assign(agent_all_.size(), 0);
  agent_pass_.assign(agent_all_.size(), 1);
  agent_done_.assign(agent_all_.size(), false);
  obs_region_.resize(agent_all_.size());
  for (std::size_t a = 0; a < agent_all_.size(); ++a)
    obs_region_[a] = agent_all_[a].front();

  const int R = map_.region_count();
  region_cells_.resize(static_cast<std::size_t>(R));
  region_sorted_.resize(static_cast<std::size_t>(R));
  for (std::size_t i = 0; i < map_.labels.size(); ++i)
    region_cells_[static_cast<std::size_t>(map_.labels[i])].push_back(i);
  for (int r = 0; r < R; ++r) {
    auto& sorted = region_sorted_[static_cast<std::size_t>(r)];
    sorted.reserve(region_cells_[static_cast<std::size_t>(r)].size());
    for (std::size_t i : region_cells_[static_cast<std::size_t>(r)])
      sorted.push_back(base_.data[i]);
    std::sort(sorted.begin(), sorted.end());
  }

  erased_.assign(static_cast<std::size_t>(R), false);
  bg_sorted_ = base_.data;
  std::sort(bg_sorted_.begin(), bg_sorted_.end());

  history_.resize(agent_all_.size());
  for (int repeat = 0; repeat < config_.history; ++repeat) push_frames();

  sc_normal_ = classifier.score(current_).normal;
}

Tensor Episode::cut_patch(int agent) const {
  const int rank = base_.rank();
  const int p = config_.state_patch;
  const auto& centroid =
      map_.regions[static_cast<std::size_t>(obs_region_[agent])].centroid;
  std::array<int, 3> start{0, 0, 0};
  for (int a = 0; a < rank; ++a)
    start[a] = static_cast<int>(std::lround(centroid[a])) - p / 2;

  std::vector<int> shape(static_cast<std::size_t>(rank), p);
  Tensor out(shape);
  if (rank == 2) {
    std::size_t flat = 0;
    for (int r = 0; r < p; ++r) {
      const int ir = start[0] + r;
      for (int c = 0; c < p; ++c, ++flat) {
        const int ic = start[1] + c;
        if (ir < 0 || ir >= base_.dims[0] || ic < 0 || ic >= base_.dims[1])
          continue;  // zero padding
        out[flat] = current_.at2(ir, ic) / 255.0;
      }
    }
  } else {
    std::size_t flat = 0;
    for (int s = 0; s < p; ++s) {
      const int is = start[0] + s;
      for (int r = 0; r < p; ++r) {
        const int ir = start[1] + r;
        for (int c = 0; c < p; ++c, ++flat) {
          const int ic = start[2] + c;
          if (is < 0 || is >= base_.dims[0] || ir < 0 || ir >= base_.dims[1] ||
              ic < 0 || ic >= base_.dims[2])
            continue;
          out[flat] = current_.at3(is, ir, ic) / 255.0;
        }
      }
    }
  }
  return out;
}

void Episode::push_frames() {
  for (std::size_t a = 0; a < history_.size(); ++a) {
    history_[a].push_back(cut_patch(static_cast<int>(a)));
    while (static_cast<int>(history_[a].size()) > config_.history)
      history_[a].pop_front();
  }
}

Tensor Episode::observe(int agent) const {
  const auto& frames = history_[static_cast<std::size_t>(agent)];
  std::vector<int> shape{config_.history};
  for (int d : frames.front().shape) shape.push_back(d);
  Tensor out(shape);
  std::size_t offset = 0;
  for (const Tensor& frame : frames) {  // oldest first
    std::copy(frame.data.begin(), frame.data.end(), out.data.begin() + offset);
    offset += frame.size();
  }
  return out;
}

Tensor Episode::joint_observation() const {
  const Tensor first = observe(0);
  std::vector<int> shape = first.shape;
  shape[0] = config_.history * config_.k_agents;
  Tensor out(shape);
  std::size_t offset = 0;
  for (int a = 0; a < config_.k_agents; ++a) {
    const Tensor obs = observe(a);
    std::copy(obs.data.begin(), obs.data.end(), out.data.begin() + offset);
    offset += obs.size();
  }
  return out;
}

void Episode::advance_cursor(int agent) {
  const std::size_t a = static_cast<std::size_t>(agent);
  ++agent_pos_[a];
  for (;;) {
    if (agent_pos_[a] < agent_regions_[a].size()) {
      obs_region_[a] = agent_regions_[a][agent_pos_[a]];
      return;
    }
    if (agent_pass_[a] >= config_.max_traversals) {
      agent_done_[a] = true;
      return;
    }
    // Next traversal revisits only the still-unerased regions, same order.
    ++agent_pass_[a];
    std::vector<int> remaining;
    for (int r : agent_all_[a])
      if (!erased_[static_cast<std::size_t>(r)]) remaining.push_back(r);
    if (remaining.empty()) {
      agent_done_[a] = true;
      return;
    }
    agent_regions_[a] = std::move(remaining);
    agent_pos_[a] = 0;
  }
}

StepOutcome Episode::step(const std::vector<Action>& actions,
                          const Classifier& classifier,
                          const ImageGrid& source) {
  if (terminal_) throw DataError("step: episode already terminal");
  if (actions.size() != static_cast<std::size_t>(config_.k_agents))
    throw DataError("step: need one action per agent");
  if (source.dims != base_.dims)
    throw DataError("step: eraser source dims differ from normalized box");

  const bool fg_prev_empty = fg_sorted_.empty();
  const std::vector<double> fg_prev = fg_sorted_;
  const double wd2 = wd3_prev_;

  for (int agent = 0; agent < config_.k_agents; ++agent) {
    const std::size_t a = static_cast<std::size_t>(agent);
    if (agent_done_[a]) continue;
    const int region = agent_regions_[a][agent_pos_[a]];
    const std::size_t r = static_cast<std::size_t>(region);
    if (actions[a] == Action::Erase && !erased_[r]) {
      for (std::size_t cell : region_cells_[r])
        current_.data[cell] = source.data[cell];
      erased_[r] = true;
      erased_cells_ += region_cells_[r].size();

      // FG gains the region's original intensities, BG loses them.
      const auto& values = region_sorted_[r];
      const std::size_t old_size = fg_sorted_.size();
      fg_sorted_.insert(fg_sorted_.end(), values.begin(), values.end());
      std::inplace_merge(fg_sorted_.begin(),
                         fg_sorted_.begin() + static_cast<std::ptrdiff_t>(old_size),
                         fg_sorted_.end());
      std::vector<double> kept;
      kept.reserve(bg_sorted_.size() - values.size());
      std::set_difference(bg_sorted_.begin(), bg_sorted_.end(), values.begin(),
                          values.end(), std::back_inserter(kept));
      bg_sorted_ = std::move(kept);
    }
  }

  for (int agent = 0; agent < config_.k_agents; ++agent)
    if (!agent_done_[static_cast<std::size_t>(agent)]) advance_cursor(agent);

  push_frames();

  const double sc_new = classifier.score(current_).normal;

  const double wd1 =
      fg_prev_empty ? 0.0 : wasserstein_1d_sorted(fg_prev, fg_sorted_);
  const double wd3 = (fg_sorted_.empty() || bg_sorted_.empty())
                         ? 0.0
                         : wasserstein_1d_sorted(bg_sorted_, fg_sorted_);

  AgentRewards rewards;
  if (sc_new > sc_normal_)
    rewards.csr = 1;
  else if (sc_new < sc_normal_)
    rewards.csr = -1;

  if (!fg_prev_empty && wd1 > 0.0) rewards.idr1 = wd1 <= config_.theta ? 1 : -1;

  if (wd3 > wd2)
    rewards.idr2 = 1;
  else if (wd3 < wd2)
    rewards.idr2 = -1;

  bool all_done = true;
  for (bool done : agent_done_) all_done = all_done && done;
  const bool all_erased = erased_cells_ == current_.size();

  if (1.0 - sc_new < config_.stop_score) {
    terminal_ = true;
    reason_ = TerminalReason::ScoreFlip;
  } else if (all_erased) {
    terminal_ = true;
    reason_ = TerminalReason::Exhausted;
  } else if (all_done) {
    terminal_ = true;
    reason_ = TerminalReason::TraversalLimit;
  }

  sc_normal_ = sc_new;
  wd3_prev_ = wd3;
  ++step_count_;

  StepOutcome outcome;
  outcome.rewards.assign(static_cast<std::size_t>(config_.k_agents), rewards);
  outcome.terminal = terminal_;
  outcome.reason = reason_;
  outcome.sc_normal = sc_new;
  outcome.sc_nodule = 1.0 - sc_new;
  outcome.wd1 = wd1;
  outcome.wd2 = wd2;
  outcome.wd3 = wd3;
  return outcome;
}

BinaryMask Episode::normalized_mask() const {
  BinaryMask mask(base_.dims);
  for (std::size_t r = 0; r < erased_.size(); ++r)
    if (erased_[r])
      for (std::size_t cell : region_cells_[r]) mask.bits[cell] = 1;
  return mask;
}

BinaryMask Episode::extract_mask(const Extents& image_dims) const {
  box_.validate_annotation(image_dims);
  const BinaryMask native_box = resample_nearest(normalized_mask(), box_.extent);
  BinaryMask out(image_dims);
  embed(out, box_, native_box);
  return out;
}

double Episode::erased_fraction() const {
  return static_cast<double>(erased_cells_) /
         static_cast<double>(current_.size());
}

std::optional<int> Episode::cursor(int agent) const {
  const std::size_t a = static_cast<std::size_t>(agent);
  if (agent_done_[a]) return std::nullopt;
  return agent_regions_[a][agent_pos_[a]];
}

}  // namespace eraseg
