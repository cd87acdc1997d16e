#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eraseg/classifier.hpp"
#include "eraseg/environment.hpp"
#include "eraseg/neural.hpp"
#include "eraseg/replay.hpp"

namespace eraseg {

// Q-network: shared two-block convolutional trunk over the (history*K)
// channel state tensor, then one dense head of two action values per agent.
MultiHeadNetwork build_qnet(int k_agents, int rank, int state_patch,
                            int history, Rng& rng);

// Per agent head: with probability epsilon a uniform random action, else
// the head's argmax Q value; exact ties choose passing.
std::vector<Action> select_actions(const MultiHeadNetwork& qnet,
                                   const Tensor& joint_obs, double epsilon,
                                   Rng& rng);

// Double-DQN target per head: the online network picks a*, the target
// network values it; terminal transitions truncate to the reward.
std::vector<double> ddqn_target(double reward, const Tensor& next_state,
                                bool terminal, const MultiHeadNetwork& qnet,
                                const MultiHeadNetwork& target_net,
                                double gamma);

// Importance-weighted mean squared TD error over a batch, summed across
// heads. Targets are treated as constants (no gradient flows through them).
struct BatchLoss {
  double loss = 0.0;
  MultiHeadGradients grads;
  std::vector<double> td_abs;  // per transition: mean |TD| over heads
};
BatchLoss ddqn_loss(const MultiHeadNetwork& qnet,
                    const MultiHeadNetwork& target_net,
                    std::span<const Transition* const> batch,
                    std::span<const double> weights, double gamma);

// One PER batch: ddqn_loss, one AdamW step on the online network,
// priorities updated to mean|TD| + floor for the sampled slots. Returns the
// scalar loss.
double train_step(MultiHeadNetwork& qnet, const MultiHeadNetwork& target_net,
                  ReplayBuffer& buffer, std::size_t batch, double beta,
                  double gamma, AdamW& opt, Rng& rng);

// Hard parameter copy onto the target network.
void sync_target(const MultiHeadNetwork& qnet, MultiHeadNetwork& target_net);

// Piecewise-constant n_segment schedule over epochs.
struct CurriculumSchedule {
  // (first epoch, n_segment), thresholds strictly increasing from 0.
  std::vector<std::pair<int, int>> stages;

  int n_segment_at(int epoch) const;
  void validate() const;

  static CurriculumSchedule defaults_2d();  // 0:100, 20:1000, 40:2000
  static CurriculumSchedule defaults_3d();  // + 60:5000, 80:10000
  // Thresholds multiplied by `factor` (deduplicated, kept increasing).
  CurriculumSchedule scaled(double factor) const;

  std::string to_string() const;
  static CurriculumSchedule parse(const std::string& text);
};

struct TrainHyper {
  int epochs = 100;
  double gamma = 0.9;
  double lr = 5e-5;
  double weight_decay = 1e-2;
  int batch = 32;
  std::size_t buffer_capacity = 8000;
  int train_every = 8;   // gradient step cadence in environment steps
  int warmup = 500;      // buffer size before training starts
  int sync_every = 1200; // gradient steps between target syncs
  double epsilon_start = 1.0;
  double epsilon_final = 0.1;
  double epsilon_fraction = 0.3;  // fraction of planned env steps to anneal over
  double per_alpha = 0.6;
  double per_beta0 = 0.4;         // annealed linearly to 1.0
  double per_floor = 1e-3;
  std::uint64_t seed = 0;
};

struct TrainItem {
  ImageGrid image;
  BoundingBox box;
};

// One row of the per-step trace (the data behind erasing curves).
struct TraceRow {
  int step = 0;
  std::vector<Action> actions;
  double sc_nodule = 0.0;
  double sc_normal = 0.0;
  double wd1 = 0.0, wd2 = 0.0, wd3 = 0.0;
  int csr = 0, idr1 = 0, idr2 = 0;
  int reward = 0;
  double erased_fraction = 0.0;
  double dice = -1.0;  // < 0 when no ground truth was supplied
};

struct EpisodeLog {
  int epoch = 0;
  int item = 0;
  int n_segment = 0;
  int steps = 0;
  double total_reward = 0.0;
  double final_sc_nodule = 0.0;
  double erased_fraction = 0.0;
  double mean_loss = 0.0;
  double epsilon = 0.0;
  TerminalReason reason = TerminalReason::None;
};

struct EpochLog {
  int epoch = 0;
  int n_segment = 0;
  double mean_reward = 0.0;
  double mean_final_sc_nodule = 0.0;
  double mean_erased_fraction = 0.0;
  double mean_loss = 0.0;
  double flip_rate = 0.0;
};

struct TrainResult {
  MultiHeadNetwork qnet;
  MultiHeadNetwork target_net;
  std::vector<EpisodeLog> episodes;
  std::vector<EpochLog> epochs;
  long gradient_steps = 0;
  long env_steps = 0;
  int epochs_done = 0;
  AdamW opt;
  std::string rng_state;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Progressive-curriculum training driver: every epoch picks n_segment from
// the schedule, runs one epsilon-greedy episode per item, pushes shared
// transitions and trains on the configured cadence once the buffer is warm.
TrainResult train(const std::vector<TrainItem>& dataset,
                  const Classifier& classifier,
                  const CurriculumSchedule& schedule, const TrainHyper& hyper,
                  const EpisodeConfig& episode_config,
                  const EpochCallback& on_epoch = nullptr);

struct InferResult {
  BinaryMask mask;
  std::vector<TraceRow> trace;
  TerminalReason reason = TerminalReason::None;
  double final_sc_nodule = 0.0;
};

// Greedy (epsilon = 0) rollout at the given episode configuration. Pass the
// ground-truth mask to add a per-step dice column to the trace.
InferResult infer(const MultiHeadNetwork& qnet, const ImageGrid& image,
                  const BoundingBox& box, const Classifier& classifier,
                  const EpisodeConfig& episode_config,
                  const BinaryMask* ground_truth = nullptr);

// Checkpoint directory: qnet.flnn, target.flnn, optimizer.state and
// manifest.txt (seed, schedule, hyperparameters, epochs done, RNG state).
struct Checkpoint {
  MultiHeadNetwork qnet;
  MultiHeadNetwork target_net;
  AdamW opt;
  TrainHyper hyper;
  CurriculumSchedule schedule;
  int epochs_done = 0;
  long gradient_steps = 0;
  long env_steps = 0;
  std::string rng_state;
};

void save_checkpoint(const std::string& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& dir);

// Resumable variant of train(); `resume` continues epoch numbering with a
// fresh replay buffer.
TrainResult train_resumable(const std::vector<TrainItem>& dataset,
                            const Classifier& classifier,
                            const CurriculumSchedule& schedule,
                            const TrainHyper& hyper,
                            const EpisodeConfig& episode_config,
                            Checkpoint* resume,
                            const EpochCallback& on_epoch = nullptr);

}  // namespace eraseg
