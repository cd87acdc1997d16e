#include "eraseg/learner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eraseg/metrics.hpp"

namespace eraseg {

MultiHeadNetwork build_qnet(int k_agents, int rank, int state_patch,
                            int history, Rng& rng) {
  const int in_channels = history * k_agents;
  const int pooled = state_patch / 4;
  if (pooled < 1) throw ConfigError("qnet: state patch too small to pool twice");
  int features = 32;
  for (int a = 0; a < rank; ++a) features *= pooled;

  std::vector<LayerSpec> trunk{
      LayerSpec::conv(rank, 3, in_channels, 16),
      LayerSpec::relu(),
      LayerSpec::maxpool(2),
      LayerSpec::conv(rank, 3, 16, 32),
      LayerSpec::relu(),
      LayerSpec::maxpool(2),
      LayerSpec::flatten(),
  };
  MultiHeadNetwork net;
  net.trunk = build_network(std::move(trunk), &rng);
  for (int a = 0; a < k_agents; ++a)
    net.heads.push_back(build_network({LayerSpec::dense(features, 2)}, &rng));
  return net;
}

namespace {

// Greedy action for one head; exact ties choose passing.
Action greedy_action(const Tensor& head_q) {
  return head_q[1] > head_q[0] ? Action::Erase : Action::Pass;
}

Tensor state_tensor(const std::vector<float>& flat,
                    const MultiHeadNetwork& qnet) {
  const LayerSpec& first = qnet.trunk.layers.front();
  const int channels = first.in_channels;
  const int rank = first.spatial_rank;
  const double spatial =
      static_cast<double>(flat.size()) / static_cast<double>(channels);
  const int patch =
      static_cast<int>(std::lround(std::pow(spatial, 1.0 / rank)));
  std::vector<int> shape{channels};
  for (int a = 0; a < rank; ++a) shape.push_back(patch);
  Tensor t(shape);
  if (t.size() != flat.size())
    throw DataError("replayed state size does not match the network input");
  for (std::size_t i = 0; i < flat.size(); ++i)
    t[i] = static_cast<double>(flat[i]);
  return t;
}

std::vector<float> to_float(const Tensor& t) {
  std::vector<float> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    out[i] = static_cast<float>(t[i]);
  return out;
}

}  // namespace

std::vector<Action> select_actions(const MultiHeadNetwork& qnet,
                                   const Tensor& joint_obs, double epsilon,
                                   Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0)
    throw ConfigError("select_actions: epsilon must be in [0, 1]");
  const std::vector<Tensor> heads = forward(qnet, joint_obs);
  std::vector<Action> actions(heads.size());
  for (std::size_t h = 0; h < heads.size(); ++h) {
    if (rng.bernoulli(epsilon))
      actions[h] = rng.bernoulli(0.5) ? Action::Erase : Action::Pass;
    else
      actions[h] = greedy_action(heads[h]);
  }
  return actions;
}

std::vector<double> ddqn_target(double reward, const Tensor& next_state,
                                bool terminal, const MultiHeadNetwork& qnet,
                                const MultiHeadNetwork& target_net,
                                double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw ConfigError("ddqn_target: gamma must be in [0, 1)");
  std::vector<double> y(static_cast<std::size_t>(qnet.head_count()), reward);
  if (terminal) return y;
  const std::vector<Tensor> online = forward(qnet, next_state);
  const std::vector<Tensor> valued = forward(target_net, next_state);
  for (std::size_t h = 0; h < online.size(); ++h) {
    const int a_star = static_cast<int>(greedy_action(online[h]));
    y[h] = reward + gamma * valued[h][static_cast<std::size_t>(a_star)];
  }
  return y;
}

BatchLoss ddqn_loss(const MultiHeadNetwork& qnet,
                    const MultiHeadNetwork& target_net,
                    std::span<const Transition* const> batch,
                    std::span<const double> weights, double gamma) {
  if (batch.empty() || batch.size() != weights.size())
    throw DataError("ddqn_loss: bad batch");
  const int heads = qnet.head_count();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  BatchLoss out;
  out.td_abs.resize(batch.size(), 0.0);
  bool first = true;

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& t = *batch[b];
    const double w = weights[b];
    const Tensor state = state_tensor(t.state, qnet);
    const Tensor next_state = state_tensor(t.next_state, qnet);
    const std::vector<double> y =
        ddqn_target(t.reward, next_state, t.terminal, qnet, target_net, gamma);

    MultiHeadCache cache;
    const std::vector<Tensor> q = forward(qnet, state, &cache);

    std::vector<Tensor> head_grads;
    head_grads.reserve(static_cast<std::size_t>(heads));
    double td_abs_sum = 0.0;
    for (int h = 0; h < heads; ++h) {
      const std::size_t action = t.actions[static_cast<std::size_t>(h)];
      const double td = y[static_cast<std::size_t>(h)] -
                        q[static_cast<std::size_t>(h)][action];
      out.loss += w * td * td * inv_batch;
      td_abs_sum += std::abs(td);
      Tensor g(q[static_cast<std::size_t>(h)].shape);
      g[action] = -2.0 * w * td * inv_batch;
      head_grads.push_back(std::move(g));
    }
    out.td_abs[b] = td_abs_sum / static_cast<double>(heads);

    MultiHeadGradients g = backward(qnet, cache, head_grads);
    if (first) {
      out.grads = std::move(g);
      first = false;
    } else {
      accumulate(out.grads, g);
    }
  }
  return out;
}

double train_step(MultiHeadNetwork& qnet, const MultiHeadNetwork& target_net,
                  ReplayBuffer& buffer, std::size_t batch, double beta,
                  double gamma, AdamW& opt, Rng& rng) {
  const ReplayBuffer::Sample sample = buffer.sample(batch, beta, rng);
  std::vector<const Transition*> transitions;
  transitions.reserve(batch);
  for (std::size_t index : sample.indices)
    transitions.push_back(&buffer.at(index));

  BatchLoss result =
      ddqn_loss(qnet, target_net, transitions, sample.weights, gamma);
  adamw_step(qnet, result.grads, opt);
  buffer.update_priorities(sample.indices, result.td_abs);
  return result.loss;
}

void sync_target(const MultiHeadNetwork& qnet, MultiHeadNetwork& target_net) {
  target_net = qnet;
}

// ---------------------------------------------------------------------------
// Curriculum
// ---------------------------------------------------------------------------

void CurriculumSchedule::validate() const {
  if (stages.empty()) throw ConfigError("curriculum: no stages");
  if (stages.front().first != 0)
    throw ConfigError("curriculum: first stage must start at epoch 0");
  for (std::size_t i = 1; i < stages.size(); ++i) {
    if (stages[i].first <= stages[i - 1].first)
      throw ConfigError("curriculum: epoch thresholds must be strictly increasing");
    if (stages[i].second <= stages[i - 1].second)
      throw ConfigError("curriculum: n_segment values must be strictly increasing");
  }
}

int CurriculumSchedule::n_segment_at(int epoch) const {
  int n = stages.front().second;
  for (const auto& [first_epoch, n_segment] : stages)
    if (epoch >= first_epoch) n = n_segment;
  return n;
}

CurriculumSchedule CurriculumSchedule::defaults_2d() {
  return CurriculumSchedule{{{0, 100}, {20, 1000}, {40, 2000}}};
}

CurriculumSchedule CurriculumSchedule::defaults_3d() {
  return CurriculumSchedule{
      {{0, 100}, {20, 1000}, {40, 2000}, {60, 5000}, {80, 10000}}};
}

CurriculumSchedule CurriculumSchedule::scaled(double factor) const {
  CurriculumSchedule out;
  for (const auto& [first_epoch, n_segment] : stages) {
    const int scaled_epoch =
        static_cast<int>(std::lround(first_epoch * factor));
    // Collapsed stages keep the later (harder) curriculum.
    if (!out.stages.empty() && out.stages.back().first == scaled_epoch)
      out.stages.back().second = n_segment;
    else
      out.stages.emplace_back(scaled_epoch, n_segment);
  }
  out.validate();
  return out;
}

std::string CurriculumSchedule::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (i) os << ',';
    os << stages[i].first << ':' << stages[i].second;
  }
  return os.str();
}

CurriculumSchedule CurriculumSchedule::parse(const std::string& text) {
  CurriculumSchedule out;
  std::istringstream is(text);
  std::string stage;
  while (std::getline(is, stage, ',')) {
    const std::size_t colon = stage.find(':');
    if (colon == std::string::npos)
      throw ConfigError("curriculum: expected epoch:n_segment, got '" + stage +
                        "'");
    try {
      out.stages.emplace_back(std::stoi(stage.substr(0, colon)),
                              std::stoi(stage.substr(colon + 1)));
    } catch (const std::exception&) {
      throw ConfigError("curriculum: bad stage '" + stage + "'");
    }
  }
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Training driver
// ---------------------------------------------------------------------------

namespace {

long planned_env_steps(const std::vector<TrainItem>& dataset,
                       const CurriculumSchedule& schedule,
                       const TrainHyper& hyper,
                       const EpisodeConfig& episode_config) {
  long total = 0;
  for (int e = 0; e < hyper.epochs; ++e) {
    const long n = schedule.n_segment_at(e);
    const long per_pass =
        (n + episode_config.k_agents - 1) / episode_config.k_agents;
    total += static_cast<long>(dataset.size()) * per_pass *
             episode_config.max_traversals;
  }
  return std::max(1l, total);
}

}  // namespace

TrainResult train_resumable(const std::vector<TrainItem>& dataset,
                            const Classifier& classifier,
                            const CurriculumSchedule& schedule,
                            const TrainHyper& hyper,
                            const EpisodeConfig& episode_config,
                            Checkpoint* resume, const EpochCallback& on_epoch) {
  if (dataset.empty()) throw DataError("train: empty dataset");
  schedule.validate();
  episode_config.validate();

  Rng rng(hyper.seed);
  TrainResult result;
  int start_epoch = 0;
  std::optional<AdamW> opt;

  if (resume && resume->epochs_done > 0) {
    result.qnet = std::move(resume->qnet);
    result.target_net = std::move(resume->target_net);
    opt = std::move(resume->opt);
    start_epoch = resume->epochs_done;
    result.gradient_steps = resume->gradient_steps;
    result.env_steps = resume->env_steps;
    rng.load_state(resume->rng_state);
  } else {
    const int rank = static_cast<int>(dataset.front().image.dims.size());
    result.qnet = build_qnet(episode_config.k_agents, rank,
                             episode_config.state_patch,
                             episode_config.history, rng);
    result.target_net = result.qnet;
    opt = make_adamw(result.qnet, hyper.lr, hyper.weight_decay);
  }

  ReplayBuffer buffer(hyper.buffer_capacity, hyper.per_alpha, hyper.per_floor);

  const long planned = planned_env_steps(dataset, schedule, hyper, episode_config);
  auto epsilon_at = [&](long env_step) {
    const double horizon = hyper.epsilon_fraction * static_cast<double>(planned);
    const double progress =
        horizon <= 0.0 ? 1.0
                       : std::min(1.0, static_cast<double>(env_step) / horizon);
    return hyper.epsilon_start +
           (hyper.epsilon_final - hyper.epsilon_start) * progress;
  };
  auto beta_at = [&](long env_step) {
    const double progress =
        std::min(1.0, static_cast<double>(env_step) / static_cast<double>(planned));
    return hyper.per_beta0 + (1.0 - hyper.per_beta0) * progress;
  };

  // Eraser sources depend only on (image, box, classifier); built lazily
  // once per item.
  std::vector<std::optional<ImageGrid>> sources(dataset.size());
  auto source_of = [&](std::size_t item) -> const ImageGrid& {
    if (!sources[item]) {
      const Extents norm = normalized_extents(dataset[item].box.extent,
                                              episode_config.norm_target);
      sources[item] =
          build_eraser_source(dataset[item].image, dataset[item].box, norm,
                              classifier)
              .patch;
    }
    return *sources[item];
  };

  for (int epoch = start_epoch; epoch < hyper.epochs; ++epoch) {
    EpisodeConfig config = episode_config;
    config.n_segment = schedule.n_segment_at(epoch);

    EpochLog epoch_log;
    epoch_log.epoch = epoch;
    epoch_log.n_segment = config.n_segment;
    int flips = 0;

    for (std::size_t item = 0; item < dataset.size(); ++item) {
      const ImageGrid& source = source_of(item);
      Episode episode(dataset[item].image, dataset[item].box, source, config,
                      classifier);

      EpisodeLog log;
      log.epoch = epoch;
      log.item = static_cast<int>(item);
      log.n_segment = config.n_segment;

      double loss_sum = 0.0;
      int loss_count = 0;
      Tensor obs = episode.joint_observation();
      while (!episode.terminal()) {
        const double epsilon = epsilon_at(result.env_steps);
        log.epsilon = epsilon;
        const std::vector<Action> actions =
            select_actions(result.qnet, obs, epsilon, rng);
        const StepOutcome outcome = episode.step(actions, classifier, source);
        Tensor next_obs = episode.joint_observation();

        Transition t;
        t.state = to_float(obs);
        t.next_state = to_float(next_obs);
        t.actions.resize(actions.size());
        for (std::size_t a = 0; a < actions.size(); ++a)
          t.actions[a] = static_cast<std::uint8_t>(actions[a]);
        t.reward = static_cast<float>(outcome.rewards.front().total());
        t.terminal = outcome.terminal;
        buffer.push(std::move(t));

        ++result.env_steps;
        log.total_reward += outcome.rewards.front().total();
        ++log.steps;

        if (buffer.size() >= static_cast<std::size_t>(hyper.warmup) &&
            result.env_steps % hyper.train_every == 0) {
          const double loss = train_step(
              result.qnet, result.target_net, buffer,
              static_cast<std::size_t>(hyper.batch), beta_at(result.env_steps),
              hyper.gamma, *opt, rng);
          loss_sum += loss;
          ++loss_count;
          ++result.gradient_steps;
          if (result.gradient_steps % hyper.sync_every == 0)
            sync_target(result.qnet, result.target_net);
        }

        obs = std::move(next_obs);
        log.final_sc_nodule = outcome.sc_nodule;
        log.erased_fraction = episode.erased_fraction();
        log.reason = outcome.reason;
      }
      log.mean_loss = loss_count ? loss_sum / loss_count : 0.0;

      epoch_log.mean_reward += log.total_reward;
      epoch_log.mean_final_sc_nodule += log.final_sc_nodule;
      epoch_log.mean_erased_fraction += log.erased_fraction;
      epoch_log.mean_loss += log.mean_loss;
      flips += log.reason == TerminalReason::ScoreFlip ? 1 : 0;
      result.episodes.push_back(log);
    }

    const double n_items = static_cast<double>(dataset.size());
    epoch_log.mean_reward /= n_items;
    epoch_log.mean_final_sc_nodule /= n_items;
    epoch_log.mean_erased_fraction /= n_items;
    epoch_log.mean_loss /= n_items;
    epoch_log.flip_rate = static_cast<double>(flips) / n_items;
    result.epochs.push_back(epoch_log);
    if (on_epoch) on_epoch(epoch_log);

    if (resume) {
      resume->qnet = result.qnet;
      resume->target_net = result.target_net;
      resume->opt = *opt;
      resume->epochs_done = epoch + 1;
      resume->gradient_steps = result.gradient_steps;
      resume->env_steps = result.env_steps;
      resume->rng_state = rng.save_state();
    }
  }
  result.epochs_done = hyper.epochs;
  result.opt = *opt;
  result.rng_state = rng.save_state();
  return result;
}

TrainResult train(const std::vector<TrainItem>& dataset,
                  const Classifier& classifier,
                  const CurriculumSchedule& schedule, const TrainHyper& hyper,
                  const EpisodeConfig& episode_config,
                  const EpochCallback& on_epoch) {
  return train_resumable(dataset, classifier, schedule, hyper, episode_config,
                         nullptr, on_epoch);
}

InferResult infer(const MultiHeadNetwork& qnet, const ImageGrid& image,
                  const BoundingBox& box, const Classifier& classifier,
                  const EpisodeConfig& episode_config,
                  const BinaryMask* ground_truth) {
  const Extents norm = normalized_extents(box.extent, episode_config.norm_target);
  const ImageGrid source =
      build_eraser_source(image, box, norm, classifier).patch;
  Episode episode(image, box, source, episode_config, classifier);

  Rng rng(0);  // unused at epsilon = 0; select_actions draws nothing
  InferResult result;
  while (!episode.terminal()) {
    const Tensor obs = episode.joint_observation();
    const std::vector<Action> actions = select_actions(qnet, obs, 0.0, rng);
    const StepOutcome outcome = episode.step(actions, classifier, source);

    TraceRow row;
    row.step = episode.steps();
    row.actions = actions;
    row.sc_nodule = outcome.sc_nodule;
    row.sc_normal = outcome.sc_normal;
    row.wd1 = outcome.wd1;
    row.wd2 = outcome.wd2;
    row.wd3 = outcome.wd3;
    row.csr = outcome.rewards.front().csr;
    row.idr1 = outcome.rewards.front().idr1;
    row.idr2 = outcome.rewards.front().idr2;
    row.reward = outcome.rewards.front().total();
    row.erased_fraction = episode.erased_fraction();
    if (ground_truth)
      row.dice = dice(episode.extract_mask(image.dims), *ground_truth);
    result.trace.push_back(std::move(row));

    result.final_sc_nodule = outcome.sc_nodule;
    result.reason = outcome.reason;
  }
  result.mask = episode.extract_mask(image.dims);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

namespace {

void save_optimizer(const std::string& path, const AdamW& opt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "FLOPT1\n";
  out << "steps " << opt.step_count << '\n';
  out << "lr " << opt.lr << '\n';
  out << "beta1 " << opt.beta1 << '\n';
  out << "beta2 " << opt.beta2 << '\n';
  out << "eps " << opt.eps << '\n';
  out << "weight_decay " << opt.weight_decay << '\n';
  out << "tensors " << opt.m.size() << '\n';
  out << "payload\n";
  auto dump = [&](const std::vector<Tensor>& list) {
    for (const Tensor& t : list)
      out.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  };
  dump(opt.m);
  dump(opt.v);
  if (!out) throw DataError("write failed: " + path);
}

AdamW load_optimizer(const std::string& path, const MultiHeadNetwork& net) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open optimizer state: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "FLOPT1")
    throw DataError(path + ": missing FLOPT1 magic");
  AdamW opt = make_adamw(net, 0.0);
  std::size_t tensors = 0;
  while (std::getline(in, line) && line != "payload") {
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "steps") is >> opt.step_count;
    else if (key == "lr") is >> opt.lr;
    else if (key == "beta1") is >> opt.beta1;
    else if (key == "beta2") is >> opt.beta2;
    else if (key == "eps") is >> opt.eps;
    else if (key == "weight_decay") is >> opt.weight_decay;
    else if (key == "tensors") is >> tensors;
    else throw DataError(path + ": unknown key '" + key + "'");
  }
  if (tensors != opt.m.size())
    throw DataError(path + ": tensor count does not match the network");
  auto slurp = [&](std::vector<Tensor>& list) {
    for (Tensor& t : list) {
      in.read(reinterpret_cast<char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
      if (static_cast<std::size_t>(in.gcount()) != t.data.size() * sizeof(double))
        throw DataError(path + ": truncated payload");
    }
  };
  slurp(opt.m);
  slurp(opt.v);
  return opt;
}

}  // namespace

void save_checkpoint(const std::string& dir, const Checkpoint& ckpt) {
  std::filesystem::create_directories(dir);
  save_network(dir + "/qnet.flnn", ckpt.qnet);
  save_network(dir + "/target.flnn", ckpt.target_net);
  save_optimizer(dir + "/optimizer.state", ckpt.opt);

  std::ofstream manifest(dir + "/manifest.txt");
  if (!manifest) throw DataError("cannot open for writing: " + dir + "/manifest.txt");
  manifest << "seed " << ckpt.hyper.seed << '\n'
           << "epochs " << ckpt.hyper.epochs << '\n'
           << "epochs_done " << ckpt.epochs_done << '\n'
           << "gradient_steps " << ckpt.gradient_steps << '\n'
           << "env_steps " << ckpt.env_steps << '\n'
           << "gamma " << ckpt.hyper.gamma << '\n'
           << "lr " << ckpt.hyper.lr << '\n'
           << "weight_decay " << ckpt.hyper.weight_decay << '\n'
           << "batch " << ckpt.hyper.batch << '\n'
           << "buffer_capacity " << ckpt.hyper.buffer_capacity << '\n'
           << "train_every " << ckpt.hyper.train_every << '\n'
           << "warmup " << ckpt.hyper.warmup << '\n'
           << "sync_every " << ckpt.hyper.sync_every << '\n'
           << "epsilon_start " << ckpt.hyper.epsilon_start << '\n'
           << "epsilon_final " << ckpt.hyper.epsilon_final << '\n'
           << "epsilon_fraction " << ckpt.hyper.epsilon_fraction << '\n'
           << "per_alpha " << ckpt.hyper.per_alpha << '\n'
           << "per_beta0 " << ckpt.hyper.per_beta0 << '\n'
           << "per_floor " << ckpt.hyper.per_floor << '\n'
           << "curriculum " << ckpt.schedule.to_string() << '\n'
           << "rng_state " << ckpt.rng_state << '\n';
}

Checkpoint load_checkpoint(const std::string& dir) {
  Checkpoint ckpt;
  ckpt.qnet = load_network(dir + "/qnet.flnn");
  ckpt.target_net = load_network(dir + "/target.flnn");
  ckpt.opt = load_optimizer(dir + "/optimizer.state", ckpt.qnet);

  std::ifstream manifest(dir + "/manifest.txt");
  if (!manifest) throw DataError("cannot open checkpoint manifest: " + dir);
  std::string line;
  while (std::getline(manifest, line)) {
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "seed") is >> ckpt.hyper.seed;
    else if (key == "epochs") is >> ckpt.hyper.epochs;
    else if (key == "epochs_done") is >> ckpt.epochs_done;
    else if (key == "gradient_steps") is >> ckpt.gradient_steps;
    else if (key == "env_steps") is >> ckpt.env_steps;
    else if (key == "gamma") is >> ckpt.hyper.gamma;
    else if (key == "lr") is >> ckpt.hyper.lr;
    else if (key == "weight_decay") is >> ckpt.hyper.weight_decay;
    else if (key == "batch") is >> ckpt.hyper.batch;
    else if (key == "buffer_capacity") is >> ckpt.hyper.buffer_capacity;
    else if (key == "train_every") is >> ckpt.hyper.train_every;
    else if (key == "warmup") is >> ckpt.hyper.warmup;
    else if (key == "sync_every") is >> ckpt.hyper.sync_every;
    else if (key == "epsilon_start") is >> ckpt.hyper.epsilon_start;
    else if (key == "epsilon_final") is >> ckpt.hyper.epsilon_final;
    else if (key == "epsilon_fraction") is >> ckpt.hyper.epsilon_fraction;
    else if (key == "per_alpha") is >> ckpt.hyper.per_alpha;
    else if (key == "per_beta0") is >> ckpt.hyper.per_beta0;
    else if (key == "per_floor") is >> ckpt.hyper.per_floor;
    else if (key == "curriculum") {
      std::string text;
      is >> text;
      ckpt.schedule = CurriculumSchedule::parse(text);
    } else if (key == "rng_state") {
      std::string rest;
      std::getline(is, rest);
      ckpt.rng_state = rest.empty() ? rest : rest.substr(1);
    } else if (!key.empty()) {
      throw DataError(dir + "/manifest.txt: unknown key '" + key + "'");
    }
  }
  return ckpt;
}

}  // namespace eraseg
