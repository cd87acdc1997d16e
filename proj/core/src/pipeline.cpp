#include "eraseg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "eraseg/eraser.hpp"
#include "eraseg/metrics.hpp"

namespace fs = std::filesystem;

namespace eraseg {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

int to_int(const std::string& v, const std::string& where) {
  try {
    std::size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected integer, got '" + v + "'");
  }
}

double to_double(const std::string& v, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected number, got '" + v + "'");
  }
}

std::uint64_t to_seed(const std::string& v, const std::string& where) {
  try {
    std::size_t pos = 0;
    const unsigned long long out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected unsigned integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(where + ": expected true/false, got '" + v + "'");
}

std::vector<int> to_ints(const std::string& v, std::size_t min_n,
                         std::size_t max_n, const std::string& where) {
  std::istringstream is(v);
  std::vector<int> out;
  int x = 0;
  while (is >> x) out.push_back(x);
  if (out.size() < min_n || out.size() > max_n)
    throw ConfigError(where + ": expected " + std::to_string(min_n) + ".." +
                      std::to_string(max_n) + " integers, got '" + v + "'");
  return out;
}

std::pair<double, double> to_range(const std::string& v,
                                   const std::string& where) {
  std::istringstream is(v);
  double lo = 0.0, hi = 0.0;
  if (!(is >> lo >> hi))
    throw ConfigError(where + ": expected two numbers, got '" + v + "'");
  std::string rest;
  if (is >> rest)
    throw ConfigError(where + ": expected two numbers, got '" + v + "'");
  return {lo, hi};
}

// One switchboard shared by the file parser and CLI overrides.
void set_value(RunConfig& c, const std::string& section, const std::string& key,
               const std::string& value, const std::string& origin) {
  const std::string where = origin + ": [" + section + "] " + key;
  if (section == "data") {
    if (key == "root") c.data_root = value;
    else throw ConfigError(where + ": unknown key");
  } else if (section == "synthetic") {
    if (key == "count_train") c.count_train = to_int(value, where);
    else if (key == "count_val") c.count_val = to_int(value, where);
    else if (key == "count_test") c.count_test = to_int(value, where);
    else if (key == "dims") {
      const auto dims = to_ints(value, 2, 3, where);
      c.synthetic.dims = dims;
    } else if (key == "nodule_count") {
      const auto n = to_ints(value, 2, 2, where);
      c.synthetic.nodule_count_min = n[0];
      c.synthetic.nodule_count_max = n[1];
    } else if (key == "radius") {
      std::tie(c.synthetic.radius_min, c.synthetic.radius_max) =
          to_range(value, where);
    } else if (key == "fg_mean") {
      std::tie(c.synthetic.fg_mean_min, c.synthetic.fg_mean_max) =
          to_range(value, where);
    } else if (key == "bg_mean") {
      std::tie(c.synthetic.bg_mean_min, c.synthetic.bg_mean_max) =
          to_range(value, where);
    } else if (key == "mean_margin") c.synthetic.mean_margin = to_double(value, where);
    else if (key == "noise") c.synthetic.noise = to_double(value, where);
    else if (key == "irregularity") c.synthetic.irregularity = to_double(value, where);
    else if (key == "seed") c.synthetic.seed = to_seed(value, where);
    else throw ConfigError(where + ": unknown key");
  } else if (section == "classifier") {
    if (key == "input_size") c.classifier.input_size = to_int(value, where);
    else if (key == "epochs") c.classifier.epochs = to_int(value, where);
    else if (key == "batch") c.classifier.batch = to_int(value, where);
    else if (key == "lr") c.classifier.lr = to_double(value, where);
    else if (key == "weight_decay") c.classifier.weight_decay = to_double(value, where);
    else if (key == "holdout") c.classifier.holdout = to_double(value, where);
    else if (key == "augment") c.classifier.augment = to_bool(value, where);
    else if (key == "seed") c.classifier.seed = to_seed(value, where);
    else if (key == "pos_per_image") c.pos_per_image = to_int(value, where);
    else if (key == "neg_per_image") c.neg_per_image = to_int(value, where);
    else if (key == "fill_per_image") c.fill_per_image = to_int(value, where);
    else if (key == "fill_n_segment") c.fill_n_segment = to_int(value, where);
    else if (key == "bootstrap_epochs") c.bootstrap_epochs = to_int(value, where);
    else throw ConfigError(where + ": unknown key");
  } else if (section == "rl") {
    if (key == "k_agents") c.episode.k_agents = to_int(value, where);
    else if (key == "gamma") c.rl.gamma = to_double(value, where);
    else if (key == "lr") c.rl.lr = to_double(value, where);
    else if (key == "weight_decay") c.rl.weight_decay = to_double(value, where);
    else if (key == "batch") c.rl.batch = to_int(value, where);
    else if (key == "buffer_capacity")
      c.rl.buffer_capacity = static_cast<std::size_t>(to_int(value, where));
    else if (key == "train_every") c.rl.train_every = to_int(value, where);
    else if (key == "warmup") c.rl.warmup = to_int(value, where);
    else if (key == "sync_every") c.rl.sync_every = to_int(value, where);
    else if (key == "epsilon_start") c.rl.epsilon_start = to_double(value, where);
    else if (key == "epsilon_final") c.rl.epsilon_final = to_double(value, where);
    else if (key == "epsilon_fraction") c.rl.epsilon_fraction = to_double(value, where);
    else if (key == "per_alpha") c.rl.per_alpha = to_double(value, where);
    else if (key == "per_beta0") c.rl.per_beta0 = to_double(value, where);
    else if (key == "per_floor") c.rl.per_floor = to_double(value, where);
    else if (key == "seed") c.rl.seed = to_seed(value, where);
    else if (key == "epochs") c.rl.epochs = to_int(value, where);
    else if (key == "curriculum") {
      CurriculumSchedule::parse(value);  // validates
      c.curriculum = value;
    } else if (key == "epoch_scale") c.epoch_scale = to_double(value, where);
    else if (key == "theta") c.episode.theta = to_double(value, where);
    else if (key == "max_traversals") c.episode.max_traversals = to_int(value, where);
    else if (key == "stop_score") c.episode.stop_score = to_double(value, where);
    else if (key == "state_patch") c.episode.state_patch = to_int(value, where);
    else if (key == "history") c.episode.history = to_int(value, where);
    else if (key == "norm_target") c.episode.norm_target = to_int(value, where);
    else if (key == "slic_compactness")
      c.episode.slic_compactness = to_double(value, where);
    else if (key == "slic_iters") c.episode.slic_iters = to_int(value, where);
    else throw ConfigError(where + ": unknown key");
  } else if (section == "output") {
    if (key == "dir") c.output_dir = value;
    else throw ConfigError(where + ": unknown key");
  } else {
    throw ConfigError(origin + ": unknown section [" + section + "]");
  }
}

}  // namespace

CurriculumSchedule RunConfig::scaled_schedule() const {
  return CurriculumSchedule::parse(curriculum).scaled(epoch_scale);
}

int RunConfig::scaled_epochs() const {
  return std::max(1, static_cast<int>(std::lround(rl.epochs * epoch_scale)));
}

int RunConfig::final_n_segment() const {
  return scaled_schedule().stages.back().second;
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "[data]\n"
     << "root = " << data_root << "\n\n";
  os << "[synthetic]\n"
     << "count_train = " << count_train << '\n'
     << "count_val = " << count_val << '\n'
     << "count_test = " << count_test << '\n'
     << "dims =";
  for (int d : synthetic.dims) os << ' ' << d;
  os << '\n'
     << "nodule_count = " << synthetic.nodule_count_min << ' '
     << synthetic.nodule_count_max << '\n'
     << "radius = " << fmt(synthetic.radius_min) << ' '
     << fmt(synthetic.radius_max) << '\n'
     << "fg_mean = " << fmt(synthetic.fg_mean_min) << ' '
     << fmt(synthetic.fg_mean_max) << '\n'
     << "bg_mean = " << fmt(synthetic.bg_mean_min) << ' '
     << fmt(synthetic.bg_mean_max) << '\n'
     << "mean_margin = " << fmt(synthetic.mean_margin) << '\n'
     << "noise = " << fmt(synthetic.noise) << '\n'
     << "irregularity = " << fmt(synthetic.irregularity) << '\n'
     << "seed = " << synthetic.seed << "\n\n";
  os << "[classifier]\n"
     << "input_size = " << classifier.input_size << '\n'
     << "epochs = " << classifier.epochs << '\n'
     << "batch = " << classifier.batch << '\n'
     << "lr = " << fmt(classifier.lr) << '\n'
     << "weight_decay = " << fmt(classifier.weight_decay) << '\n'
     << "holdout = " << fmt(classifier.holdout) << '\n'
     << "augment = " << (classifier.augment ? "true" : "false") << '\n'
     << "seed = " << classifier.seed << '\n'
     << "pos_per_image = " << pos_per_image << '\n'
     << "neg_per_image = " << neg_per_image << '\n'
     << "fill_per_image = " << fill_per_image << '\n'
     << "fill_n_segment = " << fill_n_segment << '\n'
     << "bootstrap_epochs = " << bootstrap_epochs << "\n\n";
  os << "[rl]\n"
     << "k_agents = " << episode.k_agents << '\n'
     << "gamma = " << fmt(rl.gamma) << '\n'
     << "lr = " << fmt(rl.lr) << '\n'
     << "weight_decay = " << fmt(rl.weight_decay) << '\n'
     << "batch = " << rl.batch << '\n'
     << "buffer_capacity = " << rl.buffer_capacity << '\n'
     << "train_every = " << rl.train_every << '\n'
     << "warmup = " << rl.warmup << '\n'
     << "sync_every = " << rl.sync_every << '\n'
     << "epsilon_start = " << fmt(rl.epsilon_start) << '\n'
     << "epsilon_final = " << fmt(rl.epsilon_final) << '\n'
     << "epsilon_fraction = " << fmt(rl.epsilon_fraction) << '\n'
     << "per_alpha = " << fmt(rl.per_alpha) << '\n'
     << "per_beta0 = " << fmt(rl.per_beta0) << '\n'
     << "per_floor = " << fmt(rl.per_floor) << '\n'
     << "seed = " << rl.seed << '\n'
     << "epochs = " << rl.epochs << '\n'
     << "curriculum = " << curriculum << '\n'
     << "epoch_scale = " << fmt(epoch_scale) << '\n'
     << "theta = " << fmt(episode.theta) << '\n'
     << "max_traversals = " << episode.max_traversals << '\n'
     << "stop_score = " << fmt(episode.stop_score) << '\n'
     << "state_patch = " << episode.state_patch << '\n'
     << "history = " << episode.history << '\n'
     << "norm_target = " << episode.norm_target << '\n'
     << "slic_compactness = " << fmt(episode.slic_compactness) << '\n'
     << "slic_iters = " << episode.slic_iters << "\n\n";
  os << "[output]\n"
     << "dir = " << output_dir << '\n';
  return os.str();
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig config;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                          ": malformed section header");
      section = t.substr(1, t.size() - 2);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected key = value");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": key outside any section");
    set_value(config, section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)),
              origin);
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override must look like section.key=value, got '" +
                      assignment + "'");
  set_value(config, trim(assignment.substr(0, dot)),
            trim(assignment.substr(dot + 1, eq - dot - 1)),
            trim(assignment.substr(eq + 1)), "--set " + assignment);
}

// ---------------------------------------------------------------------------
// Dataset I/O
// ---------------------------------------------------------------------------

namespace {

std::string image_extension(int rank) { return rank == 2 ? ".pgm" : ".flv"; }

void write_resolved_config(const RunConfig& config, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir + "/config_used.cfg");
  if (!out) throw DataError("cannot write resolved config in " + dir);
  out << config.to_text();
}

}  // namespace

std::vector<DatasetEntry> load_dataset_split(const std::string& root,
                                             const std::string& split,
                                             bool want_masks) {
  const fs::path dir = fs::path(root) / split;
  if (!fs::is_directory(dir))
    throw DataError("dataset split directory not found: " + dir.string());

  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    const std::string ext = entry.path().extension().string();
    if ((ext == ".pgm" || ext == ".flv") &&
        name.find("_mask") == std::string::npos)
      stems.push_back(entry.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());

  std::vector<DatasetEntry> out;
  out.reserve(stems.size());
  for (const std::string& stem : stems) {
    DatasetEntry e;
    e.stem = stem;
    const fs::path base = dir / stem;
    const std::string pgm = base.string() + ".pgm";
    const std::string flv = base.string() + ".flv";
    e.image = fs::exists(pgm) ? read_image(pgm) : read_image(flv);
    e.box = read_box(base.string() + ".box");
    if (want_masks) {
      const std::string mask_pgm = base.string() + "_mask.pgm";
      const std::string mask_flv = base.string() + "_mask.flv";
      e.mask = read_mask(fs::exists(mask_pgm) ? mask_pgm : mask_flv);
    }
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

void cmd_gen_data(const RunConfig& config) {
  config.synthetic.validate();
  const fs::path root = config.data_root;
  fs::create_directories(root);

  std::ofstream manifest(root / "manifest.txt");
  if (!manifest) throw DataError("cannot write manifest in " + root.string());
  manifest << "generator_seed " << config.synthetic.seed << '\n';

  const int rank = static_cast<int>(config.synthetic.dims.size());
  const std::string ext = image_extension(rank);

  std::uint64_t index = 0;
  auto emit_split = [&](const std::string& split, int count) {
    const fs::path dir = root / split;
    fs::create_directories(dir);
    for (int i = 0; i < count; ++i, ++index) {
      SyntheticSpec spec = config.synthetic;
      spec.seed = config.synthetic.seed + index * 2654435761ull;
      const SyntheticSample sample = generate_synthetic(spec);
      char stem[32];
      std::snprintf(stem, sizeof(stem), "img_%04d", i);
      const fs::path base = dir / stem;
      write_image(base.string() + ext, sample.image);
      write_mask(base.string() + "_mask" + ext, sample.mask);
      write_box(base.string() + ".box", sample.box);
      manifest << split << '/' << stem << ext << '\n'
               << split << '/' << stem << "_mask" << ext << '\n'
               << split << '/' << stem << ".box" << '\n';
    }
  };
  emit_split("train", config.count_train);
  emit_split("val", config.count_val);
  emit_split("test", config.count_test);
  write_resolved_config(config, root.string());
}

// ---------------------------------------------------------------------------
// train-classifier
// ---------------------------------------------------------------------------

TrainClassifierOutcome cmd_train_classifier(const RunConfig& config) {
  const auto dataset =
      load_dataset_split(config.data_root, "train", /*want_masks=*/false);
  if (dataset.empty()) throw DataError("train split is empty");

  const int rank = static_cast<int>(dataset.front().image.dims.size());
  ClassifierConfig clf_config = config.classifier;
  clf_config.rank = rank;

  // Stage one: patches mined from box geometry alone.
  std::vector<PseudoSample> mined;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto samples =
        mine_pseudo_samples(dataset[i].image, dataset[i].box,
                            config.pos_per_image, config.neg_per_image,
                            clf_config.seed + i * 7919ull);
    std::move(samples.begin(), samples.end(), std::back_inserter(mined));
  }

  ClassifierConfig bootstrap_config = clf_config;
  bootstrap_config.epochs = config.bootstrap_epochs;
  auto [bootstrap, bootstrap_report] = train_classifier(mined, bootstrap_config);
  (void)bootstrap_report;

  // Stage two: fill-ratio augmentation with the classifier-selected eraser
  // source, then the final model over the full sample set.
  std::vector<PseudoSample> samples = mined;
  if (config.fill_per_image > 0) {
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const Extents norm = normalized_extents(dataset[i].box.extent,
                                              config.episode.norm_target);
      const ImageGrid normalized =
          resample(crop(dataset[i].image, dataset[i].box), norm);
      const ImageGrid source =
          build_eraser_source(dataset[i].image, dataset[i].box, norm, bootstrap)
              .patch;
      const SuperRegionMap map =
          slic(normalized, std::min<int>(config.fill_n_segment,
                                         static_cast<int>(normalized.size())),
               config.episode.slic_compactness, config.episode.slic_iters);
      for (int j = 0; j < config.fill_per_image; ++j) {
        const double r_target = (j + 0.5) / config.fill_per_image;
        samples.push_back(fill_augment(normalized, map, source, r_target,
                                       clf_config.seed + i * 7919ull + 31ull * j + 1ull));
      }
    }
  }

  auto [clf, report] = train_classifier(samples, clf_config);

  fs::create_directories(config.output_dir);
  const std::string model_path = config.output_dir + "/classifier.flnn";
  save_classifier(model_path, clf);

  std::ofstream rep(config.output_dir + "/classifier_report.txt");
  rep << "samples " << samples.size() << '\n'
      << "train " << report.train_count << '\n'
      << "holdout " << report.holdout_count << '\n'
      << "accuracy " << fmt(report.accuracy) << '\n'
      << "precision " << fmt(report.precision) << '\n'
      << "recall " << fmt(report.recall) << '\n'
      << "f1 " << fmt(report.f1) << '\n';
  write_resolved_config(config, config.output_dir);
  return TrainClassifierOutcome{report, model_path};
}

// ---------------------------------------------------------------------------
// train-agents
// ---------------------------------------------------------------------------

TrainAgentsOutcome cmd_train_agents(const RunConfig& config, bool resume,
                                    const std::string& classifier_path) {
  const auto dataset =
      load_dataset_split(config.data_root, "train", /*want_masks=*/false);
  if (dataset.empty()) throw DataError("train split is empty");

  const std::string clf_path = classifier_path.empty()
                                   ? config.output_dir + "/classifier.flnn"
                                   : classifier_path;
  const Classifier classifier = load_classifier(clf_path);

  std::vector<TrainItem> items;
  items.reserve(dataset.size());
  for (const DatasetEntry& e : dataset)
    items.push_back(TrainItem{e.image, e.box});

  TrainHyper hyper = config.rl;
  hyper.epochs = config.scaled_epochs();
  const CurriculumSchedule schedule = config.scaled_schedule();

  const std::string ckpt_dir = config.output_dir + "/agents";
  Checkpoint ckpt;
  Checkpoint* resume_ptr = nullptr;
  if (resume) {
    ckpt = load_checkpoint(ckpt_dir);
    if (ckpt.epochs_done >= hyper.epochs)
      throw ConfigError("resume: checkpoint already has " +
                        std::to_string(ckpt.epochs_done) + " epochs");
    resume_ptr = &ckpt;
  }

  fs::create_directories(ckpt_dir);
  const std::string episode_log_path = config.output_dir + "/training_log.csv";
  const std::string epoch_log_path = config.output_dir + "/epochs.csv";
  std::ofstream episode_log(episode_log_path,
                            resume ? std::ios::app : std::ios::out);
  std::ofstream epoch_log(epoch_log_path, resume ? std::ios::app : std::ios::out);
  if (!resume) {
    episode_log << "epoch,item,n_segment,steps,total_reward,final_sc_nodule,"
                   "erased_fraction,mean_loss,epsilon,terminal_reason\n";
    epoch_log << "epoch,n_segment,mean_reward,mean_final_sc_nodule,"
                 "mean_erased_fraction,mean_loss,flip_rate\n";
  }

  auto on_epoch = [&](const EpochLog& log) {
    epoch_log << log.epoch << ',' << log.n_segment << ',' << fmt(log.mean_reward)
              << ',' << fmt(log.mean_final_sc_nodule) << ','
              << fmt(log.mean_erased_fraction) << ',' << fmt(log.mean_loss)
              << ',' << fmt(log.flip_rate) << '\n';
    epoch_log.flush();
    std::cout << "epoch " << log.epoch << " n_segment " << log.n_segment
              << " reward " << fmt(log.mean_reward) << " flip_rate "
              << fmt(log.flip_rate) << " erased " << fmt(log.mean_erased_fraction)
              << " loss " << fmt(log.mean_loss) << std::endl;
  };

  TrainResult result = train_resumable(items, classifier, schedule, hyper,
                                       config.episode, resume_ptr, on_epoch);

  for (const EpisodeLog& log : result.episodes)
    episode_log << log.epoch << ',' << log.item << ',' << log.n_segment << ','
                << log.steps << ',' << fmt(log.total_reward) << ','
                << fmt(log.final_sc_nodule) << ',' << fmt(log.erased_fraction)
                << ',' << fmt(log.mean_loss) << ',' << fmt(log.epsilon) << ','
                << to_string(log.reason) << '\n';

  Checkpoint final_ckpt;
  final_ckpt.qnet = result.qnet;
  final_ckpt.target_net = result.target_net;
  final_ckpt.opt = result.opt;
  final_ckpt.hyper = hyper;
  final_ckpt.schedule = schedule;
  final_ckpt.epochs_done = result.epochs_done;
  final_ckpt.gradient_steps = result.gradient_steps;
  final_ckpt.env_steps = result.env_steps;
  final_ckpt.rng_state = result.rng_state;
  save_checkpoint(ckpt_dir, final_ckpt);
  write_resolved_config(config, config.output_dir);

  return TrainAgentsOutcome{ckpt_dir, result.epochs};
}

// ---------------------------------------------------------------------------
// segment
// ---------------------------------------------------------------------------

void write_trace_csv(const std::string& path,
                     const std::vector<TraceRow>& trace, int k_agents) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "step";
  for (int a = 0; a < k_agents; ++a) out << ",action" << a;
  out << ",sc_nodule,sc_normal,wd1,wd2,wd3,csr,idr1,idr2,reward,"
         "erased_fraction";
  const bool with_dice = !trace.empty() && trace.front().dice >= 0.0;
  if (with_dice) out << ",dice";
  out << '\n';
  for (const TraceRow& row : trace) {
    out << row.step;
    for (const Action a : row.actions)
      out << ',' << (a == Action::Erase ? 1 : 0);
    out << ',' << fmt(row.sc_nodule) << ',' << fmt(row.sc_normal) << ','
        << fmt(row.wd1) << ',' << fmt(row.wd2) << ',' << fmt(row.wd3) << ','
        << row.csr << ',' << row.idr1 << ',' << row.idr2 << ',' << row.reward
        << ',' << fmt(row.erased_fraction);
    if (with_dice) out << ',' << fmt(row.dice);
    out << '\n';
  }
}

SegmentOutcome cmd_segment(const RunConfig& config,
                           const std::string& model_path,
                           const std::string& classifier_path,
                           const std::string& image_path,
                           const std::string& box_path,
                           const std::string& out_dir,
                           const std::string& gt_mask_path) {
  const Classifier classifier = load_classifier(classifier_path);
  const MultiHeadNetwork qnet =
      fs::is_directory(model_path)
          ? load_checkpoint(model_path).qnet
          : load_network(model_path);

  const ImageGrid image = read_image(image_path);
  const BoundingBox box = read_box(box_path);

  std::optional<BinaryMask> gt;
  if (!gt_mask_path.empty()) gt = read_mask(gt_mask_path);

  EpisodeConfig episode = config.episode;
  episode.n_segment = config.final_n_segment();

  const InferResult result = infer(qnet, image, box, classifier, episode,
                                   gt ? &*gt : nullptr);

  fs::create_directories(out_dir);
  const std::string stem = fs::path(image_path).stem().string();
  const std::string ext = image_extension(image.rank());
  SegmentOutcome outcome;
  outcome.mask_path = out_dir + "/" + stem + "_pred" + ext;
  outcome.trace_path = out_dir + "/" + stem + "_trace.csv";
  outcome.reason = result.reason;
  outcome.final_sc_nodule = result.final_sc_nodule;
  write_mask(outcome.mask_path, result.mask);
  write_trace_csv(outcome.trace_path, result.trace, episode.k_agents);
  write_resolved_config(config, out_dir);
  return outcome;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

namespace {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments moments(const std::vector<double>& values) {
  Moments m;
  if (values.empty()) return m;
  for (double v : values) m.mean += v;
  m.mean /= static_cast<double>(values.size());
  for (double v : values) m.stddev += (v - m.mean) * (v - m.mean);
  m.stddev = std::sqrt(m.stddev / static_cast<double>(values.size()));
  return m;
}

}  // namespace

EvalSummary cmd_eval(const std::string& pred_dir, const std::string& gt_dir,
                     const std::string& out_csv) {
  if (!fs::is_directory(pred_dir))
    throw DataError("prediction directory not found: " + pred_dir);
  if (!fs::is_directory(gt_dir))
    throw DataError("ground truth directory not found: " + gt_dir);

  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    const std::string ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".flv")
      names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw DataError("no mask files in " + pred_dir);

  EvalSummary summary;
  std::vector<double> dices, jacs, hds, asds;
  for (const std::string& name : names) {
    const fs::path gt_path = fs::path(gt_dir) / name;
    if (!fs::exists(gt_path))
      throw DataError("missing ground truth for " + name + " in " + gt_dir);
    const BinaryMask pred = read_mask((fs::path(pred_dir) / name).string());
    const BinaryMask gt = read_mask(gt_path.string());

    EvalRow row;
    row.name = name;
    row.dice_pct = 100.0 * dice(pred, gt);
    row.jac_pct = 100.0 * jaccard(pred, gt);
    if (pred.count() > 0 && gt.count() > 0) {
      const SurfaceDistances sd = surface_distances(pred, gt);
      row.hd = sd.hausdorff;
      row.asd = sd.asd;
      hds.push_back(row.hd);
      asds.push_back(row.asd);
    } else {
      row.hd = std::numeric_limits<double>::quiet_NaN();
      row.asd = std::numeric_limits<double>::quiet_NaN();
    }
    dices.push_back(row.dice_pct);
    jacs.push_back(row.jac_pct);
    summary.rows.push_back(row);
  }

  const Moments md = moments(dices), mj = moments(jacs), mh = moments(hds),
                ma = moments(asds);
  summary.dice_mean = md.mean;
  summary.dice_std = md.stddev;
  summary.jac_mean = mj.mean;
  summary.jac_std = mj.stddev;
  summary.hd_mean = mh.mean;
  summary.hd_std = mh.stddev;
  summary.asd_mean = ma.mean;
  summary.asd_std = ma.stddev;

  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    if (!out) throw DataError("cannot open for writing: " + out_csv);
    out << "name,dice,jac,hd,asd\n";
    for (const EvalRow& row : summary.rows)
      out << row.name << ',' << fmt(row.dice_pct) << ',' << fmt(row.jac_pct)
          << ',' << fmt(row.hd) << ',' << fmt(row.asd) << '\n';
    out << "mean," << fmt(summary.dice_mean) << ',' << fmt(summary.jac_mean)
        << ',' << fmt(summary.hd_mean) << ',' << fmt(summary.asd_mean) << '\n';
    out << "std," << fmt(summary.dice_std) << ',' << fmt(summary.jac_std) << ','
        << fmt(summary.hd_std) << ',' << fmt(summary.asd_std) << '\n';
  }
  return summary;
}

// ---------------------------------------------------------------------------
// dump-trace-plot
// ---------------------------------------------------------------------------

namespace {

struct TraceColumns {
  std::vector<double> steps;
  std::vector<std::pair<std::string, std::vector<double>>> series;
};

TraceColumns parse_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty trace");

  std::vector<std::string> header;
  {
    std::istringstream is(line);
    std::string col;
    while (std::getline(is, col, ',')) header.push_back(col);
  }
  const std::vector<std::string> wanted{"sc_nodule", "sc_normal",
                                        "erased_fraction", "dice"};
  TraceColumns out;
  std::vector<int> indices;
  for (const std::string& name : wanted) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it != header.end()) {
      out.series.emplace_back(name, std::vector<double>{});
      indices.push_back(static_cast<int>(it - header.begin()));
    }
  }
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::istringstream is(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    out.steps.push_back(static_cast<double>(out.steps.size() + 1));
    for (std::size_t s = 0; s < indices.size(); ++s)
      out.series[s].second.push_back(
          to_double(cells[static_cast<std::size_t>(indices[s])], path));
  }
  if (out.steps.empty()) throw DataError(path + ": no trace rows");
  return out;
}

}  // namespace

void cmd_dump_trace_plot(const std::string& trace_csv,
                         const std::string& svg_path) {
  const TraceColumns columns = parse_trace(trace_csv);
  const int width = 720, height = 420;
  const double left = 60, right = 20, top = 20, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const double x_max = columns.steps.back();

  const char* colors[] = {"#c0392b", "#2980b9", "#27ae60", "#8e44ad"};

  std::ofstream out(svg_path);
  if (!out) throw DataError("cannot open for writing: " + svg_path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // Axes; y spans [0, 1] for scores and fractions.
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\""
      << left + plot_w << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 5; ++tick) {
    const double v = tick / 5.0;
    const double y = top + plot_h * (1.0 - v);
    out << "<line x1=\"" << left - 4 << "\" y1=\"" << y << "\" x2=\"" << left
        << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
  }
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
      << "\" font-size=\"12\" text-anchor=\"middle\">step</text>\n";

  for (std::size_t s = 0; s < columns.series.size(); ++s) {
    const auto& [name, values] = columns.series[s];
    out << "<polyline fill=\"none\" stroke=\"" << colors[s % 4]
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double x = left + plot_w * (columns.steps[i] / x_max);
      const double y = top + plot_h * (1.0 - std::clamp(values[i], 0.0, 1.0));
      out << fmt(x) << ',' << fmt(y) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << left + 10 << "\" y=\"" << top + 16 + 16 * s
        << "\" font-size=\"12\" fill=\"" << colors[s % 4] << "\">" << name
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace eraseg
