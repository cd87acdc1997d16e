#include "eraseg/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "eraseg/rng.hpp"

namespace eraseg {

namespace {

constexpr int kMaxPlacementAttempts = 1000;

struct Rect {
  Extents origin;
  Extents extent;
};

std::size_t rect_overlap(const Rect& a, const BoundingBox& b) {
  std::size_t overlap = 1;
  for (std::size_t ax = 0; ax < a.origin.size(); ++ax) {
    const int lo = std::max(a.origin[ax], b.origin[ax]);
    const int hi =
        std::min(a.origin[ax] + a.extent[ax], b.origin[ax] + b.extent[ax]);
    if (hi <= lo) return 0;
    overlap *= static_cast<std::size_t>(hi - lo);
  }
  return overlap;
}

Rect sample_rect(const ImageGrid& image, const BoundingBox& box, Rng& rng,
                 bool near_box) {
  const std::size_t rank = image.dims.size();
  Rect r;
  r.origin.resize(rank);
  r.extent.resize(rank);
  for (std::size_t a = 0; a < rank; ++a) {
    const int want =
        static_cast<int>(std::lround(box.extent[a] * rng.uniform(0.5, 1.5)));
    r.extent[a] = std::clamp(want, 4, image.dims[a]);
    int lo = 0;
    int hi = image.dims[a] - r.extent[a];
    if (near_box) {
      lo = std::max(lo, box.origin[a] - r.extent[a] + 1);
      hi = std::min(hi, box.origin[a] + box.extent[a] - 1);
    }
    r.origin[a] = hi <= lo ? lo : rng.uniform_int(lo, hi);
  }
  return r;
}

ImageGrid crop_rect(const ImageGrid& image, const Rect& r) {
  BoundingBox b;
  b.origin = r.origin;
  b.extent = r.extent;
  return crop(image, b);
}

}  // namespace

std::vector<PseudoSample> mine_pseudo_samples(const ImageGrid& image,
                                              const BoundingBox& box,
                                              int n_pos, int n_neg,
                                              std::uint64_t seed) {
  box.validate_annotation(image.dims);
  Rng rng(seed);
  std::vector<PseudoSample> out;
  out.reserve(static_cast<std::size_t>(n_pos + n_neg));

  const double box_area = static_cast<double>(box.volume());
  for (int i = 0; i < n_pos; ++i) {
    Rect r;
    bool found = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      r = sample_rect(image, box, rng, /*near_box=*/true);
      if (static_cast<double>(rect_overlap(r, box)) > 0.5 * box_area) {
        found = true;
        break;
      }
    }
    if (!found) {
      r.origin = box.origin;  // the annotation box itself always qualifies
      r.extent = box.extent;
    }
    out.push_back(PseudoSample{crop_rect(image, r), SampleTag::Nodule,
                               SampleProvenance::PositiveBox, 0.0});
  }

  for (int i = 0; i < n_neg; ++i) {
    bool found = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      const Rect r = sample_rect(image, box, rng, /*near_box=*/false);
      if (rect_overlap(r, box) == 0) {
        out.push_back(PseudoSample{crop_rect(image, r), SampleTag::Normal,
                                   SampleProvenance::NegativePatch, 0.0});
        found = true;
        break;
      }
    }
    if (!found)
      throw DataError(
          "mine_pseudo_samples: cannot place a zero-overlap negative patch");
  }
  return out;
}

PseudoSample fill_augment(const ImageGrid& normalized_patch,
                          const SuperRegionMap& map, const ImageGrid& source,
                          double r_target, std::uint64_t seed) {
  if (map.dims != normalized_patch.dims)
    throw DataError("fill_augment: map dims differ from patch dims");
  if (source.dims != normalized_patch.dims)
    throw DataError("fill_augment: source dims differ from patch dims");

  Rng rng(seed);
  std::vector<int> order(static_cast<std::size_t>(map.region_count()));
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_index(i)]);

  ImageGrid patch = normalized_patch;
  const double total = static_cast<double>(patch.size());
  std::size_t filled = 0;
  for (int id : order) {
    if (static_cast<double>(filled) / total >= r_target) break;
    region_fill_inplace(patch, map, id, source);
    filled += map.regions[static_cast<std::size_t>(id)].cells;
  }

  const double achieved = static_cast<double>(filled) / total;
  PseudoSample sample;
  sample.patch = std::move(patch);
  sample.tag = achieved < 0.5 ? SampleTag::Nodule : SampleTag::Normal;
  sample.provenance = SampleProvenance::FillAugmented;
  sample.fill_ratio = achieved;
  return sample;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

Tensor to_input_tensor(const ImageGrid& patch, const Extents& input_dims,
                       double norm) {
  const ImageGrid resized = resample(patch, input_dims);
  std::vector<int> shape{1};
  for (int d : input_dims) shape.push_back(d);
  Tensor t(shape);
  for (std::size_t i = 0; i < resized.size(); ++i)
    t[i] = resized.data[i] / norm;
  return t;
}

// Spatial flip of a (1, s, s[, s]) tensor along one spatial axis.
Tensor flip_spatial(const Tensor& t, int axis) {
  Tensor out(t.shape);
  const std::vector<int> dims(t.shape.begin() + 1, t.shape.end());
  const int rank = static_cast<int>(dims.size());
  std::vector<int> idx(static_cast<std::size_t>(rank), 0);
  std::size_t flat = 0;
  for (;;) {
    std::size_t src = 0;
    for (int a = 0; a < rank; ++a) {
      const int q = a == axis ? dims[a] - 1 - idx[a] : idx[a];
      src = src * static_cast<std::size_t>(dims[a]) + static_cast<std::size_t>(q);
    }
    out[flat] = t[src];
    ++flat;
    int a = rank - 1;
    while (a >= 0 && ++idx[a] == dims[a]) idx[a--] = 0;
    if (a < 0) break;
  }
  return out;
}

// 90-degree rotation in the (a, b) spatial plane of a square/cubic tensor.
Tensor rot90_spatial(const Tensor& t, int axis_a, int axis_b) {
  Tensor out(t.shape);
  const std::vector<int> dims(t.shape.begin() + 1, t.shape.end());
  const int rank = static_cast<int>(dims.size());
  std::vector<int> idx(static_cast<std::size_t>(rank), 0);
  std::size_t flat = 0;
  for (;;) {
    std::vector<int> src_idx = idx;
    src_idx[axis_a] = idx[axis_b];
    src_idx[axis_b] = dims[axis_a] - 1 - idx[axis_a];
    std::size_t src = 0;
    for (int a = 0; a < rank; ++a)
      src = src * static_cast<std::size_t>(dims[a]) +
            static_cast<std::size_t>(src_idx[a]);
    out[flat] = t[src];
    ++flat;
    int a = rank - 1;
    while (a >= 0 && ++idx[a] == dims[a]) idx[a--] = 0;
    if (a < 0) break;
  }
  return out;
}

Tensor augment_tensor(const Tensor& t, int rank, Rng& rng) {
  Tensor out = t;
  for (int a = 0; a < rank; ++a)
    if (rng.bernoulli(0.5)) out = flip_spatial(out, a);
  const int quarter_turns = rng.uniform_int(0, 3);
  int plane_a = 0, plane_b = 1;
  if (rank == 3) {
    const int plane = rng.uniform_int(0, 2);
    plane_a = plane == 0 ? 0 : (plane == 1 ? 0 : 1);
    plane_b = plane == 0 ? 1 : 2;
  }
  for (int q = 0; q < quarter_turns; ++q)
    out = rot90_spatial(out, plane_a, plane_b);
  return out;
}

MultiHeadNetwork build_classifier_net(int rank, Rng& rng) {
  std::vector<LayerSpec> trunk{
      LayerSpec::conv(rank, 3, 1, 8),   LayerSpec::relu(),
      LayerSpec::maxpool(2),            LayerSpec::conv(rank, 3, 8, 16),
      LayerSpec::relu(),                LayerSpec::maxpool(2),
      LayerSpec::conv(rank, 3, 16, 32), LayerSpec::relu(),
      LayerSpec::maxpool(2),            LayerSpec::gap(),
  };
  MultiHeadNetwork net;
  net.trunk = build_network(std::move(trunk), &rng);
  net.heads.push_back(build_network({LayerSpec::dense(32, 2)}, &rng));
  return net;
}

int label_of(SampleTag tag) { return tag == SampleTag::Nodule ? 0 : 1; }

}  // namespace

Scores Classifier::score(const ImageGrid& patch) const {
  if (patch.size() == 0) throw DataError("score: empty patch");
  const Tensor input = to_input_tensor(patch, input_dims, norm);
  const std::vector<Tensor> logits = forward(net, input);
  const std::vector<double> probs = softmax(logits[0].data);
  return Scores{probs[0], probs[1]};
}

std::pair<Classifier, ClassifierReport> train_classifier(
    const std::vector<PseudoSample>& samples, const ClassifierConfig& config) {
  if (samples.empty()) throw DataError("train_classifier: no samples");
  bool saw_nodule = false, saw_normal = false;
  for (const PseudoSample& s : samples) {
    saw_nodule = saw_nodule || s.tag == SampleTag::Nodule;
    saw_normal = saw_normal || s.tag == SampleTag::Normal;
  }
  if (!saw_nodule || !saw_normal)
    throw DataError("train_classifier: both classes must be present");

  Classifier clf;
  clf.input_dims.assign(static_cast<std::size_t>(config.rank),
                        config.input_size);
  clf.norm = 255.0;

  Rng rng(config.seed);
  clf.net = build_classifier_net(config.rank, rng);

  std::vector<Tensor> inputs;
  std::vector<int> labels;
  inputs.reserve(samples.size());
  for (const PseudoSample& s : samples) {
    inputs.push_back(to_input_tensor(s.patch, clf.input_dims, clf.norm));
    labels.push_back(label_of(s.tag));
  }

  std::vector<std::size_t> perm(samples.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1], perm[rng.uniform_index(i)]);

  const std::size_t holdout =
      std::min(samples.size() - 1,
               std::max<std::size_t>(
                   1, static_cast<std::size_t>(
                          std::lround(config.holdout * samples.size()))));
  const std::size_t train_count = samples.size() - holdout;
  std::vector<std::size_t> train_idx(perm.begin(), perm.begin() + train_count);
  std::vector<std::size_t> hold_idx(perm.begin() + train_count, perm.end());

  AdamW opt = make_adamw(clf.net, config.lr, config.weight_decay);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = train_idx.size(); i > 1; --i)
      std::swap(train_idx[i - 1], train_idx[rng.uniform_index(i)]);
    for (std::size_t start = 0; start < train_idx.size();
         start += static_cast<std::size_t>(config.batch)) {
      const std::size_t stop = std::min(
          train_idx.size(), start + static_cast<std::size_t>(config.batch));
      MultiHeadGradients acc;
      bool first = true;
      for (std::size_t bi = start; bi < stop; ++bi) {
        const std::size_t si = train_idx[bi];
        const Tensor input = config.augment
                                 ? augment_tensor(inputs[si], config.rank, rng)
                                 : inputs[si];
        MultiHeadCache cache;
        const std::vector<Tensor> logits = forward(clf.net, input, &cache);
        const CrossEntropy ce = softmax_cross_entropy(logits[0], labels[si]);
        MultiHeadGradients g = backward(clf.net, cache, {ce.logit_grad});
        if (first) {
          acc = std::move(g);
          first = false;
        } else {
          accumulate(acc, g);
        }
      }
      scale(acc, 1.0 / static_cast<double>(stop - start));
      adamw_step(clf.net, acc, opt);
    }
  }

  // Held-out report; nodule is the positive class.
  ClassifierReport report;
  report.train_count = static_cast<int>(train_count);
  report.holdout_count = static_cast<int>(holdout);
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t si : hold_idx) {
    const std::vector<Tensor> logits = forward(clf.net, inputs[si]);
    const int pred = logits[0][0] >= logits[0][1] ? 0 : 1;
    if (labels[si] == 0)
      (pred == 0 ? tp : fn) += 1;
    else
      (pred == 1 ? tn : fp) += 1;
  }
  const double n_hold = static_cast<double>(holdout);
  report.accuracy = static_cast<double>(tp + tn) / n_hold;
  report.precision =
      tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  report.recall =
      tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  report.f1 = report.precision + report.recall == 0.0
                  ? 0.0
                  : 2.0 * report.precision * report.recall /
                        (report.precision + report.recall);
  return {std::move(clf), report};
}

void save_classifier(const std::string& model_path, const Classifier& clf) {
  save_network(model_path, clf.net);
  std::ofstream meta(model_path + ".meta");
  if (!meta) throw DataError("cannot open for writing: " + model_path + ".meta");
  meta << "input";
  for (int d : clf.input_dims) meta << ' ' << d;
  meta << "\nnorm " << clf.norm << '\n';
}

Classifier load_classifier(const std::string& model_path) {
  Classifier clf;
  clf.net = load_network(model_path);
  std::ifstream meta(model_path + ".meta");
  if (!meta) throw DataError("cannot open classifier sidecar: " + model_path +
                             ".meta");
  std::string line;
  while (std::getline(meta, line)) {
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "input") {
      clf.input_dims.clear();
      int d = 0;
      while (is >> d) clf.input_dims.push_back(d);
    } else if (key == "norm") {
      is >> clf.norm;
    } else if (!key.empty()) {
      throw DataError(model_path + ".meta: unknown key '" + key + "'");
    }
  }
  if (clf.input_dims.size() != 2 && clf.input_dims.size() != 3)
    throw DataError(model_path + ".meta: missing input extents");
  return clf;
}

}  // namespace eraseg
