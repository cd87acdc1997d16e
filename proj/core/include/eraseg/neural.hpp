#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eraseg/error.hpp"
#include "eraseg/rng.hpp"

namespace eraseg {

// Dense row-major tensor of 64-bit floats. Shapes are small fixed lists,
// e.g. (C, H, W) for 2-D feature maps or (F) for vectors.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s)
      : shape(std::move(s)), data(shape_size(shape), 0.0) {}

  static std::size_t shape_size(const std::vector<int>& s) {
    std::size_t n = s.empty() ? 0 : 1;
    for (int d : s) n *= static_cast<std::size_t>(d);
    return n;
  }

  std::size_t size() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
};

enum class LayerKind { Conv, Dense, Relu, MaxPool, GlobalAvgPool, Flatten };

// Sequential layer description. Convolutions are isotropic (k per spatial
// axis) with zero padding; pooling windows are non-overlapping.
struct LayerSpec {
  LayerKind kind = LayerKind::Relu;

  // conv
  int spatial_rank = 0;
  int kernel = 0;
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  int pad = 0;

  // dense
  int in_features = 0;
  int out_features = 0;

  // maxpool
  int window = 0;

  static LayerSpec conv(int rank, int kernel, int in_c, int out_c,
                        int stride = 1, int pad = -1) {
    LayerSpec s;
    s.kind = LayerKind::Conv;
    s.spatial_rank = rank;
    s.kernel = kernel;
    s.in_channels = in_c;
    s.out_channels = out_c;
    s.stride = stride;
    s.pad = pad < 0 ? kernel / 2 : pad;
    return s;
  }
  static LayerSpec dense(int in, int out) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.in_features = in;
    s.out_features = out;
    return s;
  }
  static LayerSpec relu() { return LayerSpec{}; }
  static LayerSpec maxpool(int window) {
    LayerSpec s;
    s.kind = LayerKind::MaxPool;
    s.window = window;
    return s;
  }
  static LayerSpec gap() {
    LayerSpec s;
    s.kind = LayerKind::GlobalAvgPool;
    return s;
  }
  static LayerSpec flatten() {
    LayerSpec s;
    s.kind = LayerKind::Flatten;
    return s;
  }
};

// Weight and bias of one layer; both empty for parameter-free layers.
struct LayerParams {
  Tensor weight;
  Tensor bias;
};

struct Network {
  std::vector<LayerSpec> layers;
  std::vector<LayerParams> params;
};

// Allocates parameters for the given layer stack. With an RNG the weights
// get He-normal initialization; without one they are zero.
Network build_network(std::vector<LayerSpec> specs, Rng* init = nullptr);

// Activations of a pass: acts[0] is the input, acts[i+1] the output of
// layer i. Sufficient for exact backprop.
struct ForwardCache {
  std::vector<Tensor> acts;
};

// Deterministic forward pass; throws DataError naming the offending layer
// on a shape mismatch.
Tensor forward(const Network& net, const Tensor& input,
               ForwardCache* cache = nullptr);

struct NetGradients {
  std::vector<LayerParams> layers;
  Tensor input_grad;
};

// Exact analytic gradients for the pass recorded in `cache`.
NetGradients backward(const Network& net, const ForwardCache& cache,
                      const Tensor& out_grad);

// Shared trunk feeding one small sequential head per agent. A plain
// classifier is the K=1 case.
struct MultiHeadNetwork {
  Network trunk;
  std::vector<Network> heads;

  int head_count() const { return static_cast<int>(heads.size()); }
};

struct MultiHeadCache {
  ForwardCache trunk;
  std::vector<ForwardCache> heads;
};

std::vector<Tensor> forward(const MultiHeadNetwork& net, const Tensor& input,
                            MultiHeadCache* cache = nullptr);

struct MultiHeadGradients {
  NetGradients trunk;
  std::vector<NetGradients> heads;
};

MultiHeadGradients backward(const MultiHeadNetwork& net,
                            const MultiHeadCache& cache,
                            const std::vector<Tensor>& head_grads);

// Parameter tensors in serialization order (trunk first, then heads;
// weight before bias within a layer).
std::vector<Tensor*> param_tensors(MultiHeadNetwork& net);
std::vector<const Tensor*> param_tensors(const MultiHeadNetwork& net);
std::vector<Tensor*> grad_tensors(MultiHeadGradients& grads);
std::vector<const Tensor*> grad_tensors(const MultiHeadGradients& grads);

// dst += src over all gradient tensors; shapes must match.
void accumulate(MultiHeadGradients& dst, const MultiHeadGradients& src);
void scale(MultiHeadGradients& grads, double factor);

// Decoupled weight decay Adam. Moments mirror the parameter list order.
struct AdamW {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
  long step_count = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

AdamW make_adamw(const MultiHeadNetwork& net, double lr,
                 double weight_decay = 1e-2);

// One update step. Throws NumericError on non-finite gradients.
void adamw_step(std::span<Tensor* const> params,
                std::span<const Tensor* const> grads, AdamW& state);
void adamw_step(MultiHeadNetwork& net, const MultiHeadGradients& grads,
                AdamW& state);

std::vector<double> softmax(std::span<const double> logits);

struct CrossEntropy {
  double loss;
  Tensor logit_grad;
};
CrossEntropy softmax_cross_entropy(const Tensor& logits, int label);

// FLNN1 container: ASCII manifest (magic, trunk/head layer lines) followed
// by a "payload" line and raw little-endian 64-bit floats in parameter
// order. Round-trips are bit-exact.
void save_network(const std::string& path, const MultiHeadNetwork& net);
MultiHeadNetwork load_network(const std::string& path);

}  // namespace eraseg
