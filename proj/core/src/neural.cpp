#include "eraseg/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace eraseg {

namespace {

std::string shape_str(const std::vector<int>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i)
    out += std::to_string(s[i]) + (i + 1 < s.size() ? "," : "");
  return out + ")";
}

[[noreturn]] void shape_fail(int layer, const std::string& what) {
  throw DataError("layer " + std::to_string(layer) + ": " + what);
}

std::vector<int> layer_output_shape(const LayerSpec& spec,
                                    const std::vector<int>& in, int layer) {
  switch (spec.kind) {
    case LayerKind::Conv: {
      if (static_cast<int>(in.size()) != spec.spatial_rank + 1)
        shape_fail(layer, "conv expects rank " +
                              std::to_string(spec.spatial_rank + 1) +
                              " input, got " + shape_str(in));
      if (in[0] != spec.in_channels)
        shape_fail(layer, "conv expects " + std::to_string(spec.in_channels) +
                              " channels, got " + shape_str(in));
      std::vector<int> out{spec.out_channels};
      for (int a = 1; a < static_cast<int>(in.size()); ++a) {
        const int padded = in[a] + 2 * spec.pad;
        if (padded < spec.kernel)
          shape_fail(layer, "conv kernel larger than padded input");
        out.push_back((padded - spec.kernel) / spec.stride + 1);
      }
      return out;
    }
    case LayerKind::Dense: {
      if (in.size() != 1 || in[0] != spec.in_features)
        shape_fail(layer, "dense expects (" + std::to_string(spec.in_features) +
                              "), got " + shape_str(in));
      return {spec.out_features};
    }
    case LayerKind::Relu:
      return in;
    case LayerKind::MaxPool: {
      if (in.size() < 2) shape_fail(layer, "maxpool expects channel+spatial input");
      std::vector<int> out{in[0]};
      for (std::size_t a = 1; a < in.size(); ++a) {
        if (in[a] < spec.window)
          shape_fail(layer, "maxpool window larger than input");
        out.push_back(in[a] / spec.window);
      }
      return out;
    }
    case LayerKind::GlobalAvgPool:
      if (in.size() < 2) shape_fail(layer, "gap expects channel+spatial input");
      return {in[0]};
    case LayerKind::Flatten:
      return {static_cast<int>(Tensor::shape_size(in))};
  }
  shape_fail(layer, "unknown layer kind");
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

void conv2d_forward(const LayerSpec& s, const Tensor& in, const Tensor& w,
                    const Tensor& b, Tensor& out) {
  const int H = in.shape[1], W = in.shape[2];
  const int OH = out.shape[1], OW = out.shape[2];
  const int k = s.kernel, st = s.stride, p = s.pad;
  for (int oc = 0; oc < s.out_channels; ++oc) {
    double* o = out.data.data() + static_cast<std::size_t>(oc) * OH * OW;
    std::fill(o, o + static_cast<std::size_t>(OH) * OW, b[oc]);
    for (int ic = 0; ic < s.in_channels; ++ic) {
      const double* x = in.data.data() + static_cast<std::size_t>(ic) * H * W;
      const double* wk =
          w.data.data() +
          (static_cast<std::size_t>(oc) * s.in_channels + ic) * k * k;
      for (int kh = 0; kh < k; ++kh)
        for (int kw = 0; kw < k; ++kw) {
          const double wv = wk[kh * k + kw];
          for (int oh = 0; oh < OH; ++oh) {
            const int ih = oh * st - p + kh;
            if (ih < 0 || ih >= H) continue;
            const double* xrow = x + static_cast<std::size_t>(ih) * W;
            double* orow = o + static_cast<std::size_t>(oh) * OW;
            for (int ow = 0; ow < OW; ++ow) {
              const int iw = ow * st - p + kw;
              if (iw < 0 || iw >= W) continue;
              orow[ow] += wv * xrow[iw];
            }
          }
        }
    }
  }
}

void conv2d_backward(const LayerSpec& s, const Tensor& in, const Tensor& w,
                     const Tensor& g_out, Tensor& g_w, Tensor& g_b,
                     Tensor& g_in) {
  const int H = in.shape[1], W = in.shape[2];
  const int OH = g_out.shape[1], OW = g_out.shape[2];
  const int k = s.kernel, st = s.stride, p = s.pad;
  for (int oc = 0; oc < s.out_channels; ++oc) {
    const double* g = g_out.data.data() + static_cast<std::size_t>(oc) * OH * OW;
    double gb = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(OH) * OW; ++i) gb += g[i];
    g_b[oc] += gb;
    for (int ic = 0; ic < s.in_channels; ++ic) {
      const double* x = in.data.data() + static_cast<std::size_t>(ic) * H * W;
      double* gx = g_in.data.data() + static_cast<std::size_t>(ic) * H * W;
      const std::size_t wbase =
          (static_cast<std::size_t>(oc) * s.in_channels + ic) * k * k;
      for (int kh = 0; kh < k; ++kh)
        for (int kw = 0; kw < k; ++kw) {
          const double wv = w.data[wbase + kh * k + kw];
          double gw = 0.0;
          for (int oh = 0; oh < OH; ++oh) {
            const int ih = oh * st - p + kh;
            if (ih < 0 || ih >= H) continue;
            const double* xrow = x + static_cast<std::size_t>(ih) * W;
            double* gxrow = gx + static_cast<std::size_t>(ih) * W;
            const double* grow = g + static_cast<std::size_t>(oh) * OW;
            for (int ow = 0; ow < OW; ++ow) {
              const int iw = ow * st - p + kw;
              if (iw < 0 || iw >= W) continue;
              gw += grow[ow] * xrow[iw];
              gxrow[iw] += grow[ow] * wv;
            }
          }
          g_w.data[wbase + kh * k + kw] += gw;
        }
    }
  }
}

void conv3d_forward(const LayerSpec& s, const Tensor& in, const Tensor& w,
                    const Tensor& b, Tensor& out) {
  const int D = in.shape[1], H = in.shape[2], W = in.shape[3];
  const int OD = out.shape[1], OH = out.shape[2], OW = out.shape[3];
  const int k = s.kernel, st = s.stride, p = s.pad;
  const std::size_t in_plane = static_cast<std::size_t>(H) * W;
  const std::size_t out_plane = static_cast<std::size_t>(OH) * OW;
  for (int oc = 0; oc < s.out_channels; ++oc) {
    double* o = out.data.data() + static_cast<std::size_t>(oc) * OD * out_plane;
    std::fill(o, o + static_cast<std::size_t>(OD) * out_plane, b[oc]);
    for (int ic = 0; ic < s.in_channels; ++ic) {
      const double* x = in.data.data() + static_cast<std::size_t>(ic) * D * in_plane;
      const double* wk =
          w.data.data() +
          (static_cast<std::size_t>(oc) * s.in_channels + ic) * k * k * k;
      for (int kd = 0; kd < k; ++kd)
        for (int kh = 0; kh < k; ++kh)
          for (int kw = 0; kw < k; ++kw) {
            const double wv = wk[(kd * k + kh) * k + kw];
            for (int od = 0; od < OD; ++od) {
              const int id = od * st - p + kd;
              if (id < 0 || id >= D) continue;
              for (int oh = 0; oh < OH; ++oh) {
                const int ih = oh * st - p + kh;
                if (ih < 0 || ih >= H) continue;
                const double* xrow = x + id * in_plane + static_cast<std::size_t>(ih) * W;
                double* orow = o + od * out_plane + static_cast<std::size_t>(oh) * OW;
                for (int ow = 0; ow < OW; ++ow) {
                  const int iw = ow * st - p + kw;
                  if (iw < 0 || iw >= W) continue;
                  orow[ow] += wv * xrow[iw];
                }
              }
            }
          }
    }
  }
}

void conv3d_backward(const LayerSpec& s, const Tensor& in, const Tensor& w,
                     const Tensor& g_out, Tensor& g_w, Tensor& g_b,
                     Tensor& g_in) {
  const int D = in.shape[1], H = in.shape[2], W = in.shape[3];
  const int OD = g_out.shape[1], OH = g_out.shape[2], OW = g_out.shape[3];
  const int k = s.kernel, st = s.stride, p = s.pad;
  const std::size_t in_plane = static_cast<std::size_t>(H) * W;
  const std::size_t out_plane = static_cast<std::size_t>(OH) * OW;
  for (int oc = 0; oc < s.out_channels; ++oc) {
    const double* g =
        g_out.data.data() + static_cast<std::size_t>(oc) * OD * out_plane;
    double gb = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(OD) * out_plane; ++i)
      gb += g[i];
    g_b[oc] += gb;
    for (int ic = 0; ic < s.in_channels; ++ic) {
      const double* x =
          in.data.data() + static_cast<std::size_t>(ic) * D * in_plane;
      double* gx = g_in.data.data() + static_cast<std::size_t>(ic) * D * in_plane;
      const std::size_t wbase =
          (static_cast<std::size_t>(oc) * s.in_channels + ic) * k * k * k;
      for (int kd = 0; kd < k; ++kd)
        for (int kh = 0; kh < k; ++kh)
          for (int kw = 0; kw < k; ++kw) {
            const double wv = w.data[wbase + (kd * k + kh) * k + kw];
            double gw = 0.0;
            for (int od = 0; od < OD; ++od) {
              const int id = od * st - p + kd;
              if (id < 0 || id >= D) continue;
              for (int oh = 0; oh < OH; ++oh) {
                const int ih = oh * st - p + kh;
                if (ih < 0 || ih >= H) continue;
                const double* xrow =
                    x + id * in_plane + static_cast<std::size_t>(ih) * W;
                double* gxrow =
                    gx + id * in_plane + static_cast<std::size_t>(ih) * W;
                const double* grow =
                    g + od * out_plane + static_cast<std::size_t>(oh) * OW;
                for (int ow = 0; ow < OW; ++ow) {
                  const int iw = ow * st - p + kw;
                  if (iw < 0 || iw >= W) continue;
                  gw += grow[ow] * xrow[iw];
                  gxrow[iw] += grow[ow] * wv;
                }
              }
            }
            g_w.data[wbase + (kd * k + kh) * k + kw] += gw;
          }
    }
  }
}

// ---------------------------------------------------------------------------
// Pooling
// ---------------------------------------------------------------------------

// Spatial size and strides for (C, spatial...) tensors.
struct SpatialView {
  int channels;
  std::vector<int> dims;
  std::size_t spatial_size;
};

SpatialView spatial_view(const std::vector<int>& shape) {
  SpatialView v;
  v.channels = shape[0];
  v.dims.assign(shape.begin() + 1, shape.end());
  v.spatial_size = 1;
  for (int d : v.dims) v.spatial_size *= static_cast<std::size_t>(d);
  return v;
}

void maxpool_forward(const LayerSpec& s, const Tensor& in, Tensor& out) {
  const SpatialView vi = spatial_view(in.shape);
  const SpatialView vo = spatial_view(out.shape);
  const int w = s.window;
  const int rank = static_cast<int>(vi.dims.size());
  for (int c = 0; c < vi.channels; ++c) {
    const double* x = in.data.data() + static_cast<std::size_t>(c) * vi.spatial_size;
    double* o = out.data.data() + static_cast<std::size_t>(c) * vo.spatial_size;
    std::vector<int> oi(rank, 0);
    std::size_t oflat = 0;
    for (;;) {
      // First-max over the window; ties take the scan-order first cell.
      double best = -std::numeric_limits<double>::infinity();
      std::vector<int> ki(rank, 0);
      for (;;) {
        std::size_t iflat = 0;
        for (int a = 0; a < rank; ++a)
          iflat = iflat * vi.dims[a] + (oi[a] * w + ki[a]);
        best = std::max(best, x[iflat]);
        int axis = rank - 1;
        while (axis >= 0 && ++ki[axis] == w) ki[axis--] = 0;
        if (axis < 0) break;
      }
      o[oflat] = best;
      ++oflat;
      int axis = rank - 1;
      while (axis >= 0 && ++oi[axis] == vo.dims[axis]) oi[axis--] = 0;
      if (axis < 0) break;
    }
  }
}

void maxpool_backward(const LayerSpec& s, const Tensor& in, const Tensor& g_out,
                      Tensor& g_in) {
  const SpatialView vi = spatial_view(in.shape);
  const SpatialView vo = spatial_view(g_out.shape);
  const int w = s.window;
  const int rank = static_cast<int>(vi.dims.size());
  for (int c = 0; c < vi.channels; ++c) {
    const double* x = in.data.data() + static_cast<std::size_t>(c) * vi.spatial_size;
    double* gx = g_in.data.data() + static_cast<std::size_t>(c) * vi.spatial_size;
    const double* g = g_out.data.data() + static_cast<std::size_t>(c) * vo.spatial_size;
    std::vector<int> oi(rank, 0);
    std::size_t oflat = 0;
    for (;;) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t best_flat = 0;
      std::vector<int> ki(rank, 0);
      for (;;) {
        std::size_t iflat = 0;
        for (int a = 0; a < rank; ++a)
          iflat = iflat * vi.dims[a] + (oi[a] * w + ki[a]);
        if (x[iflat] > best) {
          best = x[iflat];
          best_flat = iflat;
        }
        int axis = rank - 1;
        while (axis >= 0 && ++ki[axis] == w) ki[axis--] = 0;
        if (axis < 0) break;
      }
      gx[best_flat] += g[oflat];
      ++oflat;
      int axis = rank - 1;
      while (axis >= 0 && ++oi[axis] == vo.dims[axis]) oi[axis--] = 0;
      if (axis < 0) break;
    }
  }
}

}  // namespace

Network build_network(std::vector<LayerSpec> specs, Rng* init) {
  Network net;
  net.layers = std::move(specs);
  net.params.resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& s = net.layers[i];
    if (s.kind == LayerKind::Conv) {
      std::vector<int> wshape{s.out_channels, s.in_channels};
      for (int a = 0; a < s.spatial_rank; ++a) wshape.push_back(s.kernel);
      net.params[i].weight = Tensor(wshape);
      net.params[i].bias = Tensor({s.out_channels});
      if (init) {
        const double fan_in =
            static_cast<double>(s.in_channels) *
            std::pow(static_cast<double>(s.kernel), s.spatial_rank);
        const double std = std::sqrt(2.0 / fan_in);
        for (double& v : net.params[i].weight.data) v = std * init->normal();
      }
    } else if (s.kind == LayerKind::Dense) {
      net.params[i].weight = Tensor({s.out_features, s.in_features});
      net.params[i].bias = Tensor({s.out_features});
      if (init) {
        const double std = std::sqrt(2.0 / s.in_features);
        for (double& v : net.params[i].weight.data) v = std * init->normal();
      }
    }
  }
  return net;
}

Tensor forward(const Network& net, const Tensor& input, ForwardCache* cache) {
  if (cache) {
    cache->acts.clear();
    cache->acts.reserve(net.layers.size() + 1);
    cache->acts.push_back(input);
  }
  Tensor cur = input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& s = net.layers[i];
    Tensor out(layer_output_shape(s, cur.shape, static_cast<int>(i)));
    switch (s.kind) {
      case LayerKind::Conv:
        if (s.spatial_rank == 2)
          conv2d_forward(s, cur, net.params[i].weight, net.params[i].bias, out);
        else
          conv3d_forward(s, cur, net.params[i].weight, net.params[i].bias, out);
        break;
      case LayerKind::Dense: {
        const Tensor& w = net.params[i].weight;
        for (int o = 0; o < s.out_features; ++o) {
          double acc = net.params[i].bias[o];
          const double* wr =
              w.data.data() + static_cast<std::size_t>(o) * s.in_features;
          for (int f = 0; f < s.in_features; ++f) acc += wr[f] * cur[f];
          out[o] = acc;
        }
        break;
      }
      case LayerKind::Relu:
        for (std::size_t j = 0; j < cur.size(); ++j)
          out[j] = cur[j] > 0.0 ? cur[j] : 0.0;
        break;
      case LayerKind::MaxPool:
        maxpool_forward(s, cur, out);
        break;
      case LayerKind::GlobalAvgPool: {
        const SpatialView v = spatial_view(cur.shape);
        for (int c = 0; c < v.channels; ++c) {
          double acc = 0.0;
          const double* x =
              cur.data.data() + static_cast<std::size_t>(c) * v.spatial_size;
          for (std::size_t j = 0; j < v.spatial_size; ++j) acc += x[j];
          out[c] = acc / static_cast<double>(v.spatial_size);
        }
        break;
      }
      case LayerKind::Flatten:
        out.data = cur.data;
        break;
    }
    cur = std::move(out);
    if (cache) cache->acts.push_back(cur);
  }
  return cur;
}

NetGradients backward(const Network& net, const ForwardCache& cache,
                      const Tensor& out_grad) {
  if (cache.acts.size() != net.layers.size() + 1)
    throw DataError("backward: cache does not match network (stale cache?)");
  NetGradients grads;
  grads.layers.resize(net.layers.size());
  Tensor g = out_grad;
  if (g.size() != cache.acts.back().size())
    throw DataError("backward: output gradient shape mismatch");
  for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
    const LayerSpec& s = net.layers[i];
    const Tensor& in = cache.acts[static_cast<std::size_t>(i)];
    Tensor g_in(in.shape);
    switch (s.kind) {
      case LayerKind::Conv: {
        grads.layers[i].weight = Tensor(net.params[i].weight.shape);
        grads.layers[i].bias = Tensor(net.params[i].bias.shape);
        if (s.spatial_rank == 2)
          conv2d_backward(s, in, net.params[i].weight, g,
                          grads.layers[i].weight, grads.layers[i].bias, g_in);
        else
          conv3d_backward(s, in, net.params[i].weight, g,
                          grads.layers[i].weight, grads.layers[i].bias, g_in);
        break;
      }
      case LayerKind::Dense: {
        grads.layers[i].weight = Tensor(net.params[i].weight.shape);
        grads.layers[i].bias = Tensor(net.params[i].bias.shape);
        const Tensor& w = net.params[i].weight;
        for (int o = 0; o < s.out_features; ++o) {
          const double go = g[o];
          grads.layers[i].bias[o] += go;
          double* gw = grads.layers[i].weight.data.data() +
                       static_cast<std::size_t>(o) * s.in_features;
          const double* wr =
              w.data.data() + static_cast<std::size_t>(o) * s.in_features;
          for (int f = 0; f < s.in_features; ++f) {
            gw[f] += go * in[f];
            g_in[f] += go * wr[f];
          }
        }
        break;
      }
      case LayerKind::Relu:
        for (std::size_t j = 0; j < in.size(); ++j)
          g_in[j] = in[j] > 0.0 ? g[j] : 0.0;
        break;
      case LayerKind::MaxPool:
        maxpool_backward(s, in, g, g_in);
        break;
      case LayerKind::GlobalAvgPool: {
        const SpatialView v = spatial_view(in.shape);
        for (int c = 0; c < v.channels; ++c) {
          const double gc = g[c] / static_cast<double>(v.spatial_size);
          double* gx =
              g_in.data.data() + static_cast<std::size_t>(c) * v.spatial_size;
          for (std::size_t j = 0; j < v.spatial_size; ++j) gx[j] += gc;
        }
        break;
      }
      case LayerKind::Flatten:
        g_in.data = g.data;
        break;
    }
    g = std::move(g_in);
  }
  grads.input_grad = std::move(g);
  return grads;
}

std::vector<Tensor> forward(const MultiHeadNetwork& net, const Tensor& input,
                            MultiHeadCache* cache) {
  if (cache) cache->heads.resize(net.heads.size());
  const Tensor trunk_out =
      forward(net.trunk, input, cache ? &cache->trunk : nullptr);
  std::vector<Tensor> outs;
  outs.reserve(net.heads.size());
  for (std::size_t h = 0; h < net.heads.size(); ++h)
    outs.push_back(
        forward(net.heads[h], trunk_out, cache ? &cache->heads[h] : nullptr));
  return outs;
}

MultiHeadGradients backward(const MultiHeadNetwork& net,
                            const MultiHeadCache& cache,
                            const std::vector<Tensor>& head_grads) {
  if (head_grads.size() != net.heads.size())
    throw DataError("backward: head gradient count mismatch");
  MultiHeadGradients grads;
  grads.heads.resize(net.heads.size());
  Tensor trunk_grad(cache.trunk.acts.back().shape);
  for (std::size_t h = 0; h < net.heads.size(); ++h) {
    grads.heads[h] = backward(net.heads[h], cache.heads[h], head_grads[h]);
    for (std::size_t j = 0; j < trunk_grad.size(); ++j)
      trunk_grad[j] += grads.heads[h].input_grad[j];
  }
  grads.trunk = backward(net.trunk, cache.trunk, trunk_grad);
  return grads;
}

namespace {

template <typename Net, typename Out>
void collect_params(Net& net, std::vector<Out>& out) {
  for (auto& layer : net.params) {
    if (layer.weight.size() == 0) continue;
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
}

}  // namespace

std::vector<Tensor*> param_tensors(MultiHeadNetwork& net) {
  std::vector<Tensor*> out;
  collect_params(net.trunk, out);
  for (auto& head : net.heads) collect_params(head, out);
  return out;
}

std::vector<const Tensor*> param_tensors(const MultiHeadNetwork& net) {
  std::vector<const Tensor*> out;
  collect_params(net.trunk, out);
  for (const auto& head : net.heads) collect_params(head, out);
  return out;
}

namespace {

template <typename Grads, typename Out>
std::vector<Out> collect_grad_tensors(Grads& grads) {
  std::vector<Out> out;
  auto collect = [&](auto& g) {
    for (auto& layer : g.layers) {
      if (layer.weight.size() == 0) continue;
      out.push_back(&layer.weight);
      out.push_back(&layer.bias);
    }
  };
  collect(grads.trunk);
  for (auto& head : grads.heads) collect(head);
  return out;
}

}  // namespace

std::vector<Tensor*> grad_tensors(MultiHeadGradients& grads) {
  return collect_grad_tensors<MultiHeadGradients, Tensor*>(grads);
}

std::vector<const Tensor*> grad_tensors(const MultiHeadGradients& grads) {
  return collect_grad_tensors<const MultiHeadGradients, const Tensor*>(grads);
}

void accumulate(MultiHeadGradients& dst, const MultiHeadGradients& src) {
  const auto d = grad_tensors(dst);
  const auto s = grad_tensors(src);
  if (d.size() != s.size()) throw DataError("accumulate: gradient layout mismatch");
  for (std::size_t t = 0; t < d.size(); ++t) {
    if (d[t]->size() != s[t]->size())
      throw DataError("accumulate: gradient shape mismatch");
    for (std::size_t j = 0; j < d[t]->size(); ++j)
      d[t]->data[j] += s[t]->data[j];
  }
}

void scale(MultiHeadGradients& grads, double factor) {
  for (Tensor* t : grad_tensors(grads))
    for (double& v : t->data) v *= factor;
}

AdamW make_adamw(const MultiHeadNetwork& net, double lr, double weight_decay) {
  AdamW state;
  state.lr = lr;
  state.weight_decay = weight_decay;
  for (const Tensor* p : param_tensors(net)) {
    state.m.emplace_back(p->shape);
    state.v.emplace_back(p->shape);
  }
  return state;
}

void adamw_step(std::span<Tensor* const> params,
                std::span<const Tensor* const> grads, AdamW& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw DataError("adamw_step: parameter list mismatch");
  for (std::size_t t = 0; t < grads.size(); ++t)
    for (double gv : grads[t]->data)
      if (!std::isfinite(gv))
        throw NumericError("adamw_step: non-finite gradient in tensor " +
                           std::to_string(t));

  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, state.step_count);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step_count);
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& p = *params[t];
    const Tensor& g = *grads[t];
    Tensor& m = state.m[t];
    Tensor& v = state.v[t];
    for (std::size_t j = 0; j < p.size(); ++j) {
      p[j] -= state.lr * state.weight_decay * p[j];  // decoupled decay
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

void adamw_step(MultiHeadNetwork& net, const MultiHeadGradients& grads,
                AdamW& state) {
  const auto params = param_tensors(net);
  const auto gts = grad_tensors(grads);
  adamw_step(params, gts, state);
}

std::vector<double> softmax(std::span<const double> logits) {
  double max_logit = logits[0];
  for (double v : logits) max_logit = std::max(max_logit, v);
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max_logit);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

CrossEntropy softmax_cross_entropy(const Tensor& logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
    throw DataError("softmax_cross_entropy: label out of range");
  const std::vector<double> probs = softmax(logits.data);
  CrossEntropy ce;
  ce.loss = -std::log(std::max(probs[static_cast<std::size_t>(label)],
                               1e-300));
  ce.logit_grad = Tensor(logits.shape);
  for (std::size_t i = 0; i < probs.size(); ++i)
    ce.logit_grad[i] =
        probs[i] - (static_cast<int>(i) == label ? 1.0 : 0.0);
  return ce;
}

// ---------------------------------------------------------------------------
// FLNN1 serialization
// ---------------------------------------------------------------------------

namespace {

void write_layer_line(std::ostream& out, const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::Conv:
      out << "conv " << s.spatial_rank << ' ' << s.kernel << ' '
          << s.in_channels << ' ' << s.out_channels << ' ' << s.stride << ' '
          << s.pad << '\n';
      break;
    case LayerKind::Dense:
      out << "dense " << s.in_features << ' ' << s.out_features << '\n';
      break;
    case LayerKind::Relu:
      out << "relu\n";
      break;
    case LayerKind::MaxPool:
      out << "maxpool " << s.window << '\n';
      break;
    case LayerKind::GlobalAvgPool:
      out << "gap\n";
      break;
    case LayerKind::Flatten:
      out << "flatten\n";
      break;
  }
}

LayerSpec parse_layer_line(const std::string& line, const std::string& path) {
  std::istringstream is(line);
  std::string kind;
  is >> kind;
  if (kind == "conv") {
    int rank = 0, kernel = 0, in_c = 0, out_c = 0, stride = 0, pad = 0;
    if (!(is >> rank >> kernel >> in_c >> out_c >> stride >> pad))
      throw DataError(path + ": bad conv layer line: " + line);
    return LayerSpec::conv(rank, kernel, in_c, out_c, stride, pad);
  }
  if (kind == "dense") {
    int in = 0, out = 0;
    if (!(is >> in >> out))
      throw DataError(path + ": bad dense layer line: " + line);
    return LayerSpec::dense(in, out);
  }
  if (kind == "relu") return LayerSpec::relu();
  if (kind == "maxpool") {
    int w = 0;
    if (!(is >> w)) throw DataError(path + ": bad maxpool line: " + line);
    return LayerSpec::maxpool(w);
  }
  if (kind == "gap") return LayerSpec::gap();
  if (kind == "flatten") return LayerSpec::flatten();
  throw DataError(path + ": unknown layer kind: " + kind);
}

std::string read_line(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": truncated manifest");
  return line;
}

}  // namespace

void save_network(const std::string& path, const MultiHeadNetwork& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "FLNN1\n";
  out << "trunk " << net.trunk.layers.size() << '\n';
  for (const LayerSpec& s : net.trunk.layers) write_layer_line(out, s);
  out << "heads " << net.heads.size() << '\n';
  for (const Network& head : net.heads) {
    out << "head " << head.layers.size() << '\n';
    for (const LayerSpec& s : head.layers) write_layer_line(out, s);
  }
  out << "payload\n";
  for (const Tensor* p : param_tensors(net))
    out.write(reinterpret_cast<const char*>(p->data.data()),
              static_cast<std::streamsize>(p->data.size() * sizeof(double)));
  if (!out) throw DataError("write failed: " + path);
}

MultiHeadNetwork load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open network file: " + path);
  if (read_line(in, path) != "FLNN1")
    throw DataError(path + ": missing FLNN1 magic");

  auto read_count = [&](const std::string& expect) {
    std::istringstream is(read_line(in, path));
    std::string word;
    long n = -1;
    is >> word >> n;
    if (word != expect || n < 0)
      throw DataError(path + ": expected '" + expect + " <n>' line");
    return static_cast<std::size_t>(n);
  };

  MultiHeadNetwork net;
  std::vector<LayerSpec> trunk_specs(read_count("trunk"));
  for (LayerSpec& s : trunk_specs) s = parse_layer_line(read_line(in, path), path);
  net.trunk = build_network(std::move(trunk_specs));

  const std::size_t head_count = read_count("heads");
  net.heads.reserve(head_count);
  for (std::size_t h = 0; h < head_count; ++h) {
    std::vector<LayerSpec> head_specs(read_count("head"));
    for (LayerSpec& s : head_specs) s = parse_layer_line(read_line(in, path), path);
    net.heads.push_back(build_network(std::move(head_specs)));
  }

  if (read_line(in, path) != "payload")
    throw DataError(path + ": missing payload marker");
  for (Tensor* p : param_tensors(net)) {
    in.read(reinterpret_cast<char*>(p->data.data()),
            static_cast<std::streamsize>(p->data.size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != p->data.size() * sizeof(double))
      throw DataError(path + ": truncated payload");
  }
  return net;
}

}  // namespace eraseg
