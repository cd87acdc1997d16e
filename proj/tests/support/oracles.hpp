#pragma once

// Independent oracles used by the test suites. Everything here is written
// against the math directly, not against the library implementation paths
// it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "eraseg/grid.hpp"
#include "eraseg/neural.hpp"

namespace oracles {

// Exact first Wasserstein distance between two empirical distributions:
// the area between the two CDFs over the merged support. In one dimension
// this is the optimal transport (LP) solution for arbitrary sample sizes.
inline double exact_wasserstein_1d(std::vector<double> a,
                                   std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double wa = 1.0 / static_cast<double>(a.size());
  const double wb = 1.0 / static_cast<double>(b.size());

  std::size_t ia = 0, ib = 0;
  double fa = 0.0, fb = 0.0;
  double prev = std::min(a.front(), b.front());
  double total = 0.0;
  while (ia < a.size() || ib < b.size()) {
    double x;
    if (ib >= b.size() || (ia < a.size() && a[ia] <= b[ib]))
      x = a[ia];
    else
      x = b[ib];
    total += std::abs(fa - fb) * (x - prev);
    while (ia < a.size() && a[ia] == x) {
      fa += wa;
      ++ia;
    }
    while (ib < b.size() && b[ib] == x) {
      fb += wb;
      ++ib;
    }
    prev = x;
  }
  return total;
}

// Central finite difference of a scalar function at x, step h.
inline double central_difference(const std::function<double(double)>& f,
                                 double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Relative error with a floor so that near-zero pairs compare absolutely.
inline double relative_error(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Checks every parameter of a multi-head network against central finite
// differences of `loss`. Returns the worst relative error.
inline double max_gradient_error(eraseg::MultiHeadNetwork& net,
                                 const eraseg::MultiHeadGradients& analytic,
                                 const std::function<double()>& loss,
                                 double h = 1e-3) {
  const auto params = eraseg::param_tensors(net);
  const auto grads = eraseg::grad_tensors(analytic);
  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t j = 0; j < params[t]->size(); ++j) {
      double& p = params[t]->data[j];
      const double saved = p;
      p = saved + h;
      const double up = loss();
      p = saved - h;
      const double down = loss();
      p = saved;
      const double numeric = (up - down) / (2.0 * h);
      worst = std::max(worst, relative_error(grads[t]->data[j], numeric));
    }
  }
  return worst;
}

// Straight-line, cache-free re-implementation of a sequential forward pass.
// Padding is materialized explicitly, so the loop structure shares nothing
// with the library path.
inline eraseg::Tensor naive_forward(const eraseg::Network& net,
                                    const eraseg::Tensor& input);

namespace detail {

inline eraseg::Tensor pad_spatial(const eraseg::Tensor& t, int pad) {
  const int channels = t.shape[0];
  const int rank = static_cast<int>(t.shape.size()) - 1;
  std::vector<int> out_shape{channels};
  for (int a = 1; a <= rank; ++a) out_shape.push_back(t.shape[a] + 2 * pad);
  eraseg::Tensor out(out_shape);
  std::vector<int> idx(static_cast<std::size_t>(rank), 0);
  std::size_t flat = 0;
  for (int c = 0; c < channels; ++c) {
    std::fill(idx.begin(), idx.end(), 0);
    for (;;) {
      std::size_t dst = static_cast<std::size_t>(c);
      for (int a = 0; a < rank; ++a)
        dst = dst * static_cast<std::size_t>(out_shape[a + 1]) +
              static_cast<std::size_t>(idx[a] + pad);
      out.data[dst] = t.data[flat++];
      int a = rank - 1;
      while (a >= 0 && ++idx[a] == t.shape[a + 1]) idx[a--] = 0;
      if (a < 0) break;
    }
  }
  return out;
}

}  // namespace detail

inline eraseg::Tensor naive_forward(const eraseg::Network& net,
                                    const eraseg::Tensor& input) {
  using eraseg::LayerKind;
  using eraseg::Tensor;
  Tensor cur = input;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const eraseg::LayerSpec& s = net.layers[li];
    switch (s.kind) {
      case LayerKind::Conv: {
        const Tensor padded = detail::pad_spatial(cur, s.pad);
        const int rank = s.spatial_rank;
        std::vector<int> in_sp(padded.shape.begin() + 1, padded.shape.end());
        std::vector<int> out_shape{s.out_channels};
        for (int a = 0; a < rank; ++a)
          out_shape.push_back((in_sp[a] - s.kernel) / s.stride + 1);
        Tensor out(out_shape);
        std::vector<int> oi(static_cast<std::size_t>(rank), 0);
        for (int oc = 0; oc < s.out_channels; ++oc) {
          std::fill(oi.begin(), oi.end(), 0);
          for (;;) {
            double acc = net.params[li].bias[oc];
            std::vector<int> ki(static_cast<std::size_t>(rank), 0);
            for (int ic = 0; ic < s.in_channels; ++ic) {
              std::fill(ki.begin(), ki.end(), 0);
              for (;;) {
                std::size_t src = static_cast<std::size_t>(ic);
                for (int a = 0; a < rank; ++a)
                  src = src * static_cast<std::size_t>(in_sp[a]) +
                        static_cast<std::size_t>(oi[a] * s.stride + ki[a]);
                std::size_t w = (static_cast<std::size_t>(oc) * s.in_channels +
                                 static_cast<std::size_t>(ic));
                for (int a = 0; a < rank; ++a)
                  w = w * static_cast<std::size_t>(s.kernel) +
                      static_cast<std::size_t>(ki[a]);
                acc += padded.data[src] * net.params[li].weight.data[w];
                int a = rank - 1;
                while (a >= 0 && ++ki[a] == s.kernel) ki[a--] = 0;
                if (a < 0) break;
              }
            }
            std::size_t dst = static_cast<std::size_t>(oc);
            for (int a = 0; a < rank; ++a)
              dst = dst * static_cast<std::size_t>(out_shape[a + 1]) +
                    static_cast<std::size_t>(oi[a]);
            out.data[dst] = acc;
            int a = rank - 1;
            while (a >= 0 && ++oi[a] == out_shape[a + 1]) oi[a--] = 0;
            if (a < 0) break;
          }
        }
        cur = std::move(out);
        break;
      }
      case LayerKind::Dense: {
        Tensor out({s.out_features});
        for (int o = 0; o < s.out_features; ++o) {
          double acc = net.params[li].bias[o];
          for (int f = 0; f < s.in_features; ++f)
            acc += net.params[li].weight.data[static_cast<std::size_t>(o) *
                                                  s.in_features +
                                              f] *
                   cur.data[static_cast<std::size_t>(f)];
          out.data[static_cast<std::size_t>(o)] = acc;
        }
        cur = std::move(out);
        break;
      }
      case LayerKind::Relu: {
        Tensor out(cur.shape);
        for (std::size_t i = 0; i < cur.size(); ++i)
          out.data[i] = std::max(0.0, cur.data[i]);
        cur = std::move(out);
        break;
      }
      case LayerKind::MaxPool: {
        const int rank = static_cast<int>(cur.shape.size()) - 1;
        std::vector<int> out_shape{cur.shape[0]};
        for (int a = 1; a <= rank; ++a)
          out_shape.push_back(cur.shape[a] / s.window);
        Tensor out(out_shape);
        std::vector<int> oi(static_cast<std::size_t>(rank), 0);
        for (int c = 0; c < cur.shape[0]; ++c) {
          std::fill(oi.begin(), oi.end(), 0);
          for (;;) {
            double best = -1e300;
            std::vector<int> ki(static_cast<std::size_t>(rank), 0);
            for (;;) {
              std::size_t src = static_cast<std::size_t>(c);
              for (int a = 0; a < rank; ++a)
                src = src * static_cast<std::size_t>(cur.shape[a + 1]) +
                      static_cast<std::size_t>(oi[a] * s.window + ki[a]);
              best = std::max(best, cur.data[src]);
              int a = rank - 1;
              while (a >= 0 && ++ki[a] == s.window) ki[a--] = 0;
              if (a < 0) break;
            }
            std::size_t dst = static_cast<std::size_t>(c);
            for (int a = 0; a < rank; ++a)
              dst = dst * static_cast<std::size_t>(out_shape[a + 1]) +
                    static_cast<std::size_t>(oi[a]);
            out.data[dst] = best;
            int a = rank - 1;
            while (a >= 0 && ++oi[a] == out_shape[a + 1]) oi[a--] = 0;
            if (a < 0) break;
          }
        }
        cur = std::move(out);
        break;
      }
      case LayerKind::GlobalAvgPool: {
        const int channels = cur.shape[0];
        const std::size_t spatial = cur.size() / static_cast<std::size_t>(channels);
        Tensor out({channels});
        for (int c = 0; c < channels; ++c) {
          double acc = 0.0;
          for (std::size_t i = 0; i < spatial; ++i)
            acc += cur.data[static_cast<std::size_t>(c) * spatial + i];
          out.data[static_cast<std::size_t>(c)] =
              acc / static_cast<double>(spatial);
        }
        cur = std::move(out);
        break;
      }
      case LayerKind::Flatten: {
        Tensor out({static_cast<int>(cur.size())});
        out.data = cur.data;
        cur = std::move(out);
        break;
      }
    }
  }
  return cur;
}

// Brute force surface distances: boundary sets re-derived here, then plain
// O(n^2) directed min/max/mean.
struct BruteSurface {
  double hausdorff;
  double asd;
};

inline BruteSurface brute_surface(const eraseg::BinaryMask& pred,
                                  const eraseg::BinaryMask& gt) {
  const int rank = pred.rank();
  auto boundary = [&](const eraseg::BinaryMask& m) {
    std::vector<std::vector<int>> cells;
    std::vector<int> idx(static_cast<std::size_t>(rank), 0);
    std::size_t flat = 0;
    for (;;) {
      if (m.bits[flat]) {
        bool edge = false;
        for (int a = 0; a < rank && !edge; ++a)
          for (int d = -1; d <= 1 && !edge; d += 2) {
            std::vector<int> q = idx;
            q[a] += d;
            bool outside = q[a] < 0 || q[a] >= m.dims[a];
            if (outside) {
              edge = true;
            } else {
              std::size_t qf = 0;
              for (int b = 0; b < rank; ++b)
                qf = qf * static_cast<std::size_t>(m.dims[b]) +
                     static_cast<std::size_t>(q[b]);
              if (!m.bits[qf]) edge = true;
            }
          }
        if (edge) cells.push_back(idx);
      }
      ++flat;
      int a = rank - 1;
      while (a >= 0 && ++idx[a] == m.dims[a]) idx[a--] = 0;
      if (a < 0) break;
    }
    return cells;
  };
  const auto bp = boundary(pred);
  const auto bg = boundary(gt);
  auto directed = [&](const std::vector<std::vector<int>>& from,
                      const std::vector<std::vector<int>>& to) {
    std::vector<double> out;
    for (const auto& p : from) {
      double best = 1e300;
      for (const auto& q : to) {
        double d2 = 0.0;
        for (int a = 0; a < rank; ++a)
          d2 += static_cast<double>(p[a] - q[a]) * (p[a] - q[a]);
        best = std::min(best, d2);
      }
      out.push_back(std::sqrt(best));
    }
    return out;
  };
  const auto d1 = directed(bp, bg);
  const auto d2 = directed(bg, bp);
  BruteSurface out{0.0, 0.0};
  double m1 = 0.0, m2 = 0.0;
  for (double d : d1) {
    out.hausdorff = std::max(out.hausdorff, d);
    m1 += d;
  }
  for (double d : d2) {
    out.hausdorff = std::max(out.hausdorff, d);
    m2 += d;
  }
  out.asd = 0.5 * (m1 / static_cast<double>(d1.size()) +
                   m2 / static_cast<double>(d2.size()));
  return out;
}

}  // namespace oracles
