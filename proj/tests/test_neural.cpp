#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "eraseg/neural.hpp"
#include "eraseg/rng.hpp"
#include "support/oracles.hpp"

using namespace eraseg;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = scale * rng.normal();
  return t;
}

// Scalar loss used by the gradient checks: weighted sum of all outputs,
// smooth in every parameter.
double weighted_sum(const std::vector<Tensor>& outs,
                    const std::vector<Tensor>& weights) {
  double total = 0.0;
  for (std::size_t h = 0; h < outs.size(); ++h)
    for (std::size_t i = 0; i < outs[h].size(); ++i)
      total += outs[h][i] * weights[h][i];
  return total;
}

// Runs forward/backward with the weighted-sum loss and compares analytic
// parameter gradients against central finite differences.
double gradcheck(MultiHeadNetwork& net, const Tensor& input, Rng& rng) {
  MultiHeadCache cache;
  const std::vector<Tensor> outs = forward(net, input, &cache);
  std::vector<Tensor> loss_weights;
  for (const Tensor& out : outs)
    loss_weights.push_back(random_tensor(out.shape, rng));
  const MultiHeadGradients grads = backward(net, cache, loss_weights);
  auto loss = [&]() {
    return weighted_sum(forward(net, input), loss_weights);
  };
  return oracles::max_gradient_error(net, grads, loss);
}

MultiHeadNetwork single(std::vector<LayerSpec> specs, Rng* rng) {
  MultiHeadNetwork net;
  net.trunk = build_network(std::move(specs), rng);
  return net;
}

}  // namespace

TEST_CASE("all-zero dense+relu network maps to zero") {
  MultiHeadNetwork net = single({LayerSpec::dense(4, 3), LayerSpec::relu()},
                                nullptr);
  Tensor input({4});
  input.data = {1.0, -2.0, 3.0, 4.0};
  const Tensor out = forward(net.trunk, input);
  for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("identity 1x1 conv reproduces the input") {
  MultiHeadNetwork net = single({LayerSpec::conv(2, 1, 1, 1, 1, 0)}, nullptr);
  net.trunk.params[0].weight.data = {1.0};
  Rng rng(1);
  const Tensor input = random_tensor({1, 5, 6}, rng);
  const Tensor out = forward(net.trunk, input);
  CHECK(out.data == input.data);
}

TEST_CASE("forward matches a straight-line re-implementation") {
  Rng rng(2);
  for (int rank = 2; rank <= 3; ++rank) {
    std::vector<LayerSpec> specs{
        LayerSpec::conv(rank, 3, 2, 4),
        LayerSpec::relu(),
        LayerSpec::maxpool(2),
        LayerSpec::conv(rank, 3, 4, 3, 2, 1),
        LayerSpec::relu(),
        LayerSpec::gap(),
        LayerSpec::flatten(),
        LayerSpec::dense(3, 5),
    };
    Network net = build_network(specs, &rng);
    std::vector<int> shape{2};
    for (int a = 0; a < rank; ++a) shape.push_back(8);
    const Tensor input = random_tensor(shape, rng);
    const Tensor ours = forward(net, input);
    const Tensor ref = oracles::naive_forward(net, input);
    REQUIRE(ours.size() == ref.size());
    for (std::size_t i = 0; i < ours.size(); ++i)
      CHECK(ours[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("forward is deterministic") {
  Rng rng(3);
  MultiHeadNetwork net = single(
      {LayerSpec::conv(2, 3, 1, 4), LayerSpec::relu(), LayerSpec::gap()},
      &rng);
  const Tensor input = random_tensor({1, 9, 9}, rng);
  const Tensor a = forward(net.trunk, input);
  const Tensor b = forward(net.trunk, input);
  CHECK(a.data == b.data);
}

TEST_CASE("shape mismatch names the offending layer") {
  MultiHeadNetwork net = single({LayerSpec::dense(4, 2)}, nullptr);
  Tensor bad({5});
  try {
    forward(net.trunk, bad);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }
}

TEST_CASE("gradient check per layer type") {
  Rng rng(4);

  SUBCASE("dense") {
    MultiHeadNetwork net =
        single({LayerSpec::dense(6, 4), LayerSpec::relu(),
                LayerSpec::dense(4, 2)},
               &rng);
    const Tensor input = random_tensor({6}, rng);
    CHECK(gradcheck(net, input, rng) < 1e-4);
  }

  SUBCASE("conv2d stride 1 pad 1") {
    MultiHeadNetwork net = single({LayerSpec::conv(2, 3, 2, 3)}, &rng);
    const Tensor input = random_tensor({2, 6, 6}, rng);
    CHECK(gradcheck(net, input, rng) < 1e-4);
  }

  SUBCASE("conv2d stride 2 pad 0") {
    MultiHeadNetwork net = single({LayerSpec::conv(2, 3, 2, 3, 2, 0)}, &rng);
    const Tensor input = random_tensor({2, 7, 7}, rng);
    CHECK(gradcheck(net, input, rng) < 1e-4);
  }

  SUBCASE("conv3d stride 1 pad 1") {
    MultiHeadNetwork net = single({LayerSpec::conv(3, 3, 1, 2)}, &rng);
    const Tensor input = random_tensor({1, 5, 5, 5}, rng);
    CHECK(gradcheck(net, input, rng) < 1e-4);
  }

  SUBCASE("conv3d stride 2") {
    MultiHeadNetwork net = single({LayerSpec::conv(3, 3, 2, 2, 2, 1)}, &rng);
    const Tensor input = random_tensor({2, 6, 6, 6}, rng);
    CHECK(gradcheck(net, input, rng) < 1e-4);
  }

  SUBCASE("relu (inputs kept away from the kink)") {
    MultiHeadNetwork net =
        single({LayerSpec::dense(5, 5), LayerSpec::relu()}, &rng);
    Tensor input = random_tensor({5}, rng);
    for (double& v : input.data) v += v >= 0 ? 0.5 : -0.5;
    CHECK(gradcheck(net, input, rng) < 1e-4);
  }

  SUBCASE("maxpool and gap through a conv") {
    MultiHeadNetwork net = single(
        {LayerSpec::conv(2, 3, 1, 2), LayerSpec::maxpool(2), LayerSpec::gap()},
        &rng);
    const Tensor input = random_tensor({1, 8, 8}, rng);
    CHECK(gradcheck(net, input, rng) < 1e-4);
  }

  SUBCASE("full classifier-shaped stack with heads") {
    MultiHeadNetwork net;
    net.trunk = build_network(
        {LayerSpec::conv(2, 3, 1, 4), LayerSpec::relu(), LayerSpec::maxpool(2),
         LayerSpec::conv(2, 3, 4, 6), LayerSpec::relu(), LayerSpec::maxpool(2),
         LayerSpec::flatten()},
        &rng);
    net.heads.push_back(build_network({LayerSpec::dense(6 * 4, 2)}, &rng));
    net.heads.push_back(build_network({LayerSpec::dense(6 * 4, 2)}, &rng));
    const Tensor input = random_tensor({1, 8, 8}, rng);
    CHECK(gradcheck(net, input, rng) < 1e-4);
  }
}

TEST_CASE("zero output gradient gives zero parameter gradients") {
  Rng rng(5);
  MultiHeadNetwork net = single(
      {LayerSpec::conv(2, 3, 1, 2), LayerSpec::relu(), LayerSpec::gap()},
      &rng);
  MultiHeadCache cache;
  const auto outs = forward(net, random_tensor({1, 6, 6}, rng), &cache);
  const MultiHeadGradients grads =
      backward(net, cache, {Tensor(outs[0].shape)});
  for (const Tensor* g : grad_tensors(grads))
    for (double v : g->data) CHECK(v == 0.0);
}

TEST_CASE("bias gradient of a linear net ignores input offsets") {
  Rng rng(6);
  MultiHeadNetwork net = single({LayerSpec::dense(3, 2)}, &rng);
  Tensor grad_out({2});
  grad_out.data = {0.7, -0.3};

  auto bias_grad = [&](const Tensor& input) {
    MultiHeadCache cache;
    forward(net, input, &cache);
    const MultiHeadGradients g = backward(net, cache, {grad_out});
    return g.trunk.layers[0].bias.data;
  };

  Tensor x = random_tensor({3}, rng);
  Tensor x_off = x;
  for (double& v : x_off.data) v += 11.0;
  CHECK(bias_grad(x) == bias_grad(x_off));

  // With weights frozen at zero the input gradient vanishes entirely.
  for (double& v : net.trunk.params[0].weight.data) v = 0.0;
  MultiHeadCache cache;
  forward(net, x, &cache);
  const MultiHeadGradients g = backward(net, cache, {grad_out});
  for (double v : g.trunk.input_grad.data) CHECK(v == 0.0);
}

TEST_CASE("adamw: zero gradient and zero decay leave parameters unchanged") {
  Rng rng(7);
  MultiHeadNetwork net = single({LayerSpec::dense(3, 3)}, &rng);
  const std::vector<double> before = net.trunk.params[0].weight.data;
  AdamW opt = make_adamw(net, 1e-2, 0.0);
  MultiHeadGradients grads;
  grads.trunk.layers.resize(1);
  grads.trunk.layers[0].weight = Tensor({3, 3});
  grads.trunk.layers[0].bias = Tensor({3});
  adamw_step(net, grads, opt);
  CHECK(net.trunk.params[0].weight.data == before);
}

TEST_CASE("adamw first step moves a scalar by about -lr*sign(g)") {
  MultiHeadNetwork net = single({LayerSpec::dense(1, 1)}, nullptr);
  net.trunk.params[0].weight.data = {0.0};
  AdamW opt = make_adamw(net, 1e-3, 0.0);
  MultiHeadGradients grads;
  grads.trunk.layers.resize(1);
  grads.trunk.layers[0].weight = Tensor({1, 1});
  grads.trunk.layers[0].bias = Tensor({1});
  grads.trunk.layers[0].weight.data = {0.37};
  adamw_step(net, grads, opt);
  // With bias correction the first step is exactly -lr * g / (|g| + eps).
  const double expected = -1e-3 * 0.37 / (0.37 + 1e-8);
  CHECK(net.trunk.params[0].weight.data[0] ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(net.trunk.params[0].weight.data[0] ==
        doctest::Approx(-1e-3).epsilon(1e-6));
}

TEST_CASE("decoupled decay shrinks by (1 - lr*wd) per step on zero gradient") {
  MultiHeadNetwork net = single({LayerSpec::dense(1, 1)}, nullptr);
  net.trunk.params[0].weight.data = {2.0};
  AdamW opt = make_adamw(net, 0.1, 0.5);
  MultiHeadGradients grads;
  grads.trunk.layers.resize(1);
  grads.trunk.layers[0].weight = Tensor({1, 1});
  grads.trunk.layers[0].bias = Tensor({1});
  adamw_step(net, grads, opt);
  CHECK(net.trunk.params[0].weight.data[0] ==
        doctest::Approx(2.0 * (1.0 - 0.1 * 0.5)).epsilon(1e-12));
  adamw_step(net, grads, opt);
  CHECK(net.trunk.params[0].weight.data[0] ==
        doctest::Approx(2.0 * 0.95 * 0.95).epsilon(1e-12));
}

TEST_CASE("non-finite gradients abort the update") {
  MultiHeadNetwork net = single({LayerSpec::dense(1, 1)}, nullptr);
  AdamW opt = make_adamw(net, 1e-3, 0.0);
  MultiHeadGradients grads;
  grads.trunk.layers.resize(1);
  grads.trunk.layers[0].weight = Tensor({1, 1});
  grads.trunk.layers[0].bias = Tensor({1});
  grads.trunk.layers[0].weight.data = {std::nan("")};
  CHECK_THROWS_AS(adamw_step(net, grads, opt), NumericError);
}

TEST_CASE("cross entropy of uniform logits over two classes is ln 2") {
  Tensor logits({2});
  logits.data = {0.4, 0.4};
  const CrossEntropy ce = softmax_cross_entropy(logits, 0);
  CHECK(ce.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy loss vanishes with a huge correct-class margin") {
  Tensor logits({2});
  logits.data = {60.0, 0.0};
  CHECK(softmax_cross_entropy(logits, 0).loss < 1e-12);
}

TEST_CASE("cross entropy gradient matches finite differences") {
  Rng rng(8);
  Tensor logits = random_tensor({4}, rng);
  const CrossEntropy ce = softmax_cross_entropy(logits, 2);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    auto f = [&](double x) {
      Tensor perturbed = logits;
      perturbed[i] = x;
      return softmax_cross_entropy(perturbed, 2).loss;
    };
    const double numeric = oracles::central_difference(f, logits[i], 1e-5);
    CHECK(oracles::relative_error(ce.logit_grad[i], numeric) < 1e-6);
  }
}

TEST_CASE("flnn round-trip is bit-exact") {
  Rng rng(9);
  MultiHeadNetwork net;
  net.trunk = build_network(
      {LayerSpec::conv(2, 3, 1, 4), LayerSpec::relu(), LayerSpec::maxpool(2),
       LayerSpec::flatten()},
      &rng);
  net.heads.push_back(build_network({LayerSpec::dense(4 * 3 * 3, 2)}, &rng));
  net.heads.push_back(build_network({LayerSpec::dense(4 * 3 * 3, 2)}, &rng));

  const std::string path =
      (std::filesystem::temp_directory_path() / "eraseg_test_net.flnn").string();
  save_network(path, net);
  const MultiHeadNetwork back = load_network(path);

  REQUIRE(back.heads.size() == net.heads.size());
  const auto a = param_tensors(net);
  const auto b = param_tensors(back);
  REQUIRE(a.size() == b.size());
  for (std::size_t t = 0; t < a.size(); ++t) CHECK(a[t]->data == b[t]->data);

  // Same functional behavior after reload.
  const Tensor input = random_tensor({1, 7, 7}, rng);
  const auto outs_a = forward(net, input);
  const auto outs_b = forward(back, input);
  for (std::size_t h = 0; h < outs_a.size(); ++h)
    CHECK(outs_a[h].data == outs_b[h].data);

  std::filesystem::remove(path);
}

TEST_CASE("truncated flnn payload is rejected") {
  Rng rng(10);
  MultiHeadNetwork net = single({LayerSpec::dense(4, 2)}, &rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "eraseg_test_trunc.flnn")
          .string();
  save_network(path, net);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
  CHECK_THROWS_AS(load_network(path), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("stale cache is rejected") {
  Rng rng(11);
  MultiHeadNetwork net = single({LayerSpec::dense(3, 2)}, &rng);
  MultiHeadNetwork other =
      single({LayerSpec::dense(3, 2), LayerSpec::relu()}, &rng);
  MultiHeadCache cache;
  forward(net, random_tensor({3}, rng), &cache);
  Tensor g({2});
  CHECK_THROWS_AS(backward(other.trunk, cache.trunk, g), DataError);
}
