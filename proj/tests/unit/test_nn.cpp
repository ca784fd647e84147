#include <doctest.h>

#include <cmath>
#include <functional>

#include "fddm/error.hpp"
#include "fddm/nn/convert.hpp"
#include "fddm/nn/layers.hpp"
#include "fddm/nn/ops.hpp"
#include "fddm/rng.hpp"

using namespace fddm;
using namespace fddm::nn;

namespace {

Tensor random_tensor(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Tensor t(s);
  for (float& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

// Scalar probe: sum(f(inputs) * R) with R a fixed random tensor, so every
// output element contributes a distinct weight.
using Fn = std::function<Var(const std::vector<Var>&)>;

double probe(const Fn& f, const std::vector<Var>& inputs, Tensor* weights) {
  NoGradGuard guard;
  Var out = f(inputs);
  if (weights->data.empty()) *weights = random_tensor(out->shape(), 555);
  double s = 0.0;
  for (std::size_t i = 0; i < out->value.data.size(); ++i) s += out->value.data[i] * weights->data[i];
  return s;
}

void check_gradients(const Fn& f, std::vector<Tensor> values, double h = 1e-2, double tol = 2e-3) {
  std::vector<Var> params;
  for (auto& v : values) params.push_back(parameter(v));
  Tensor weights;
  probe(f, params, &weights);
  Var out = f(params);
  Var loss = nn::mean(mul(out, constant(weights)));
  backward(loss);
  const double scale = 1.0 / static_cast<double>(weights.numel());
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& data = params[k]->value.data;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const float saved = data[i];
      data[i] = saved + static_cast<float>(h);
      const double up = probe(f, params, &weights);
      data[i] = saved - static_cast<float>(h);
      const double down = probe(f, params, &weights);
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * h) * scale;
      const double analytic = params[k]->grad.data[i];
      CHECK(std::abs(analytic - numeric) <= tol * std::max(scale, std::abs(numeric)));
    }
  }
}

}  // namespace

TEST_CASE("conv2d matches direct correlation") {
  const Tensor x = random_tensor({2, 3, 7, 6}, 1);
  const Tensor w = random_tensor({4, 3, 3, 3}, 2);
  const Tensor b = random_tensor({1, 4, 1, 1}, 3);
  for (int stride : {1, 2}) {
    NoGradGuard guard;
    const Var y = conv2d(constant(x), constant(w), constant(b), stride, 1);
    const int oh = (7 + 2 - 3) / stride + 1;
    const int ow = (6 + 2 - 3) / stride + 1;
    REQUIRE(y->shape() == Shape{2, 4, oh, ow});
    for (int n = 0; n < 2; ++n) {
      for (int o = 0; o < 4; ++o) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            double acc = b.data[o];
            for (int c = 0; c < 3; ++c) {
              for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                  const int iy = oy * stride + ky - 1;
                  const int ix = ox * stride + kx - 1;
                  if (iy < 0 || iy >= 7 || ix < 0 || ix >= 6) continue;
                  acc += w.data[((o * 3 + c) * 3 + ky) * 3 + kx] * x.channel(n, c)[iy * 6 + ix];
                }
              }
            }
            CHECK(y->value.channel(n, o)[oy * ow + ox] == doctest::Approx(acc).epsilon(1e-5));
          }
        }
      }
    }
  }
}

TEST_CASE("conv2d gradients") {
  for (int stride : {1, 2}) {
    check_gradients([stride](const std::vector<Var>& v) { return conv2d(v[0], v[1], v[2], stride, 1); },
                    {random_tensor({2, 2, 6, 6}, 4), random_tensor({3, 2, 3, 3}, 5),
                     random_tensor({1, 3, 1, 1}, 6)});
  }
  check_gradients([](const std::vector<Var>& v) { return conv2d(v[0], v[1], v[2], 1, 0); },
                  {random_tensor({2, 3, 4, 4}, 7), random_tensor({2, 3, 1, 1}, 8),
                   random_tensor({1, 2, 1, 1}, 9)});
}

TEST_CASE("elementwise and structural gradients") {
  const Tensor a = random_tensor({2, 4, 4, 4}, 10);
  const Tensor b = random_tensor({2, 4, 4, 4}, 11);
  check_gradients([](const std::vector<Var>& v) { return add(v[0], v[1]); }, {a, b});
  check_gradients([](const std::vector<Var>& v) { return sub(v[0], v[1]); }, {a, b});
  check_gradients([](const std::vector<Var>& v) { return mul(v[0], v[1]); }, {a, b});
  check_gradients([](const std::vector<Var>& v) { return scale(v[0], -2.5f); }, {a});
  check_gradients([](const std::vector<Var>& v) { return add_channel_bias(v[0], v[1]); },
                  {a, random_tensor({2, 4, 1, 1}, 12)});
  check_gradients([](const std::vector<Var>& v) { return concat_channels({v[0], v[1]}); }, {a, b});
  check_gradients([](const std::vector<Var>& v) { return slice_channels(v[0], 1, 2); }, {a});
  check_gradients([](const std::vector<Var>& v) { return concat_batch({v[0], v[1]}); }, {a, b});
  check_gradients([](const std::vector<Var>& v) { return upsample_nearest(v[0]); }, {a});
  check_gradients([](const std::vector<Var>& v) { return rotate_left(v[0]); }, {a});
  check_gradients([](const std::vector<Var>& v) { return rotate_right(v[0]); }, {a});
}

TEST_CASE("activation gradients") {
  // Keep samples away from the kinks of the piecewise linear units.
  Tensor a = random_tensor({1, 3, 5, 5}, 13, 0.1, 1.5);
  for (std::size_t i = 0; i < a.data.size(); i += 2) a.data[i] = -a.data[i];
  check_gradients([](const std::vector<Var>& v) { return leaky_relu(v[0], 0.2f); }, {a});
  check_gradients([](const std::vector<Var>& v) { return relu(v[0]); }, {a});
  check_gradients([](const std::vector<Var>& v) { return silu(v[0]); }, {a});
  check_gradients([](const std::vector<Var>& v) { return nn::tanh(v[0]); }, {a});
  check_gradients([](const std::vector<Var>& v) { return sigmoid(v[0]); }, {a});
}

TEST_CASE("group norm gradients and statistics") {
  const Tensor x = random_tensor({2, 4, 3, 3}, 14);
  const Tensor g = random_tensor({1, 4, 1, 1}, 15, 0.5, 1.5);
  const Tensor b = random_tensor({1, 4, 1, 1}, 16);
  check_gradients([](const std::vector<Var>& v) { return group_norm(v[0], v[1], v[2], 2); }, {x, g, b},
                  1e-2, 5e-3);
  NoGradGuard guard;
  const Var y = group_norm(constant(x), constant(Tensor({1, 4, 1, 1}, 1.0f)),
                           constant(Tensor({1, 4, 1, 1}, 0.0f)), 2);
  for (int n = 0; n < 2; ++n) {
    for (int grp = 0; grp < 2; ++grp) {
      const float* p = y->value.channel(n, 2 * grp);
      double m = 0.0, sq = 0.0;
      for (int i = 0; i < 18; ++i) {
        m += p[i];
        sq += p[i] * p[i];
      }
      CHECK(std::abs(m / 18) < 1e-5);
      CHECK(sq / 18 == doctest::Approx(1.0).epsilon(1e-3));
    }
  }
}

TEST_CASE("reduction gradients and values") {
  const Tensor a = random_tensor({2, 2, 3, 3}, 17);
  Tensor b = a;
  for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] += (i % 2 == 0 ? 0.3f : -0.4f);
  check_gradients([](const std::vector<Var>& v) { return mean_abs_diff(v[0], v[1]); }, {a, b});
  check_gradients([](const std::vector<Var>& v) { return mean_squared_diff(v[0], v[1]); }, {a, b});
  check_gradients([](const std::vector<Var>& v) { return half_sum_squares(v[0]); }, {a});
  check_gradients([](const std::vector<Var>& v) { return mean_softplus(v[0], 1.0f); }, {a});
  check_gradients([](const std::vector<Var>& v) { return mean_softplus(v[0], -1.0f); }, {a});
  check_gradients([](const std::vector<Var>& v) { return nn::mean(v[0]); }, {a});

  NoGradGuard guard;
  const Tensor zeros({3, 1, 2, 2}, 0.0f);
  CHECK(scalar_value(mean_softplus(constant(zeros), -1.0f)) == doctest::Approx(std::log(2.0)));
  Tensor two({2, 2, 1, 1}, 0.0f);
  two.data = {1.0f, 1.0f, 2.0f, 0.0f};
  // Per-sample 0.5 * sum: (1, 2), batch mean 1.5.
  CHECK(scalar_value(half_sum_squares(constant(two))) == doctest::Approx(1.5));
}

TEST_CASE("gradient mode and detach") {
  const Var p = parameter(random_tensor({1, 1, 2, 2}, 18));
  {
    NoGradGuard guard;
    CHECK_FALSE(grad_enabled());
    const Var y = scale(p, 2.0f);
    CHECK(y->parents.empty());
  }
  CHECK(grad_enabled());
  backward(nn::mean(add(detach(p), scale(p, 3.0f))));
  for (float g : p->grad.data) CHECK(g == doctest::Approx(0.75));
  CHECK_THROWS_AS(backward(p), Error);
}

TEST_CASE("shape errors") {
  const Var a = constant(Tensor({1, 2, 4, 4}));
  const Var b = constant(Tensor({1, 3, 4, 4}));
  CHECK_THROWS_AS(add(a, b), Error);
  CHECK_THROWS_AS(conv2d(a, constant(Tensor({2, 3, 3, 3})), nullptr, 1, 1), Error);
  CHECK(rotate_left(constant(Tensor({1, 1, 3, 4})))->shape() == Shape{1, 1, 4, 3});
}

TEST_CASE("rmsprop step and ema law") {
  ParamSet set;
  Var p = set.add("p", Tensor({1, 1, 1, 2}, 1.0f));
  RmsProp opt(set, RmsProp::Options{0.1, 0.99, 1e-8});
  p->grad_buffer().data = {2.0f, -0.5f};
  opt.step();
  // v = 0.01 g^2, step = lr g / (0.1 |g|) = lr * sign(g) * 10.
  CHECK(p->value.data[0] == doctest::Approx(1.0 - 1.0).epsilon(1e-5));
  CHECK(p->value.data[1] == doctest::Approx(1.0 + 1.0).epsilon(1e-5));

  ParamSet live;
  Var q = live.add("q", Tensor({1, 1, 1, 1}, 0.0f));
  Ema ema(live, 0.9);
  q->value.data[0] = 1.0f;
  for (int k = 1; k <= 20; ++k) {
    ema.update(live);
    CHECK(1.0 - ema.shadow()[0].data[0] == doctest::Approx(std::pow(0.9, k)).epsilon(1e-5));
  }
  Ema frozen(live, 1.0);
  q->value.data[0] = 5.0f;
  frozen.update(live);
  CHECK(frozen.shadow()[0].data[0] == 1.0f);
  Ema follow(live, 0.0);
  q->value.data[0] = -3.0f;
  follow.update(live);
  CHECK(follow.shadow()[0].data[0] == -3.0f);

  ParamSet scalar;
  Var z = scalar.add("z", Tensor({1, 1, 1, 1}, 0.0f));
  Ema tiny(scalar, 0.9999);
  z->value.data[0] = 1.0f;
  tiny.update(scalar);
  CHECK(tiny.shadow()[0].data[0] == doctest::Approx(1e-4).epsilon(1e-6));
  CHECK_THROWS_AS(Ema(scalar, 1.5), Error);
}

TEST_CASE("swap values round trip") {
  ParamSet set;
  set.add("a", Tensor({1, 1, 1, 2}, 1.0f));
  std::vector<Tensor> other = {Tensor({1, 1, 1, 2}, 7.0f)};
  swap_values(set, other);
  CHECK(set.entries()[0].second->value.data[0] == 7.0f);
  CHECK(other[0].data[0] == 1.0f);
  std::vector<Tensor> bad = {Tensor({1, 1, 1, 3})};
  CHECK_THROWS_AS(swap_values(set, bad), Error);
}

TEST_CASE("image conversion round trip") {
  Image2D img(5, 3);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = 0.25 * static_cast<double>(i);
  Tensor t({2, 3, 3, 5});
  store_image(t, 1, 2, img);
  CHECK(load_image(t, 1, 2) == img);
  const Tensor s = stack_images(std::vector<Image2D>{img, img});
  CHECK(s.shape == Shape{2, 1, 3, 5});
}
