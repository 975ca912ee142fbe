#include <cmath>
#include <random>

#include "doctest.h"
#include "hseg/autodiff.hpp"
#include "oracles/oracles.hpp"

using namespace hseg;
using namespace hseg::ad;

namespace {

template <typename T>
Tensor<T> random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor<T> t(std::move(shape));
  for (T& v : t.data()) v = static_cast<T>(d(rng));
  return t;
}

std::vector<double> flat(const Tensor<double>& t) { return {t.data().begin(), t.data().end()}; }

// Checks d loss / d input for a graph built by `build` on one leaf.
template <typename Build>
double fd_error(const Tensor<double>& x0, Build build, double step = 1e-6) {
  Tape<double> tape;
  const Var x = tape.leaf(x0);
  tape.backward(build(tape, x));
  const std::vector<double> analytic = flat(tape.grad(x));
  std::vector<double> values = flat(x0);
  auto f = [&] {
    Tape<double> t;
    const Var v = t.leaf(Tensor<double>(x0.shape(), values));
    return t.value(build(t, v)).item();
  };
  return oracle::relative_error(analytic, oracle::numeric_gradient(values, f, step));
}

}  // namespace

TEST_CASE("conv2d identity and bias-only cases") {
  std::mt19937_64 rng(1);
  const Tensor<float> x = random_tensor<float>(rng, {3, 5, 6});
  Tensor<float> w({3, 3, 1, 1}), b({3});
  for (std::size_t c = 0; c < 3; ++c) w[c * 3 + c] = 1.0f;
  CHECK(conv2d_forward(x, w, b, 1, 0) == x);

  Tensor<float> zw({2, 3, 3, 3}), bias({2});
  bias[0] = 0.25f;
  bias[1] = -1.5f;
  const Tensor<float> y = conv2d_forward(x, zw, bias, 1, 1);
  for (std::size_t i = 0; i < 30; ++i) CHECK(y[i] == 0.25f);
  for (std::size_t i = 30; i < 60; ++i) CHECK(y[i] == -1.5f);
}

TEST_CASE("conv2d matches the direct six-loop reference on random draws") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t ci = 1 + rng() % 4, co = 1 + rng() % 4;
    const std::size_t k = 1 + 2 * (rng() % 3);
    const std::size_t h = k + rng() % 9, w = k + rng() % 9;
    const int stride = 1 + static_cast<int>(rng() % 2);
    const int pad = static_cast<int>(rng() % (k / 2 + 1));
    const Tensor<double> x = random_tensor<double>(rng, {ci, h, w});
    const Tensor<double> wt = random_tensor<double>(rng, {co, ci, k, k});
    const Tensor<double> b = random_tensor<double>(rng, {co});
    const Tensor<double> got = conv2d_forward(x, wt, b, stride, pad);
    const Tensor<double> want = oracle::conv2d(x, wt, b, stride, pad);
    REQUIRE(got.shape() == want.shape());
    double err = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) err = std::max(err, std::abs(got[i] - want[i]));
    CHECK(err < 1e-6);
  }
}

TEST_CASE("conv2d rejects mismatched shapes") {
  Tape<float> tape;
  const Var x = tape.leaf(Tensor<float>({2, 4, 4}));
  const Var w = tape.leaf(Tensor<float>({3, 3, 3, 3}));
  const Var b = tape.leaf(Tensor<float>({3}));
  CHECK_THROWS_AS(conv2d(tape, x, w, b), DomainError);
  const Var w2 = tape.leaf(Tensor<float>({3, 2, 2, 2}));
  CHECK_THROWS_AS(conv2d(tape, x, w2, b), DomainError);
}

TEST_CASE("backward basics") {
  Tape<double> tape;
  const Var x = tape.leaf(Tensor<double>({2, 3, 3}, 0.7));
  const Var unused = tape.leaf(Tensor<double>({4}, 1.0));
  CHECK_THROWS_AS(tape.backward(x), DomainError);
  tape.backward(sum(tape, x));
  const Tensor<double> gx = tape.grad(x), gu = tape.grad(unused);
  for (double g : gx.data()) CHECK(g == 1.0);
  for (double g : gu.data()) CHECK(g == 0.0);

  Tape<double> t2;
  const Var y = t2.leaf(Tensor<double>({3, 2, 2}, 0.3));
  const Var l = l1_loss(t2, y, y, Tensor<double>({2, 2}, 1.0));
  t2.backward(l);
  CHECK(t2.value(l).item() == 0.0);
  const Tensor<double> gy = t2.grad(y);
  for (double g : gy.data()) CHECK(g == 0.0);
}

TEST_CASE("l1_loss and structural op examples") {
  Tape<float> tape;
  const Var pred = tape.leaf(Tensor<float>({12, 4, 4}, 0.0f));
  const Var target = tape.constant(Tensor<float>({12, 4, 4}, 0.5f));
  CHECK(tape.value(l1_loss(tape, pred, target, Tensor<float>({4, 4}, 1.0f))).item() ==
        doctest::Approx(6.0));
  CHECK_THROWS_AS(l1_loss(tape, pred, target, Tensor<float>({4, 4}, 0.0f)), DomainError);

  std::mt19937_64 rng(3);
  const Tensor<float> xv = random_tensor<float>(rng, {2, 3, 3}, 0.0, 1.0);
  const Var x = tape.leaf(xv);
  for (float v : tape.value(relu(tape, scale(tape, x, -1.0f))).data()) CHECK(v == 0.0f);

  const Var a = tape.leaf(random_tensor<float>(rng, {2, 4, 4}));
  const Var b = tape.leaf(random_tensor<float>(rng, {3, 4, 4}));
  const std::array<Var, 2> parts{a, b};
  const Var c = concat<float>(tape, parts);
  CHECK(tape.value(c).shape() == Shape{5, 4, 4});
  CHECK(tape.value(slice_channels(tape, c, 0, 2)) == tape.value(a));
  CHECK(tape.value(slice_channels(tape, c, 2, 5)) == tape.value(b));
}

TEST_CASE("maxpool then upsample is idempotent on block-constant maps") {
  std::mt19937_64 rng(4);
  Tensor<float> x({3, 8, 6});
  const Tensor<float> blocks = random_tensor<float>(rng, {3, 4, 3});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t xx = 0; xx < 6; ++xx) x.at(c, y, xx) = blocks.at(c, y / 2, xx / 2);
  Tape<float> tape;
  const Var v = tape.leaf(x);
  CHECK(tape.value(upsample2x(tape, maxpool2x2(tape, v))) == x);
}

TEST_CASE("every op matches central differences at 64-bit") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t c = 1 + rng() % 4, h = 2 * (1 + rng() % 4), w = 2 * (1 + rng() % 4);
    const Tensor<double> x = random_tensor<double>(rng, {c, h, w});
    const Tensor<double> wt = random_tensor<double>(rng, {3, c, 3, 3});
    const Tensor<double> other = random_tensor<double>(rng, {c, h, w});
    const Tensor<double> probe = random_tensor<double>(rng, {c, h, w});
    Tensor<double> mask({h, w});
    for (double& m : mask.data()) m = rng() % 3 ? 1.0 : 0.0;
    mask[0] = 1.0;
    Tensor<double> bits({c, h, w});
    for (double& v : bits.data()) v = static_cast<double>(rng() % 2);

    // A random 1x1 projection before the sum keeps the loss sensitive to
    // every output entry.
    auto weighted = [](Tape<double>& t, Var v, std::mt19937_64::result_type salt) {
      const Shape& s = t.value(v).shape();
      std::mt19937_64 r(salt);
      std::uniform_real_distribution<double> d(-1.0, 1.0);
      Tensor<double> k({1, s[0], 1, 1});
      for (double& q : k.data()) q = d(r);
      const Var y = conv2d(t, v, t.constant(k), t.constant(Tensor<double>({1})), 1, 0);
      return sum(t, y);
    };
    const auto salt = rng();

    CHECK(fd_error(x, [&](Tape<double>& t, Var v) {
      return weighted(t, conv2d(t, v, t.constant(wt), t.constant(Tensor<double>({3})), 1, 1), salt);
    }) < 1e-7);
    CHECK(fd_error(wt, [&](Tape<double>& t, Var v) {
      return weighted(t, conv2d(t, t.constant(x), v, t.constant(Tensor<double>({3})), 2, 1), salt);
    }) < 1e-7);
    CHECK(fd_error(x, [&](Tape<double>& t, Var v) { return weighted(t, sigmoid(t, v), salt); }) < 1e-7);
    CHECK(fd_error(x, [&](Tape<double>& t, Var v) { return weighted(t, relu(t, v), salt); }) < 1e-7);
    CHECK(fd_error(x, [&](Tape<double>& t, Var v) { return weighted(t, maxpool2x2(t, v), salt); }) < 1e-7);
    CHECK(fd_error(x, [&](Tape<double>& t, Var v) { return weighted(t, upsample2x(t, v), salt); }) < 1e-7);
    CHECK(fd_error(x, [&](Tape<double>& t, Var v) {
      const std::array<Var, 3> parts{v, t.constant(other), v};
      return weighted(t, slice_channels(t, concat<double>(t, parts), 1, 2 * c), salt);
    }) < 1e-7);
    CHECK(fd_error(x, [&](Tape<double>& t, Var v) {
      return l1_loss(t, v, t.constant(other), mask);
    }) < 1e-7);
    CHECK(fd_error(x, [&](Tape<double>& t, Var v) {
      return l1_loss(t, t.constant(other), v, mask);
    }) < 1e-7);
    CHECK(fd_error(x, [&](Tape<double>& t, Var v) { return bce_loss(t, v, bits); }) < 1e-7);
  }
}

TEST_CASE("bce_loss is stable for large logits") {
  Tape<float> tape;
  Tensor<float> logits({1, 1, 2});
  logits[0] = 80.0f;
  logits[1] = -80.0f;
  Tensor<float> target({1, 1, 2});
  target[0] = 1.0f;
  target[1] = 1.0f;  // the second logit is confidently wrong
  const Var l = bce_loss(tape, tape.leaf(logits), target);
  const float v = tape.value(l).item();
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(40.0).epsilon(1e-4));
}

namespace {

// conv -> relu -> conv -> sigmoid -> conv, scalar loss.
template <typename T>
Var three_layer(Tape<T>& tape, Var x, const std::vector<Var>& p, const Tensor<T>& target) {
  Var h = relu(tape, conv2d(tape, x, p[0], p[1]));
  h = sigmoid(tape, conv2d(tape, h, p[2], p[3]));
  h = conv2d(tape, h, p[4], p[5]);
  const Tensor<T> mask({tape.value(h).extent(1), tape.value(h).extent(2)}, T{1});
  return l1_loss(tape, h, tape.constant(target), mask);
}

template <typename T>
double three_layer_error(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Tensor<double> x = random_tensor<double>(rng, {2, 6, 6});
  std::vector<Tensor<double>> params{random_tensor<double>(rng, {4, 2, 3, 3}),
                                     random_tensor<double>(rng, {4}),
                                     random_tensor<double>(rng, {3, 4, 3, 3}),
                                     random_tensor<double>(rng, {3}),
                                     random_tensor<double>(rng, {2, 3, 1, 1}),
                                     random_tensor<double>(rng, {2})};
  const Tensor<double> target = random_tensor<double>(rng, {2, 6, 6}, -3.0, 3.0);

  Tape<T> tape;
  std::vector<Var> p;
  for (const auto& t : params) p.push_back(tape.leaf(t.template cast<T>()));
  tape.backward(three_layer(tape, tape.constant(x.cast<T>()), p, target.cast<T>()));

  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor<T> g = tape.grad(p[i]);
    std::vector<double> analytic(g.data().begin(), g.data().end());
    std::vector<double> values = flat(params[i]);
    auto f = [&] {
      Tape<double> t;
      std::vector<Var> q;
      for (std::size_t j = 0; j < params.size(); ++j) {
        q.push_back(t.leaf(j == i ? Tensor<double>(params[j].shape(), values) : params[j]));
      }
      return t.value(three_layer(t, t.constant(x), q, target)).item();
    };
    worst = std::max(worst, oracle::relative_error(analytic, oracle::numeric_gradient(values, f, 1e-6)));
  }
  return worst;
}

}  // namespace

TEST_CASE("random three-layer network gradients") {
  for (std::uint64_t seed : {1, 2, 3}) {
    CHECK(three_layer_error<double>(seed) < 1e-7);
    CHECK(three_layer_error<float>(seed) < 1e-4);
  }
}

TEST_CASE("adam examples") {
  std::vector<Tensor<float>> params{Tensor<float>({3}, 1.0f)};
  std::vector<Tensor<float>> grads{Tensor<float>({3}, 0.0f)};
  AdamState<float> state;
  adam_step<float>(params, grads, state, AdamOptions{0.1});
  CHECK(state.step == 1);
  for (float v : params[0].data()) CHECK(v == 1.0f);

  // Constant gradient: every step moves by ~lr * sign(g).
  std::vector<Tensor<double>> p{Tensor<double>({2}, 0.0)};
  std::vector<Tensor<double>> g{Tensor<double>({2})};
  g[0][0] = 3.0;
  g[0][1] = -0.02;
  AdamState<double> s;
  const AdamOptions opts{0.01};
  double before0 = 0, before1 = 0;
  for (int i = 0; i < 500; ++i) {
    before0 = p[0][0];
    before1 = p[0][1];
    adam_step<double>(p, g, s, opts);
  }
  CHECK(p[0][0] - before0 == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(p[0][1] - before1 == doctest::Approx(0.01).epsilon(1e-6));

  std::vector<Tensor<double>> bad{Tensor<double>({3})};
  CHECK_THROWS_AS(adam_step<double>(p, bad, s, opts), DomainError);
}

TEST_CASE("adam matches a scalar reference over several steps") {
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::vector<Tensor<double>> p{Tensor<double>({1}, 0.3)};
  AdamState<double> s;
  double x = 0.3, m = 0.0, v = 0.0;
  const double gs[] = {0.5, -1.25, 2.0, 0.0, 0.75};
  for (int t = 1; t <= 5; ++t) {
    const double gr = gs[t - 1];
    std::vector<Tensor<double>> g{Tensor<double>({1}, gr)};
    adam_step<double>(p, g, s, AdamOptions{lr, b1, b2, eps});
    m = b1 * m + (1 - b1) * gr;
    v = b2 * v + (1 - b2) * gr * gr;
    const double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
    x -= lr * mh / (std::sqrt(vh) + eps);
    CHECK(p[0][0] == doctest::Approx(x).epsilon(1e-14));
  }
  // First step from zero state moves by lr * g / (|g| + eps).
  std::vector<Tensor<double>> q{Tensor<double>({1}, 0.0)};
  AdamState<double> s2;
  std::vector<Tensor<double>> g{Tensor<double>({1}, 0.4)};
  adam_step<double>(q, g, s2, AdamOptions{lr, b1, b2, eps});
  CHECK(q[0][0] == doctest::Approx(-lr * 0.4 / (0.4 + eps)).epsilon(1e-14));
}
