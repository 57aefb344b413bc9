// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "awplab/rng.hpp"
#include "awplab/tape.hpp"

using namespace awplab;

TEST_CASE("relu forward") {
  Tape t;
  auto x = t.leaf(Tensor({3}, {-1.0, 0.0, 2.0}));
  auto y = t.relu(x);
  CHECK(t.value(y).data == std::vector<double>{0.0, 0.0, 2.0});
}

TEST_CASE("matmul identity leaves operand unchanged") {
  SplitMix64 rng(7);
  Tensor A = Tensor::zeros({3, 3});
  for (double& v : A.data) v = rng.uniform(-1.0, 1.0);
  Tensor I = Tensor::zeros({3, 3});
  for (int i = 0; i < 3; ++i) I.data[static_cast<size_t>(i) * 3 + i] = 1.0;
  Tape t;
  auto y = t.matmul(t.leaf(I), t.leaf(A));
  CHECK(t.value(y).data == A.data);
}

TEST_CASE("conv2d all-ones 2x2 kernel on all-ones 3x3 input") {
  // hand evaluation: every 2x2 window sums to 4
  Tape t;
  auto x = t.leaf(Tensor::full({1, 1, 3, 3}, 1.0));
  auto k = t.leaf(Tensor::full({1, 1, 2, 2}, 1.0));
  auto y = t.conv2d(x, k, /*pad=*/0);
  CHECK(t.value(y).shape == std::vector<int>{1, 1, 2, 2});
  for (double v : t.value(y).data) CHECK(v == doctest::Approx(4.0));
}

TEST_CASE("matmul shape mismatch names operand shapes") {
  Tape t;
  auto a = t.leaf(Tensor::zeros({2, 3}));
  auto b = t.leaf(Tensor::zeros({4, 2}));
  CHECK_THROWS_WITH_AS(t.matmul(a, b), doctest::Contains("[2,3]"), Error);
}

TEST_CASE("backward of sum(w * x) gives w") {
  Tape t;
  Tensor w({4}, {1.0, -2.0, 3.0, 0.5});
  auto wn = t.constant(w);
  auto xn = t.leaf(Tensor({4}, {0.1, 0.2, 0.3, 0.4}));
  auto root = t.sum_all(t.mul(wn, xn));
  t.backward(root);
  CHECK(t.grad(xn).data == w.data);
}

TEST_CASE("relu subgradient: 0 at negative and at exactly 0, 1 at positive") {
  Tape t;
  auto x = t.leaf(Tensor({3}, {-1.0, 0.0, 2.0}));
  auto root = t.sum_all(t.relu(x));
  t.backward(root);
  CHECK(t.grad(x).data == std::vector<double>{0.0, 0.0, 1.0});
}

TEST_CASE("backward rejects non-scalar root") {
  Tape t;
  auto x = t.leaf(Tensor({2}, {1.0, 2.0}));
  CHECK_THROWS_AS(t.backward(x), Error);
}

TEST_CASE("finite_difference_check: f = 0.5*||x||^2 has gradient x") {
  Tensor x({5}, {0.3, -1.2, 0.7, 2.0, -0.4});
  auto f = [](const Tensor& v) { return 0.5 * dot(v.data, v.data); };
  CHECK(finite_difference_check(f, x, x, 1e-5) < 1e-9);
}

TEST_CASE("finite_difference_check: constant function has zero gradient") {
  Tensor x({3}, {1.0, 2.0, 3.0});
  auto f = [](const Tensor&) { return 42.0; };
  CHECK(finite_difference_check(f, x, Tensor::zeros({3}), 1e-5) == 0.0);
}

TEST_CASE("log_softmax CE gradient equals softmax minus onehot") {
  SplitMix64 rng(42);
  const int C = 5;
  Tensor z = Tensor::zeros({1, C});
  for (double& v : z.data) v = rng.uniform(-2.0, 2.0);
  const int y = 2;

  Tape t;
  auto zn = t.leaf(z);
  auto root = t.affine(t.sum_all(t.pick(t.log_softmax(zn), {y})), -1.0, 0.0);
  t.backward(root);

  // closed form
  double mx = z.data[0];
  for (double v : z.data) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : z.data) s += std::exp(v - mx);
  for (int c = 0; c < C; ++c) {
    const double p = std::exp(z.data[static_cast<size_t>(c)] - mx) / s;
    const double expect = p - (c == y ? 1.0 : 0.0);
    CHECK(t.grad(zn).data[static_cast<size_t>(c)] == doctest::Approx(expect).epsilon(1e-10));
  }

  auto f = [&](const Tensor& v) {
    Tape t2;
    auto vn = t2.leaf(v);
    auto r = t2.affine(t2.sum_all(t2.pick(t2.log_softmax(vn), {y})), -1.0, 0.0);
    return t2.value(r).item();
  };
  CHECK(finite_difference_check(f, z, t.grad(zn), 1e-5) < 1e-6);
}

TEST_CASE("linearity of adjoints") {
  // backward(a*f + b*g) == a*grad(f) + b*grad(g)
  Tensor x0({3}, {0.5, -0.3, 1.1});
  const double a = 2.5, b = -1.25;
  auto grads_of = [&](bool combined) {
    Tape t;
    auto x = t.leaf(x0);
    auto f = t.sum_all(t.mul(x, x));          // ||x||^2
    auto g = t.sum_all(t.relu(x));            // sum relu
    Tape::NodeId root;
    if (combined)
      root = t.add(t.affine(f, a, 0.0), t.affine(g, b, 0.0));
    else
      root = f;
    t.backward(root);
    return t.grad(x).data;
  };
  auto combined = grads_of(true);
  // separate passes
  Tape tf;
  auto xf = tf.leaf(x0);
  tf.backward(tf.sum_all(tf.mul(xf, xf)));
  Tape tg;
  auto xg = tg.leaf(x0);
  tg.backward(tg.sum_all(tg.relu(xg)));
  for (size_t i = 0; i < combined.size(); ++i)
    CHECK(combined[i] == doctest::Approx(a * tf.grad(xf).data[i] + b * tg.grad(xg).data[i]).epsilon(1e-12));
}

TEST_CASE("determinism: identical inputs give bitwise-identical outputs") {
  auto run = [] {
    Tape t;
    SplitMix64 rng(99);
    Tensor x = Tensor::zeros({4, 6});
    for (double& v : x.data) v = rng.gaussian();
    Tensor w = Tensor::zeros({3, 6});
    for (double& v : w.data) v = rng.gaussian();
    auto root = t.sum_all(t.log_softmax(t.linear(t.leaf(x), t.leaf(w))));
    return t.value(root).item();
  };
  CHECK(run() == run());
}

TEST_CASE("leaf rejects non-finite input") {
  Tape t;
  CHECK_THROWS_AS(t.leaf(Tensor({1}, {std::nan("")})), Error);
}
