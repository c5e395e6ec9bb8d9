#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "factorlab/engine/adamw.hpp"
#include "factorlab/engine/grad_check.hpp"
#include "factorlab/engine/graph.hpp"
#include "factorlab/rng.hpp"

using namespace factorlab;
using engine::Graph;
using engine::Tensor;

namespace {

template <typename Real>
Tensor<Real> random_tensor(std::vector<int> shape, Rng& rng, bool requires_grad = true,
                           double scale = 1.0) {
  auto t = Tensor<Real>::zeros(std::move(shape), requires_grad);
  for (auto& v : t.values) v = static_cast<Real>((rng.next_double() * 2.0 - 1.0) * scale);
  return t;
}

/// Finite-difference check of a scalar-valued builder over one input tensor.
template <typename Real>
double fd_max_rel_err(Tensor<Real>& input,
                      const std::function<Tensor<Real>*(Graph<Real>&, Tensor<Real>*)>& build,
                      double h) {
  input.ensure_grad();
  input.zero_grad();
  {
    Graph<Real> g;
    g.backward(build(g, &input));
  }
  double worst = 0.0;
  for (size_t i = 0; i < input.values.size(); ++i) {
    const Real keep = input.values[i];
    input.values[i] = keep + static_cast<Real>(h);
    double up, down;
    {
      Graph<Real> g;
      up = static_cast<double>(build(g, &input)->item());
    }
    input.values[i] = keep - static_cast<Real>(h);
    {
      Graph<Real> g;
      down = static_cast<double>(build(g, &input)->item());
    }
    input.values[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    const double ad = static_cast<double>(input.grad[i]);
    worst = std::max(worst, std::abs(fd - ad) / std::max({1.0, std::abs(fd), std::abs(ad)}));
  }
  return worst;
}

/// Mixes the output through a fixed random projection so the scalar loss has
/// nontrivial gradients through every element.
template <typename Real>
Tensor<Real>* mix_to_scalar(Graph<Real>& g, Tensor<Real>* x, uint64_t seed) {
  Rng rng(seed);
  auto w = Tensor<Real>::zeros(x->shape);
  for (auto& v : w.values) v = static_cast<Real>(rng.next_double() * 2.0 - 1.0);
  return g.sum(g.mul(x, g.constant(std::move(w))));
}

}  // namespace

TEST_CASE("add computes elementwise sums") {
  Graph<double> g;
  auto* a = g.constant(Tensor<double>({2}, {1, 2}));
  auto* b = g.constant(Tensor<double>({2}, {3, 4}));
  auto* c = g.add(a, b);
  CHECK(c->values == std::vector<double>{4, 6});
}

TEST_CASE("matmul of zeros annihilates") {
  Graph<double> g;
  auto* a = g.constant(Tensor<double>::zeros({2, 3}));
  auto b = Tensor<double>::zeros({3, 2});
  for (size_t i = 0; i < b.values.size(); ++i) b.values[i] = double(i) - 2.5;
  auto* c = g.matmul(a, g.constant(std::move(b)));
  CHECK(c->shape == std::vector<int>{2, 2});
  for (double v : c->values) CHECK(v == 0.0);
}

TEST_CASE("softmax of equal logits is uniform") {
  Graph<double> g;
  auto* y = g.softmax_last(g.constant(Tensor<double>({3}, {0, 0, 0})));
  for (double v : y->values) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("shape mismatches raise structured errors naming the op") {
  Graph<double> g;
  auto* a = g.constant(Tensor<double>::zeros({2, 3}));
  auto* b = g.constant(Tensor<double>::zeros({3, 3}));
  CHECK_THROWS_WITH_AS(g.add(a, b), doctest::Contains("add"), Error);
  auto* c = g.constant(Tensor<double>::zeros({2, 2}));
  CHECK_THROWS_WITH_AS(g.matmul(a, c), doctest::Contains("matmul"), Error);
}

TEST_CASE("non-finite outputs are rejected") {
  Graph<double> g;
  auto* a = g.constant(Tensor<double>({1}, {1e308}));
  auto* b = g.constant(Tensor<double>({1}, {1e308}));
  CHECK_THROWS_AS(g.add(a, b), Error);
}

TEST_CASE("backward of sum of squares") {
  Graph<double> g;
  Tensor<double> w({2}, {1, 2}, true);
  auto* loss = g.sum(g.mul(&w, &w));
  g.backward(loss);
  CHECK(w.grad[0] == doctest::Approx(2.0));
  CHECK(w.grad[1] == doctest::Approx(4.0));
}

TEST_CASE("constant loss leaves grads zero") {
  Graph<double> g;
  Tensor<double> w({2}, {1, 2}, true);
  w.ensure_grad();
  auto* loss = g.sum(g.constant(Tensor<double>({2}, {5, 5})));
  g.backward(loss);
  CHECK(w.grad[0] == 0.0);
  CHECK(w.grad[1] == 0.0);
}

TEST_CASE("backward requires a scalar and a fresh graph") {
  Graph<double> g;
  Tensor<double> w({2}, {1, 2}, true);
  auto* y = g.mul(&w, &w);
  CHECK_THROWS_WITH_AS(g.backward(y), doctest::Contains("scalar"), Error);
  auto* loss = g.sum(y);
  g.backward(loss);
  CHECK_THROWS_WITH_AS(g.backward(loss), doctest::Contains("consumed"), Error);
}

TEST_CASE("backward is linear in the loss") {
  Rng rng(11);
  auto w = random_tensor<double>({3, 3}, rng);

  auto grads_of = [&](double a, double b) {
    w.ensure_grad();
    w.zero_grad();
    Graph<double> g;
    auto* l1 = g.sum(g.mul(&w, &w));
    auto* l2 = g.sum(g.gelu(&w));
    auto* combo = g.add(g.scale(l1, a), g.scale(l2, b));
    g.backward(combo);
    return w.grad;
  };

  const auto g1 = grads_of(1.0, 0.0);
  const auto g2 = grads_of(0.0, 1.0);
  const auto mix = grads_of(2.5, -1.5);
  for (size_t i = 0; i < mix.size(); ++i) {
    CHECK(mix[i] == doctest::Approx(2.5 * g1[i] - 1.5 * g2[i]).epsilon(1e-9));
  }
}

TEST_CASE("every primitive matches central finite differences") {
  Rng rng(42);

  SUBCASE("double precision, 1e-5") {
    const double h = 1e-6, tol = 1e-5;
    auto check = [&](std::vector<int> shape,
                     std::function<Tensor<double>*(Graph<double>&, Tensor<double>*)> build,
                     double scale = 1.0) {
      auto x = random_tensor<double>(std::move(shape), rng, true, scale);
      CHECK(fd_max_rel_err<double>(x, build, h) <= tol);
    };

    const auto other_34 = random_tensor<double>({3, 4}, rng, false);
    const auto other_42 = random_tensor<double>({4, 2}, rng, false);

    check({3, 4}, [](Graph<double>& g, Tensor<double>* x) { return mix_to_scalar(g, x, 1); });
    check({3, 4}, [&](Graph<double>& g, Tensor<double>* x) {
      return mix_to_scalar(g, g.add(x, g.constant(other_34)), 2);
    });
    check({3, 4}, [&](Graph<double>& g, Tensor<double>* x) {
      return mix_to_scalar(g, g.mul(x, g.constant(other_34)), 3);
    });
    check({3, 4}, [&](Graph<double>& g, Tensor<double>* x) {
      return mix_to_scalar(g, g.matmul(x, g.constant(other_42)), 4);
    });
    check({3, 4}, [](Graph<double>& g, Tensor<double>* x) {
      return mix_to_scalar(g, g.transpose(x), 5);
    });
    check({3, 4}, [](Graph<double>& g, Tensor<double>* x) {
      return mix_to_scalar(g, g.softmax_last(x), 6);
    });
    check({3, 4}, [](Graph<double>& g, Tensor<double>* x) {
      return mix_to_scalar(g, g.log_softmax_last(x), 7);
    });
    check({3, 4}, [](Graph<double>& g, Tensor<double>* x) {
      return mix_to_scalar(g, g.rmsnorm(x), 8);
    });
    check({3, 4}, [](Graph<double>& g, Tensor<double>* x) {
      return mix_to_scalar(g, g.gelu(x), 9);
    });
    check({5, 3}, [](Graph<double>& g, Tensor<double>* x) {
      return mix_to_scalar(g, g.embedding_gather(x, {0, 2, 2, 4}), 10);
    });
    check({3, 4}, [](Graph<double>& g, Tensor<double>* x) {
      return mix_to_scalar(g, g.concat_cols({x, x}), 11);
    });
    check({3, 4}, [](Graph<double>& g, Tensor<double>* x) {
      return mix_to_scalar(g, g.slice_cols(x, 1, 3), 12);
    });
    check({3, 4}, [](Graph<double>& g, Tensor<double>* x) {
      std::vector<uint8_t> fill(12, 0);
      fill[0] = fill[5] = fill[11] = 1;
      return mix_to_scalar(g, g.masked_fill(x, fill, -2.0), 13);
    });
    check({3, 4}, [](Graph<double>& g, Tensor<double>* x) {
      return g.sum(g.pick(x, {{0, 1}, {2, 3}, {1, 0}}));
    });
    check({3, 4}, [](Graph<double>& g, Tensor<double>* x) { return g.scale(g.sum(x), 0.7); });
  }

  SUBCASE("float mode stays within 1e-3") {
    const double h = 1e-2, tol = 1e-3;
    auto x = random_tensor<float>({3, 4}, rng);
    CHECK(fd_max_rel_err<float>(
              x, [](Graph<float>& g, Tensor<float>* t) { return mix_to_scalar(g, g.rmsnorm(g.gelu(t)), 20); },
              h) <= tol);
  }
}

TEST_CASE("two-layer mlp gradients match finite differences") {
  Rng rng(7);
  auto w1 = random_tensor<float>({4, 8}, rng, true, 0.5);
  auto w2 = random_tensor<float>({8, 2}, rng, true, 0.5);
  auto x = random_tensor<float>({3, 4}, rng, false, 1.0);

  std::vector<std::pair<std::string, Tensor<float>*>> params = {{"w1", &w1}, {"w2", &w2}};
  auto model_fn = [&](bool with_grad) {
    Graph<float> g;
    auto* out = g.matmul(g.gelu(g.matmul(g.constant(x), &w1)), &w2);
    auto* loss = mix_to_scalar(g, out, 99);
    const double value = static_cast<double>(loss->item());
    if (with_grad) g.backward(loss);
    return value;
  };
  const auto report = engine::grad_check<float>(params, model_fn, 1e-4);
  CHECK(report.worst_rel_err <= 1e-3);
}

TEST_CASE("grad_check on a linear map is exact to machine precision") {
  Tensor<double> w({3}, {0.5, -1.0, 2.0}, true);
  std::vector<std::pair<std::string, Tensor<double>*>> params = {{"w", &w}};
  auto model_fn = [&](bool with_grad) {
    Graph<double> g;
    auto* loss = g.sum(g.mul(&w, g.constant(Tensor<double>({3}, {3.0, 1.0, -2.0}))));
    const double value = loss->item();
    if (with_grad) g.backward(loss);
    return value;
  };
  const auto report = engine::grad_check<double>(params, model_fn, 1e-3);
  CHECK(report.worst_rel_err <= 1e-10);
}

TEST_CASE("grad_check flags a corrupted backward rule") {
  Tensor<double> w({3}, {0.5, -1.0, 2.0}, true);
  std::vector<std::pair<std::string, Tensor<double>*>> params = {{"w", &w}};
  auto corrupted_fn = [&](bool with_grad) {
    Graph<double> g;
    auto* loss = g.sum(g.mul(&w, &w));
    const double value = loss->item();
    if (with_grad) {
      g.backward(loss);
      w.grad[1] += 0.5;  // sabotage
    }
    return value;
  };
  const auto report = engine::grad_check<double>(params, corrupted_fn, 1e-6);
  CHECK(report.worst_rel_err > 0.1);
}

TEST_CASE("adamw leaves parameters unchanged for zero grad and zero decay") {
  Tensor<double> p({3}, {1.0, -2.0, 0.5}, true);
  p.ensure_grad();
  engine::AdamW<double>::Options opt;
  opt.learning_rate = 0.1;
  opt.weight_decay = 0.0;
  opt.warmup_fraction = 0.0;
  opt.total_steps = 10;
  engine::AdamW<double> adamw({&p}, opt);
  const auto before = p.values;
  adamw.step();
  CHECK(p.values == before);
}

TEST_CASE("warmup ramps the learning rate linearly") {
  engine::AdamW<double>::Options opt;
  opt.learning_rate = 3e-4;
  opt.warmup_fraction = 0.01;
  opt.total_steps = 1000;
  Tensor<double> p({1}, {0.0}, true);
  engine::AdamW<double> adamw({&p}, opt);
  CHECK(adamw.effective_lr(1) == doctest::Approx(3e-4 / 10).epsilon(1e-12));
  CHECK(adamw.effective_lr(10) == doctest::Approx(3e-4).epsilon(1e-12));
  CHECK(adamw.effective_lr(500) == doctest::Approx(3e-4).epsilon(1e-12));
}

TEST_CASE("adamw matches the hand recurrence for three steps") {
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8, grad = 1.0;
  Tensor<double> p({1}, {1.0}, true);
  engine::AdamW<double>::Options opt;
  opt.learning_rate = lr;
  opt.warmup_fraction = 0.0;
  opt.total_steps = 3;
  engine::AdamW<double> adamw({&p}, opt);

  // Hand-rolled recurrence, independent of the implementation.
  double m = 0, v = 0, expected = 1.0;
  for (int t = 1; t <= 3; ++t) {
    m = b1 * m + (1 - b1) * grad;
    v = b2 * v + (1 - b2) * grad * grad;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    expected -= lr * mhat / (std::sqrt(vhat) + eps);

    p.ensure_grad();
    p.grad[0] = grad;
    adamw.step();
    CHECK(p.values[0] == doctest::Approx(expected).epsilon(1e-14));
  }
  CHECK(p.values[0] == doctest::Approx(0.700000003).epsilon(1e-9));
}

TEST_CASE("adamw before any backward is an error") {
  Tensor<double> p({2}, {1.0, 2.0}, true);
  engine::AdamW<double>::Options opt;
  engine::AdamW<double> adamw({&p}, opt);
  CHECK_THROWS_WITH_AS(adamw.step(), doctest::Contains("before any backward"), Error);
}

TEST_CASE("identical seeds give bitwise-identical trajectories") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    auto w = random_tensor<float>({4, 4}, rng, true, 0.1);
    engine::AdamW<float>::Options opt;
    opt.learning_rate = 1e-2;
    opt.total_steps = 20;
    engine::AdamW<float> adamw({&w}, opt);
    for (int step = 0; step < 20; ++step) {
      Graph<float> g;
      auto* loss = g.sum(g.mul(g.gelu(&w), &w));
      g.backward(loss);
      adamw.step();
    }
    return w.values;
  };
  CHECK(run(5) == run(5));
  CHECK(run(5) != run(6));
}

TEST_CASE("rng streams split independently") {
  Rng a(123);
  Rng b(123);
  (void)a.next_u64();
  (void)a.next_u64();
  CHECK(a.split("child").next_u64() == b.split("child").next_u64());
  CHECK(a.split(1).next_u64() != a.split(2).next_u64());

  Rng r(9);
  auto sample = r.sample_distinct(10, 10);
  std::sort(sample.begin(), sample.end());
  for (int i = 0; i < 10; ++i) CHECK(sample[size_t(i)] == i);
}
