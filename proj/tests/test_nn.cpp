#include <doctest.h>

#include <cmath>
#include <numeric>

#include "volalg/errors.hpp"
#include "volalg/nn.hpp"
#include "volalg/rng.hpp"

using namespace volalg;

namespace {

Batch random_batch(Rng& rng, std::size_t count, std::size_t features,
                   int classes) {
  Batch b;
  b.count = count;
  b.features = features;
  b.inputs.resize(count * features);
  b.labels.resize(count);
  for (double& v : b.inputs) v = rng.uniform();
  for (int& l : b.labels) l = static_cast<int>(rng.below(classes));
  return b;
}

double max_rel_error(const std::vector<double>& got,
                     const std::vector<double>& expect) {
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double scale = std::max(1.0, std::abs(expect[i]));
    worst = std::max(worst, std::abs(got[i] - expect[i]) / scale);
  }
  return worst;
}

// Central finite differences, the independent gradient oracle.
std::vector<double> fd_gradient(const MlpSpec& spec, FlatParams params,
                                const Batch& batch, double h) {
  std::vector<double> grad(params.data.size());
  for (std::size_t i = 0; i < params.data.size(); ++i) {
    const double keep = params.data[i];
    params.data[i] = keep + h;
    const double up = evaluate(spec, params, batch).loss;
    params.data[i] = keep - h;
    const double down = evaluate(spec, params, batch).loss;
    params.data[i] = keep;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace

TEST_SUITE_BEGIN("nn");

TEST_CASE("init_params") {
  const MlpSpec spec{{2, 3, 2}, 7};

  SUBCASE("deterministic per seed") {
    const FlatParams a = init_params(spec);
    const FlatParams b = init_params(spec);
    CHECK(a.data == b.data);
    const FlatParams c = init_params({{2, 3, 2}, 8});
    CHECK(a.data != c.data);
  }
  SUBCASE("layout partitions the vector") {
    const FlatParams p = init_params(spec);
    REQUIRE(p.layout.size() == 4);
    CHECK(p.layout[0].name == "W1");
    CHECK(p.layout[0].shape == std::vector<std::size_t>{3, 2});
    CHECK(p.layout[1].name == "b1");
    std::size_t expect_offset = 0;
    for (const auto& block : p.layout) {
      CHECK(block.offset == expect_offset);
      expect_offset += std::accumulate(block.shape.begin(), block.shape.end(),
                                       std::size_t{1}, std::multiplies<>());
    }
    CHECK(expect_offset == p.data.size());
  }
  SUBCASE("zero biases and bounded weights over many seeds") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const MlpSpec s{{4, 5, 3}, seed};
      const FlatParams p = init_params(s);
      for (const auto& block : p.layout) {
        const std::size_t size = std::accumulate(
            block.shape.begin(), block.shape.end(), std::size_t{1},
            std::multiplies<>());
        if (block.name[0] == 'b') {
          for (std::size_t i = 0; i < size; ++i) {
            REQUIRE(p.data[block.offset + i] == 0.0);
          }
        } else {
          const double bound = std::sqrt(6.0 / double(block.shape[1]));
          for (std::size_t i = 0; i < size; ++i) {
            REQUIRE(std::abs(p.data[block.offset + i]) <= bound);
          }
        }
      }
    }
  }
  SUBCASE("degenerate specs are rejected") {
    CHECK_THROWS_AS(init_params({{4}, 0}), InputError);
    CHECK_THROWS_AS(init_params({{4, 0, 2}, 0}), InputError);
  }
}

TEST_CASE("uniform softmax at the zero point") {
  const MlpSpec spec{{3, 4, 2}, 0};
  FlatParams p = init_params(spec);
  std::fill(p.data.begin(), p.data.end(), 0.0);
  Rng rng(5);
  Batch batch = random_batch(rng, 6, 3, 2);
  const LossGrad lg = loss_and_grad(spec, p, batch);
  CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  // Argmax ties resolve to class 0.
  double expect_acc = 0.0;
  for (int l : batch.labels) expect_acc += (l == 0) ? 1.0 : 0.0;
  CHECK(lg.accuracy == expect_acc / batch.count);
}

TEST_CASE("backprop matches central finite differences") {
  Rng rng(123);
  const MlpSpec spec{{4, 5, 3}, 11};
  const FlatParams p = init_params(spec);
  const Batch batch = random_batch(rng, 8, 4, 3);
  const LossGrad lg = loss_and_grad(spec, p, batch);
  const std::vector<double> fd = fd_gradient(spec, p, batch, 1e-5);
  CHECK(max_rel_error(lg.grad, fd) <= 1e-5);
}

TEST_CASE("batch semantics") {
  Rng rng(55);
  const MlpSpec spec{{5, 6, 3}, 2};
  const FlatParams p = init_params(spec);
  const Batch batch = random_batch(rng, 7, 5, 3);

  SUBCASE("duplicating every example changes nothing") {
    Batch doubled;
    doubled.count = batch.count * 2;
    doubled.features = batch.features;
    for (int rep = 0; rep < 2; ++rep) {
      doubled.inputs.insert(doubled.inputs.end(), batch.inputs.begin(),
                            batch.inputs.end());
      doubled.labels.insert(doubled.labels.end(), batch.labels.begin(),
                            batch.labels.end());
    }
    const LossGrad a = loss_and_grad(spec, p, batch);
    const LossGrad b = loss_and_grad(spec, p, doubled);
    CHECK(std::abs(a.loss - b.loss) <= 1e-12);
    CHECK(a.accuracy == b.accuracy);
    CHECK(max_rel_error(b.grad, a.grad) <= 1e-12);
  }
  SUBCASE("permuting rows changes nothing") {
    Batch shuffled;
    shuffled.count = batch.count;
    shuffled.features = batch.features;
    std::vector<std::size_t> order{6, 2, 4, 0, 5, 1, 3};
    for (std::size_t i : order) {
      shuffled.inputs.insert(
          shuffled.inputs.end(), batch.inputs.begin() + i * batch.features,
          batch.inputs.begin() + (i + 1) * batch.features);
      shuffled.labels.push_back(batch.labels[i]);
    }
    const LossGrad a = loss_and_grad(spec, p, batch);
    const LossGrad b = loss_and_grad(spec, p, shuffled);
    CHECK(std::abs(a.loss - b.loss) <= 1e-12);
    CHECK(max_rel_error(b.grad, a.grad) <= 1e-12);
  }
}

TEST_CASE("softmax rows sum to one and cross-entropy is nonnegative") {
  Rng rng(808);
  for (int trial = 0; trial < 20; ++trial) {
    const MlpSpec spec{{3, 4, 4}, rng.next_u64()};
    const FlatParams p = init_params(spec);
    const Batch batch = random_batch(rng, 5, 3, 4);
    const std::vector<double> logits = predict_logits(spec, p, batch);
    for (std::size_t i = 0; i < batch.count; ++i) {
      double row_max = logits[i * 4];
      for (int c = 1; c < 4; ++c) {
        row_max = std::max(row_max, logits[i * 4 + c]);
      }
      double total = 0.0;
      for (int c = 0; c < 4; ++c) {
        total += std::exp(logits[i * 4 + c] - row_max);
      }
      double sum = 0.0;
      for (int c = 0; c < 4; ++c) {
        sum += std::exp(logits[i * 4 + c] - row_max) / total;
      }
      REQUIRE(std::abs(sum - 1.0) <= 1e-12);
    }
    REQUIRE(evaluate(spec, p, batch).loss >= 0.0);
  }
}

TEST_CASE("the ReLU derivative at exactly zero is zero") {
  // W1 = 0, b1 = 0 puts every hidden pre-activation exactly at 0. With a
  // nonzero W2 the input-layer gradient is zero iff relu'(0) == 0.
  const MlpSpec spec{{2, 3, 2}, 0};
  FlatParams p = init_params(spec);
  std::fill(p.data.begin(), p.data.end(), 0.0);
  const ParamBlock& w2 = p.layout[2];
  REQUIRE(w2.name == "W2");
  for (std::size_t i = 0; i < 6; ++i) p.data[w2.offset + i] = 0.5 + 0.1 * i;

  Batch batch;
  batch.count = 1;
  batch.features = 2;
  batch.inputs = {0.7, -0.4};
  batch.labels = {1};
  const LossGrad lg = loss_and_grad(spec, p, batch);
  for (std::size_t i = 0; i < 6 + 3; ++i) {  // W1 and b1 blocks
    REQUIRE(lg.grad[i] == 0.0);
  }
  // The output layer still learns.
  const ParamBlock& b2 = p.layout[3];
  REQUIRE(b2.name == "b2");
  CHECK(lg.grad[b2.offset] != 0.0);
}

TEST_CASE("divergence is reported with layer context") {
  const MlpSpec spec{{2, 2, 2}, 0};
  FlatParams p = init_params(spec);
  p.data[0] = 1e308;
  p.data[1] = 1e308;
  Batch batch;
  batch.count = 1;
  batch.features = 2;
  batch.inputs = {1e10, 1e10};
  batch.labels = {0};
  CHECK_THROWS_AS(loss_and_grad(spec, p, batch), DivergenceError);
}

TEST_CASE("shape validation") {
  const MlpSpec spec{{3, 4, 2}, 0};
  const FlatParams p = init_params(spec);
  Rng rng(1);
  Batch bad = random_batch(rng, 2, 5, 2);
  CHECK_THROWS_AS(loss_and_grad(spec, p, bad), InputError);
  Batch labels_off = random_batch(rng, 2, 3, 2);
  labels_off.labels[0] = 9;
  CHECK_THROWS_AS(loss_and_grad(spec, p, labels_off), InputError);
}

TEST_SUITE_END();
