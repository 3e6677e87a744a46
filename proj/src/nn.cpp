#include "volalg/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "volalg/errors.hpp"
#include "volalg/rng.hpp"

namespace volalg {

namespace {

void check_spec(const MlpSpec& spec) {
  if (spec.layer_sizes.size() < 2) {
    throw InputError("an MLP needs at least input and output layers");
  }
  for (std::size_t s : spec.layer_sizes) {
    if (s == 0) throw InputError("layer sizes must be positive");
  }
}

std::size_t param_count(const MlpSpec& spec) {
  std::size_t total = 0;
  for (std::size_t l = 1; l < spec.layer_sizes.size(); ++l) {
    total += spec.layer_sizes[l] * spec.layer_sizes[l - 1] +
             spec.layer_sizes[l];
  }
  return total;
}

void check_finite_or_throw(const std::vector<double>& a, std::size_t layer) {
  for (double v : a) {
    if (!std::isfinite(v)) {
      throw DivergenceError("non-finite activation in layer " +
                            std::to_string(layer));
    }
  }
}

// out (batch x m) = x (batch x n) * w^T (n x m) + bias (m)
void linear_forward(const double* x, const double* w, const double* bias,
                    double* out, std::size_t batch, std::size_t n,
                    std::size_t m) {
  for (std::size_t i = 0; i < batch; ++i) {
    const double* xi = x + i * n;
    double* oi = out + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* wj = w + j * n;
      double acc = bias[j];
      for (std::size_t k = 0; k < n; ++k) acc += xi[k] * wj[k];
      oi[j] = acc;
    }
  }
}

}  // namespace

FlatParams init_params(const MlpSpec& spec) {
  check_spec(spec);
  FlatParams p;
  p.data.assign(param_count(spec), 0.0);
  Rng rng(spec.seed);
  std::size_t offset = 0;
  for (std::size_t l = 1; l < spec.layer_sizes.size(); ++l) {
    const std::size_t fan_in = spec.layer_sizes[l - 1];
    const std::size_t fan_out = spec.layer_sizes[l];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    ParamBlock w;
    w.name = "W" + std::to_string(l);
    w.offset = offset;
    w.shape = {fan_out, fan_in};
    for (std::size_t i = 0; i < fan_out * fan_in; ++i) {
      p.data[offset + i] = rng.uniform(-bound, bound);
    }
    offset += fan_out * fan_in;
    p.layout.push_back(std::move(w));

    ParamBlock b;
    b.name = "b" + std::to_string(l);
    b.offset = offset;
    b.shape = {fan_out};
    offset += fan_out;  // biases stay zero
    p.layout.push_back(std::move(b));
  }
  return p;
}

namespace {

struct Forward {
  // activations[0] is the input batch; activations[l] holds relu(A_l) for
  // hidden layers and the raw logits for the last layer.
  std::vector<std::vector<double>> pre;   // pre[l]: A_{l+1}, batch x n_{l+1}
  std::vector<std::vector<double>> post;  // post[0] = inputs
  std::vector<double> probs;              // softmax rows, batch x classes
  double loss = 0.0;
  double accuracy = 0.0;
};

Forward run_forward(const MlpSpec& spec, const FlatParams& params,
                    const Batch& batch, bool want_probs) {
  check_spec(spec);
  const auto& sizes = spec.layer_sizes;
  if (batch.features != sizes.front()) {
    throw InputError("batch feature count does not match the input layer");
  }
  if (params.data.size() != param_count(spec)) {
    throw InputError("parameter vector does not match the MLP spec");
  }
  const std::size_t layers = sizes.size() - 1;
  const std::size_t batch_n = batch.count;
  if (batch_n == 0) throw InputError("empty batch");

  Forward f;
  f.pre.resize(layers);
  f.post.resize(layers + 1);
  f.post[0] = batch.inputs;

  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t n = sizes[l];
    const std::size_t m = sizes[l + 1];
    const double* w = params.data.data() + offset;
    const double* bias = params.data.data() + offset + m * n;
    offset += m * n + m;
    f.pre[l].assign(batch_n * m, 0.0);
    linear_forward(f.post[l].data(), w, bias, f.pre[l].data(), batch_n, n, m);
    check_finite_or_throw(f.pre[l], l + 1);
    if (l + 1 < layers) {
      f.post[l + 1] = f.pre[l];
      for (double& v : f.post[l + 1]) v = std::max(0.0, v);
    } else {
      f.post[l + 1] = f.pre[l];
    }
  }

  // Softmax cross-entropy, batch mean, with a row-max shift.
  const std::size_t classes = sizes.back();
  const std::vector<double>& logits = f.post[layers];
  if (want_probs) f.probs.assign(batch_n * classes, 0.0);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < batch_n; ++i) {
    const double* row = logits.data() + i * classes;
    const int label = batch.labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw InputError("label " + std::to_string(label) +
                       " outside [0, " + std::to_string(classes) + ")");
    }
    double row_max = row[0];
    std::size_t arg = 0;
    for (std::size_t c = 1; c < classes; ++c) {
      if (row[c] > row_max) {
        row_max = row[c];
        arg = c;
      }
    }
    if (arg == static_cast<std::size_t>(label)) ++correct;
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(row[c] - row_max);
    loss_sum += std::log(denom) - (row[label] - row_max);
    if (want_probs) {
      double* p = f.probs.data() + i * classes;
      for (std::size_t c = 0; c < classes; ++c) {
        p[c] = std::exp(row[c] - row_max) / denom;
      }
    }
  }
  f.loss = loss_sum / static_cast<double>(batch_n);
  f.accuracy = static_cast<double>(correct) / static_cast<double>(batch_n);
  if (!std::isfinite(f.loss)) {
    throw DivergenceError("non-finite loss");
  }
  return f;
}

}  // namespace

LossGrad loss_and_grad(const MlpSpec& spec, const FlatParams& params,
                       const Batch& batch) {
  Forward f = run_forward(spec, params, batch, /*want_probs=*/true);
  const auto& sizes = spec.layer_sizes;
  const std::size_t layers = sizes.size() - 1;
  const std::size_t batch_n = batch.count;
  const std::size_t classes = sizes.back();

  LossGrad out;
  out.loss = f.loss;
  out.accuracy = f.accuracy;
  out.grad.assign(params.data.size(), 0.0);

  // dA for the top layer: (softmax - onehot) / batch.
  std::vector<double> delta = std::move(f.probs);
  const double inv_batch = 1.0 / static_cast<double>(batch_n);
  for (std::size_t i = 0; i < batch_n; ++i) {
    for (std::size_t c = 0; c < classes; ++c) delta[i * classes + c] *= inv_batch;
    delta[i * classes + batch.labels[i]] -= inv_batch;
  }

  // Walk the layers backwards; offsets mirror the forward pass.
  std::vector<std::size_t> offsets(layers);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = offset;
    offset += sizes[l + 1] * sizes[l] + sizes[l + 1];
  }

  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t n = sizes[l];
    const std::size_t m = sizes[l + 1];
    const double* w = params.data.data() + offsets[l];
    double* dw = out.grad.data() + offsets[l];
    double* db = out.grad.data() + offsets[l] + m * n;
    const std::vector<double>& h = f.post[l];

    for (std::size_t i = 0; i < batch_n; ++i) {
      const double* di = delta.data() + i * m;
      const double* hi = h.data() + i * n;
      for (std::size_t j = 0; j < m; ++j) {
        const double c = di[j];
        if (c == 0.0) continue;
        double* dwj = dw + j * n;
        for (std::size_t k = 0; k < n; ++k) dwj[k] += c * hi[k];
        db[j] += c;
      }
    }

    if (l > 0) {
      std::vector<double> prev(batch_n * n, 0.0);
      for (std::size_t i = 0; i < batch_n; ++i) {
        const double* di = delta.data() + i * m;
        double* pi = prev.data() + i * n;
        for (std::size_t j = 0; j < m; ++j) {
          const double c = di[j];
          if (c == 0.0) continue;
          const double* wj = w + j * n;
          for (std::size_t k = 0; k < n; ++k) pi[k] += c * wj[k];
        }
        // ReLU gate: the derivative at exactly 0 is 0.
        const double* pre = f.pre[l - 1].data() + i * n;
        for (std::size_t k = 0; k < n; ++k) {
          if (pre[k] <= 0.0) pi[k] = 0.0;
        }
      }
      delta = std::move(prev);
    }
  }
  return out;
}

EvalResult evaluate(const MlpSpec& spec, const FlatParams& params,
                    const Batch& batch) {
  Forward f = run_forward(spec, params, batch, /*want_probs=*/false);
  return {f.loss, f.accuracy};
}

std::vector<double> predict_logits(const MlpSpec& spec,
                                   const FlatParams& params,
                                   const Batch& batch) {
  Forward f = run_forward(spec, params, batch, /*want_probs=*/false);
  return std::move(f.post.back());
}

}  // namespace volalg
