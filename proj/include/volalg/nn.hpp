#ifndef VOLALG_NN_HPP
#define VOLALG_NN_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "volalg/dataset.hpp"

namespace volalg {

/// Feed-forward MLP: ReLU hidden layers, linear output layer trained with
/// softmax cross-entropy. layer_sizes = {input, hidden..., output}.
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  std::uint64_t seed = 0;
};

/// One named block inside the flat parameter vector.
struct ParamBlock {
  std::string name;                // "W1", "b1", "W2", ...
  std::size_t offset = 0;
  std::vector<std::size_t> shape;  // {out, in} for weights, {out} for biases
};

/// All parameters in one flat vector; blocks partition it exactly.
struct FlatParams {
  std::vector<double> data;
  std::vector<ParamBlock> layout;
};

/// He-uniform weights (bound sqrt(6 / fan_in)), zero biases. Deterministic
/// per spec.seed.
FlatParams init_params(const MlpSpec& spec);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
  double accuracy = 0.0;
};

/// Mean softmax cross-entropy over the batch plus the exact gradient with
/// respect to every parameter (backprop; the ReLU derivative at 0 is taken
/// as 0) and argmax accuracy (ties go to the lowest class index).
/// Throws DivergenceError when an activation goes non-finite.
LossGrad loss_and_grad(const MlpSpec& spec, const FlatParams& params,
                       const Batch& batch);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Forward pass only.
EvalResult evaluate(const MlpSpec& spec, const FlatParams& params,
                    const Batch& batch);

/// Raw output-layer logits, row-major batch.count x classes.
std::vector<double> predict_logits(const MlpSpec& spec,
                                   const FlatParams& params,
                                   const Batch& batch);

}  // namespace volalg

#endif  // VOLALG_NN_HPP
