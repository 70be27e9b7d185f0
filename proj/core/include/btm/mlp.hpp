#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace btm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Flattened model parameters. Layout per layer: weight matrix (out x in,
// row-major) followed by the bias vector (out). f64 in memory, f32 on disk.
using ParamVector = Eigen::VectorXd;

enum class Activation { relu };

// Dense binary classifier: ReLU hidden layers, one sigmoid output unit.
struct MlpSpec {
  std::vector<int> layer_widths;  // input dim, hidden widths..., 1
  Activation activation = Activation::relu;
  double dropout_rate = 0.0;  // hidden-layer dropout, expert training only
  std::uint64_t seed = 0;     // default weight-init seed

  int input_dim() const { return layer_widths.front(); }
  int layer_count() const { return static_cast<int>(layer_widths.size()) - 1; }
  std::size_t param_count() const;
  void validate() const;  // throws std::invalid_argument
};

struct Batch {
  Mat inputs;  // b x d
  Vec labels;  // b entries in {0,1}
};

// Thrown when a training loop produces a non-finite loss or parameter.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long step)
      : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// Kaiming-uniform weights, zero biases; deterministic in seed.
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

// Inference-mode forward pass (dropout off).
Vec forward(const MlpSpec& spec, const ParamVector& params, const Mat& inputs);

// Pre-sigmoid outputs; used by the prediction-deviation checks.
Vec forward_logits(const MlpSpec& spec, const ParamVector& params, const Mat& inputs);

// Mean binary cross-entropy; probabilities clamped to [1e-12, 1 - 1e-12].
double bce_loss(const Vec& probs, const Vec& labels);

inline constexpr double kProbClamp = 1e-12;

// Mean-BCE loss and its exact gradient in the parameters.
// `dropout_rng` non-null enables inverted dropout on hidden activations
// (expert training mode); masks are shared between the loss and gradient.
double loss_value(const MlpSpec& spec, const ParamVector& params, const Batch& batch);
ParamVector grad_params(const MlpSpec& spec, const ParamVector& params, const Batch& batch,
                        std::mt19937_64* dropout_rng = nullptr);

// Gradient of s(X) = <grad_params(theta, {X, y}), v> with respect to the batch
// inputs, with v held constant. Forward-over-reverse: the reverse pass that
// produces dL/dX is differentiated along the parameter direction v, so the
// result is exact (to roundoff) for the piecewise-smooth network.
Mat grad_inputs_of_inner_product(const MlpSpec& spec, const ParamVector& params,
                                 const Batch& batch, const ParamVector& v);

// velocity <- momentum * velocity + grad; params <- params - lr * velocity.
void sgd_step(ParamVector& params, ParamVector& velocity, const ParamVector& grad,
              double lr, double momentum);

}  // namespace btm
