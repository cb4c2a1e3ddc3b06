#pragma once

#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mlpk/tensor.hpp"
#include "mlpk/weights.hpp"

namespace mlpk {

// ---- convolution (cross-correlation, no kernel flip) ----

/// input [n,c_in,h,w], weights [c_out,c_in,k,k], bias [c_out].
/// Output spatial size: floor((h + 2*pad - k) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              int stride, int pad);

struct ConvGrads {
    Tensor grad_input;
    Tensor grad_weights;
    Tensor grad_bias;
};

ConvGrads conv2d_grad(const Tensor& input, const Tensor& weights, int stride, int pad,
                      const Tensor& grad_output);

// ---- fully connected ----

/// input [n,d_in], weights [d_out,d_in], bias [d_out] -> [n,d_out]
Tensor fc(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct FcGrads {
    Tensor grad_input;
    Tensor grad_weights;
    Tensor grad_bias;
};

FcGrads fc_grad(const Tensor& input, const Tensor& weights, const Tensor& grad_output);

// ---- pointwise / pooling ----

Tensor relu(const Tensor& input);
Tensor relu_grad(const Tensor& input, const Tensor& grad_output);

/// 2x2 max pool, stride 2. Input spatial dims must be even.
Tensor maxpool2x2(const Tensor& input);
Tensor maxpool2x2_grad(const Tensor& input, const Tensor& grad_output);

// ---- loss ----

struct XentResult {
    float loss = 0.0f;  // mean over batch of -log softmax(logits)[label]
    Tensor grad_logits;
};

/// logits [n,classes], labels n class indices.
XentResult softmax_xent(const Tensor& logits, const std::vector<int>& labels);

// ---- optimizer step ----

/// w <- w - lr * (g + alpha * sign(w)) for weights of layers in l1_layers,
/// w <- w - lr * g elsewhere. sign(0) = 0. Biases never get the L1 term.
WeightSet sgd_step_l1(const WeightSet& weights, const WeightSet& grads, float lr,
                      float alpha, const std::set<std::string>& l1_layers);

/// Thread count cap from MLPK_THREADS (default: hardware concurrency).
int max_threads();

/// Runs fn(i) for i in [0, n). Work partition never affects results:
/// every index writes disjoint outputs.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace mlpk
