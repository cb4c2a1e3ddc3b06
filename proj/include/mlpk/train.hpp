#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlpk/data.hpp"
#include "mlpk/network.hpp"
#include "mlpk/weights.hpp"

namespace mlpk {

/// Raised when training produces a non-finite loss.
struct DivergenceError : std::runtime_error {
    int epoch;
    explicit DivergenceError(int e)
        : std::runtime_error("training diverged (non-finite loss) at epoch " + std::to_string(e)),
          epoch(e) {}
};

struct TrainOptions {
    int epochs = 5;
    float lr = 0.05f;
    float lr_decay = 1.0f;  // per-epoch multiplier
    float momentum = 0.9f;
    int batch_size = 32;
    float alpha = 0.0f;                 // L1 strength, applied to l1_layers only
    std::set<std::string> l1_layers;
    std::uint64_t seed = 42;
};

struct TrainResult {
    WeightSet weights;
    std::vector<float> epoch_losses;  // mean minibatch loss per epoch
};

/// Sum of per-head cross-entropy losses and its gradients.
struct LossGrads {
    float loss = 0.0f;
    WeightSet grads;
};

LossGrads loss_and_grads(const NetworkSpec& spec, const WeightSet& weights, const Batch& batch);

/// Minibatch SGD (optional momentum) on the multi-head loss, with the
/// L1 subgradient folded in via sgd_step_l1. Deterministic given seed.
TrainResult train(const NetworkSpec& spec, const WeightSet& start, const DataSplit& data,
                  const TrainOptions& opts);

/// Top-1 accuracy in percent, averaged over heads.
float evaluate(const NetworkSpec& spec, const WeightSet& weights, const DataSplit& data,
               int batch_size = 128);

}  // namespace mlpk
