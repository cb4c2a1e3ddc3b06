#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mlpk/network.hpp"
#include "mlpk/weights.hpp"

namespace mlpk {

/// Fraction of zero rows in a [c,k,k] slice; a row is the k-vector at a
/// fixed (channel, row-index) and counts as zero only when every entry
/// is exactly 0.0f.
double sparsity_level(const Tensor& slice);

struct SelectionThresholds {
    float s_f = 0.9f;
    float s_f_prime = 0.85f;
    float s_g = 0.95f;

    void validate() const {
        if (!(s_f > s_f_prime))
            throw std::invalid_argument("SelectionThresholds: need s_f > s_f_prime");
        for (float v : {s_f, s_f_prime, s_g})
            if (v < 0.0f || v > 1.0f)
                throw std::invalid_argument("SelectionThresholds: values must be in [0,1]");
    }
};

enum class PruneReason { cond1, cond2, random_baseline };
const char* prune_reason_name(PruneReason r);

struct FilterDecision {
    int index = 0;
    PruneReason reason = PruneReason::cond1;
    double splevel_f = 0.0;
    double splevel_g = 0.0;
};

struct PruneDecision {
    std::string layer;
    std::vector<FilterDecision> filters;  // sorted by index, unique

    std::vector<int> indices() const;
};

struct SelectOptions {
    /// Literal loop order keeps pruning theta_th between layers so later
    /// statistics see earlier removals; snapshot freezes theta_th.
    bool snapshot = false;
    /// When false, a selection that would empty a layer keeps the least
    /// sparse filter instead.
    bool allow_full_layer = false;
};

/// Filter selection over the conv layers of L against the thresholded
/// parameter set. G_i comes from the first conv layer after l (also
/// outside L at the boundary); a layer with no conv successor is judged
/// by cond1 only.
std::vector<PruneDecision> select_filters(const NetworkSpec& spec, const WeightSet& theta_th,
                                          const std::vector<std::string>& layer_set,
                                          const SelectionThresholds& thresholds,
                                          const SelectOptions& opts = {});

/// Structural surgery: deletes the selected filters (weights + bias)
/// and the matching input slices of every consumer. Surviving values
/// come from the un-thresholded `theta` passed in.
std::pair<NetworkSpec, WeightSet> prune_filters(const NetworkSpec& spec, const WeightSet& theta,
                                                const std::vector<PruneDecision>& decisions);

struct FcNeuronDecision {
    std::string layer;
    std::vector<int> neurons;
    std::vector<std::string> reasons;  // "zero_in" or "zero_out" per neuron
};

/// Removes fc neurons whose incoming row or outgoing column is entirely
/// zero in theta_th; surgery on values from theta. Sequential over
/// fc_layers with theta_th updated between layers.
std::tuple<NetworkSpec, WeightSet, std::vector<FcNeuronDecision>> prune_fc_neurons(
    const NetworkSpec& spec, const WeightSet& theta_th, const WeightSet& theta,
    const std::vector<std::string>& fc_layers);

/// Deletes every layer strictly after `after_layer` in the layer list.
/// Fails unless a head survives or a replacement head is supplied (the
/// replacement gets fresh fan-in-scaled weights from `seed`).
std::pair<NetworkSpec, WeightSet> drop_tail_layers(const NetworkSpec& spec,
                                                   const WeightSet& weights,
                                                   const std::string& after_layer,
                                                   const LayerSpec* replacement_head = nullptr,
                                                   std::uint64_t seed = 0);

/// RRF baseline: removes floor(x * c_l) uniformly chosen filters per
/// conv layer in `layer_range`, with full consumer surgery.
std::pair<NetworkSpec, WeightSet> random_prune(const NetworkSpec& spec, const WeightSet& weights,
                                               double fraction,
                                               const std::vector<std::string>& layer_range,
                                               std::uint64_t seed);

/// Audit file, one line per pruned filter:
/// "<layer> <index> <reason> <splevelF> <splevelG>".
void write_decisions(const std::string& path, const std::vector<PruneDecision>& decisions);

}  // namespace mlpk
