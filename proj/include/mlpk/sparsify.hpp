#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mlpk/data.hpp"
#include "mlpk/network.hpp"
#include "mlpk/train.hpp"
#include "mlpk/weights.hpp"

namespace mlpk {

/// Configuration for one sparsity-induction phase over a contiguous
/// run of prunable layers L.
struct SparsityConfig {
    std::vector<std::string> layer_set;  // L, in topological order
    float alpha = 0.0f;
    float eps1 = 2.5f;  // tolerated metric drop after L1 training
    float eps2 = 6.0f;  // further tolerated drop after thresholding
    float threshold = 0.0f;
    int epochs = 5;
    float lr = 0.05f;
    float lr_decay = 1.0f;
    float momentum = 0.9f;
    int batch_size = 32;
    std::uint64_t seed = 42;
};

/// Fine-tunes `weights` with the L1-augmented loss; the L1 term covers
/// the weights (not biases) of layers in cfg.layer_set only.
WeightSet train_l1(const NetworkSpec& spec, const WeightSet& weights, const Dataset& data,
                   const SparsityConfig& cfg);

struct AlphaCandidate {
    float alpha = 0.0f;
    float val_metric = 0.0f;
    bool feasible = false;
};

struct AlphaSearchResult {
    float alpha = 0.0f;
    bool warning = false;  // no candidate met the constraint
    std::vector<AlphaCandidate> candidates;
};

/// Largest alpha in the ascending grid whose L1-trained model keeps the
/// validation metric within eps1 of the input model's.
AlphaSearchResult select_alpha(const NetworkSpec& spec, const WeightSet& weights,
                               const Dataset& data, float eps1,
                               const std::vector<float>& candidate_grid,
                               const SparsityConfig& cfg_base);

/// Zeroes every weight with |w| < t in the layers of L; biases and
/// layers outside L untouched. Returns a theta_L1_th-tagged copy.
WeightSet apply_threshold(const WeightSet& weights, const std::vector<std::string>& layer_set,
                          float t);

/// Population standard deviation of all weights in L pooled together.
double weight_std(const WeightSet& weights, const std::vector<std::string>& layer_set);

/// Non-zero weight count over the layers of L (weights only).
long long count_nonzero(const WeightSet& weights, const std::vector<std::string>& layer_set);

struct ThresholdRow {
    float t = 0.0f;
    long long nonzero = 0;
    float val_metric = 0.0f;
};

struct ThresholdSearchResult {
    float t = 0.0f;
    double sigma = 0.0;
    bool warning = false;  // even the smallest grid point failed
    float base_metric = 0.0f;
    std::vector<ThresholdRow> rows;
};

/// Grid search t in {0.05s, 0.10s, ..., 2.00s} with s the pooled std of
/// L; returns the largest t whose thresholded model stays within eps2
/// of the un-thresholded validation metric.
ThresholdSearchResult search_threshold(const NetworkSpec& spec, const WeightSet& weights,
                                       const std::vector<std::string>& layer_set,
                                       const DataSplit& val, float eps2);

/// Comparison mode: the same search run per layer with per-layer sigma.
std::map<std::string, ThresholdSearchResult> layerwise_thresholds(
    const NetworkSpec& spec, const WeightSet& weights,
    const std::vector<std::string>& layer_set, const DataSplit& val, float eps2);

/// CSV with header "t,nonzero_count,val_metric".
void write_threshold_csv(const std::string& path, const std::vector<ThresholdRow>& rows);

}  // namespace mlpk
