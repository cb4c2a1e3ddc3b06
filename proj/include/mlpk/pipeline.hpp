#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mlpk/data.hpp"
#include "mlpk/network.hpp"
#include "mlpk/prune.hpp"
#include "mlpk/sparsify.hpp"
#include "mlpk/weights.hpp"

namespace mlpk {

struct PhaseConfig {
    std::string name;
    SparsityConfig sparsity;
    SelectionThresholds thresholds;
    int retrain_epochs = -1;             // -1: same as sparsity.epochs
    std::vector<float> alpha_grid;       // when non-empty, select_alpha runs first
    std::vector<std::string> fc_prune_layers;
    std::string drop_tail_after;
    bool snapshot_selection = false;
    bool layerwise_comparison = false;   // log the per-layer threshold search too
};

struct PhasePlan {
    std::vector<PhaseConfig> phases;
};

struct WeightHistogram {
    float lo = 0.0f, hi = 0.0f;
    std::vector<long long> pre;   // 100 bins, before L1 training
    std::vector<long long> post;  // after L1 training
};

struct PhaseRecord {
    std::string phase;
    std::uint64_t seed = 0;
    float pre_metric = 0, post_l1_metric = 0, post_th_metric = 0;
    float post_prune_metric = 0, post_retrain_metric = 0;
    float alpha = 0, threshold = 0;
    double sigma = 0;
    bool threshold_warning = false;
    std::map<std::string, long long> nonzero_before, nonzero_after;  // around thresholding
    std::map<std::string, WeightHistogram> histograms;               // layers in L
    std::map<std::string, int> filters_before, filters_after;
    long long params_before = 0, params_after = 0;
    long long flops_before = 0, flops_after = 0;
    double wall_seconds = 0;
    std::vector<ThresholdRow> threshold_rows;
    std::vector<PruneDecision> decisions;
    std::vector<FcNeuronDecision> fc_decisions;
    std::map<std::string, float> layerwise_t;  // comparison mode, when run
};

struct RunLog {
    std::string spec_original, spec_final;  // serialized NetworkSpec
    float baseline_metric = 0;
    float final_metric = 0;
    std::vector<PhaseRecord> phases;

    double compression_factor() const;
};

struct PhaseResult {
    NetworkSpec spec;
    WeightSet weights;
    PhaseRecord record;
};

/// One framework pass: L1 training, global-threshold search, filter
/// selection and surgery from theta_L1, optional fc-neuron pruning and
/// tail drop, then retraining without L1.
PhaseResult run_phase(const NetworkSpec& spec, const WeightSet& weights, const Dataset& data,
                      const PhaseConfig& phase);

struct PlanResult {
    NetworkSpec spec;
    WeightSet weights;
    RunLog log;
};

PlanResult run_plan(const NetworkSpec& spec, const WeightSet& weights, const Dataset& data,
                    const PhasePlan& plan);

/// Trains theta from fan-in-scaled uniform init. Deterministic per seed.
WeightSet train_baseline(const NetworkSpec& spec, const Dataset& data, int epochs,
                         std::uint64_t seed, float lr = 0.05f, float lr_decay = 1.0f,
                         int batch_size = 32);

/// Plan file: a sequence of `phase { key = value ... }` blocks.
PhasePlan parse_plan(const std::string& text);
PhasePlan load_plan(const std::string& path);

}  // namespace mlpk
