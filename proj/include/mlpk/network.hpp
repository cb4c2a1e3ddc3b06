#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mlpk/ops.hpp"
#include "mlpk/tensor.hpp"
#include "mlpk/weights.hpp"

namespace mlpk {

enum class LayerKind { conv, fc, relu, maxpool, flatten, head };

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& s);

struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::conv;
    int out_channels = 0;  // conv / fc / head
    int kernel = 0;        // conv
    int stride = 1;
    int pad = 0;
    std::string input_layer;  // empty = network input

    bool weighted() const {
        return kind == LayerKind::conv || kind == LayerKind::fc || kind == LayerKind::head;
    }
};

/// Layer list is in topological order: every producer precedes its
/// consumers. Heads are the output layers (kind == head).
struct NetworkSpec {
    std::vector<LayerSpec> layers;
    std::vector<int> input_shape;  // {channels, h, w}

    const LayerSpec& layer(const std::string& name) const;
    LayerSpec& layer(const std::string& name);
    int index_of(const std::string& name) const;  // -1 when absent
    bool has_layer(const std::string& name) const { return index_of(name) >= 0; }
    std::vector<std::string> head_names() const;

    /// Checks name uniqueness, producer ordering, head presence and
    /// per-kind field sanity. Throws std::invalid_argument on violation.
    void validate() const;
};

/// Per-layer output shape without the batch dimension: {c,h,w} for
/// spatial layers, {d} after flatten/fc.
std::map<std::string, std::vector<int>> infer_shapes(const NetworkSpec& spec);

/// Expected weight/bias shapes per weighted layer.
struct WeightShape {
    std::vector<int> weight;
    std::vector<int> bias;
};
std::map<std::string, WeightShape> weight_shapes(const NetworkSpec& spec);

/// Fan-in-scaled uniform init, zero biases. Deterministic given seed.
WeightSet init_weights(const NetworkSpec& spec, std::uint64_t seed);

struct ForwardCache {
    std::map<std::string, Tensor> out;  // post-activation output per layer
};

/// Runs the network on a batch [n,c,h,w]; returns logits [n,classes]
/// per head name. Optionally records every intermediate in `cache`.
std::map<std::string, Tensor> forward(const NetworkSpec& spec, const WeightSet& weights,
                                      const Tensor& inputs, ForwardCache* cache = nullptr);

/// How pruning channel i of `layer` maps into a consumer's weights.
struct ConsumerSlice {
    std::string consumer;
    /// input_channel: delete weight slice [:, i, :, :] of a conv/head.
    /// fc_block: delete the contiguous columns [i*block, (i+1)*block) of
    /// an fc/head; block = h*w when reached through a flatten, 1 when the
    /// producer is itself an fc.
    enum class Rule { input_channel, fc_block } rule = Rule::input_channel;
    int block = 1;  // columns per channel for fc_block
};

std::vector<ConsumerSlice> consumers_of(const NetworkSpec& spec, const std::string& layer);

struct CountReport {
    std::map<std::string, long long> per_layer;
    long long total = 0;
};

CountReport count_params(const NetworkSpec& spec, bool include_bias);
/// Multiply-adds per forward pass of one example.
CountReport count_flops(const NetworkSpec& spec);
/// 4 bytes per parameter, biases included.
long long model_size_bytes(const NetworkSpec& spec);

std::string serialize_spec(const NetworkSpec& spec);
NetworkSpec parse_spec(const std::string& text);

}  // namespace mlpk
