#include "mlpk/prune.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "mlpk/rng.hpp"

namespace mlpk {

const char* prune_reason_name(PruneReason r) {
    switch (r) {
        case PruneReason::cond1: return "cond1";
        case PruneReason::cond2: return "cond2";
        case PruneReason::random_baseline: return "random_baseline";
    }
    return "?";
}

std::vector<int> PruneDecision::indices() const {
    std::vector<int> out;
    out.reserve(filters.size());
    for (const auto& f : filters) out.push_back(f.index);
    return out;
}

double sparsity_level(const Tensor& slice) {
    if (slice.rank() != 3)
        throw std::invalid_argument("sparsity_level: slice must be [c,k,k], got " +
                                    shape_str(slice.shape));
    const int c = slice.dim(0), kh = slice.dim(1), kw = slice.dim(2);
    long long zero_rows = 0;
    for (int ci = 0; ci < c; ++ci)
        for (int r = 0; r < kh; ++r) {
            const float* row = &slice.data[(static_cast<std::size_t>(ci) * kh + r) * kw];
            bool zero = true;
            for (int j = 0; j < kw; ++j)
                if (row[j] != 0.0f) {
                    zero = false;
                    break;
                }
            if (zero) ++zero_rows;
        }
    return static_cast<double>(zero_rows) / (static_cast<double>(c) * kh);
}

// ---- tensor surgery helpers ----

static std::vector<char> deletion_mask(int n, const std::vector<int>& idx, const char* what) {
    std::vector<char> drop(n, 0);
    for (int i : idx) {
        if (i < 0 || i >= n)
            throw std::invalid_argument(std::string(what) + ": index " + std::to_string(i) +
                                        " out of range [0," + std::to_string(n) + ")");
        if (drop[i])
            throw std::invalid_argument(std::string(what) + ": duplicate index " +
                                        std::to_string(i));
        drop[i] = 1;
    }
    return drop;
}

static Tensor delete_dim0(const Tensor& t, const std::vector<int>& idx) {
    auto drop = deletion_mask(t.dim(0), idx, "delete_dim0");
    std::size_t row = t.numel() / static_cast<std::size_t>(t.dim(0));
    std::vector<int> shape = t.shape;
    shape[0] -= static_cast<int>(idx.size());
    Tensor out(shape);
    std::size_t o = 0;
    for (int i = 0; i < t.dim(0); ++i) {
        if (drop[i]) continue;
        std::copy(t.data.begin() + i * row, t.data.begin() + (i + 1) * row,
                  out.data.begin() + (o++) * row);
    }
    return out;
}

static Tensor delete_dim1(const Tensor& t, const std::vector<int>& idx) {
    auto drop = deletion_mask(t.dim(1), idx, "delete_dim1");
    std::size_t inner = 1;
    for (int d = 2; d < t.rank(); ++d) inner *= static_cast<std::size_t>(t.dim(d));
    std::vector<int> shape = t.shape;
    shape[1] -= static_cast<int>(idx.size());
    Tensor out(shape);
    std::size_t o = 0;
    for (int n = 0; n < t.dim(0); ++n)
        for (int c = 0; c < t.dim(1); ++c) {
            if (drop[c]) continue;
            std::size_t src = (static_cast<std::size_t>(n) * t.dim(1) + c) * inner;
            std::copy(t.data.begin() + src, t.data.begin() + src + inner,
                      out.data.begin() + (o++) * inner);
        }
    return out;
}

// drops the column block [i*block, (i+1)*block) for every channel i
static Tensor delete_fc_columns(const Tensor& t, const std::vector<int>& channels, int block) {
    const int d_in = t.dim(1);
    if (d_in % block != 0)
        throw std::invalid_argument("delete_fc_columns: width not a multiple of block");
    auto drop = deletion_mask(d_in / block, channels, "delete_fc_columns");
    std::vector<int> shape = t.shape;
    shape[1] -= static_cast<int>(channels.size()) * block;
    Tensor out(shape);
    std::size_t o = 0;
    for (int r = 0; r < t.dim(0); ++r)
        for (int c = 0; c < d_in / block; ++c) {
            if (drop[c]) continue;
            std::size_t src = static_cast<std::size_t>(r) * d_in + c * block;
            std::copy(t.data.begin() + src, t.data.begin() + src + block,
                      out.data.begin() + (o++) * block);
        }
    return out;
}

static Tensor delete_bias(const Tensor& bias, const std::vector<int>& idx) {
    return delete_dim0(bias, idx);
}

static void remove_channels_weights(const std::vector<ConsumerSlice>& consumers,
                                    WeightSet& weights, const std::string& layer,
                                    const std::vector<int>& idx) {
    LayerWeights& lw = weights.at(layer);
    lw.weight = delete_dim0(lw.weight, idx);
    lw.bias = delete_bias(lw.bias, idx);
    for (const auto& cs : consumers) {
        LayerWeights& cw = weights.at(cs.consumer);
        if (cs.rule == ConsumerSlice::Rule::input_channel)
            cw.weight = delete_dim1(cw.weight, idx);
        else
            cw.weight = delete_fc_columns(cw.weight, idx, cs.block);
    }
}

/// Removes the listed output channels of `layer` from spec+weights and
/// slices every consumer accordingly.
static void apply_channel_removal(NetworkSpec& spec, WeightSet& weights,
                                  const std::string& layer, const std::vector<int>& idx) {
    if (idx.empty()) return;
    LayerSpec& l = spec.layer(layer);
    if (static_cast<int>(idx.size()) >= l.out_channels)
        throw std::invalid_argument("prune: removing all " + std::to_string(l.out_channels) +
                                    " channels of '" + layer + "' would empty the layer");
    auto consumers = consumers_of(spec, layer);  // on the pre-surgery spec
    remove_channels_weights(consumers, weights, layer, idx);
    l.out_channels -= static_cast<int>(idx.size());
}

// ---- selection ----

static Tensor filter_slice(const Tensor& w, int i) {
    // [c_out,c_in,k,k] -> [c_in,k,k]
    std::size_t per = w.numel() / static_cast<std::size_t>(w.dim(0));
    Tensor out({w.dim(1), w.dim(2), w.dim(3)});
    std::copy(w.data.begin() + i * per, w.data.begin() + (i + 1) * per, out.data.begin());
    return out;
}

static Tensor input_channel_slice(const Tensor& w, int i) {
    // [c_out,c_in,k,k] -> [c_out,k,k]
    const int c_out = w.dim(0), c_in = w.dim(1), k1 = w.dim(2), k2 = w.dim(3);
    Tensor out({c_out, k1, k2});
    for (int o = 0; o < c_out; ++o) {
        std::size_t src = ((static_cast<std::size_t>(o) * c_in + i) * k1) * k2;
        std::copy(w.data.begin() + src, w.data.begin() + src + static_cast<std::size_t>(k1) * k2,
                  out.data.begin() + static_cast<std::size_t>(o) * k1 * k2);
    }
    return out;
}

/// First conv layer consuming `layer`'s output channels, if any.
static std::string conv_successor(const NetworkSpec& spec, const std::string& layer) {
    for (const auto& cs : consumers_of(spec, layer)) {
        if (cs.rule != ConsumerSlice::Rule::input_channel) continue;
        if (spec.layer(cs.consumer).kind == LayerKind::conv) return cs.consumer;
    }
    return {};
}

std::vector<PruneDecision> select_filters(const NetworkSpec& spec, const WeightSet& theta_th,
                                          const std::vector<std::string>& layer_set,
                                          const SelectionThresholds& thresholds,
                                          const SelectOptions& opts) {
    thresholds.validate();
    if (theta_th.tag != WeightTag::theta_l1_th)
        throw std::invalid_argument("select_filters: expected a thresholded weight set");

    NetworkSpec work_spec = spec;
    WeightSet work_th = theta_th;

    std::vector<PruneDecision> decisions;
    for (const auto& lname : layer_set) {
        const LayerSpec& l = work_spec.layer(lname);
        if (l.kind != LayerKind::conv) continue;  // fc pruning is neuron-wise

        const std::string succ = conv_successor(work_spec, lname);
        const Tensor& w = work_th.at(lname).weight;
        const Tensor* succ_w = succ.empty() ? nullptr : &work_th.at(succ).weight;

        PruneDecision d;
        d.layer = lname;
        for (int i = 0; i < l.out_channels; ++i) {
            double spl_f = sparsity_level(filter_slice(w, i));
            double spl_g = 0.0;
            if (succ_w) spl_g = sparsity_level(input_channel_slice(*succ_w, i));
            FilterDecision fd{i, PruneReason::cond1, spl_f, spl_g};
            if (spl_f >= thresholds.s_f) {
                d.filters.push_back(fd);
            } else if (succ_w && spl_f >= thresholds.s_f_prime && spl_g >= thresholds.s_g) {
                fd.reason = PruneReason::cond2;
                d.filters.push_back(fd);
            }
        }
        if (!opts.allow_full_layer &&
            static_cast<int>(d.filters.size()) == l.out_channels && l.out_channels > 0) {
            // keep the least sparse filter so the layer survives
            auto keep = std::min_element(d.filters.begin(), d.filters.end(),
                                         [](const FilterDecision& a, const FilterDecision& b) {
                                             return a.splevel_f < b.splevel_f ||
                                                    (a.splevel_f == b.splevel_f &&
                                                     a.index < b.index);
                                         });
            d.filters.erase(keep);
        }
        if (d.filters.empty()) continue;
        if (!opts.snapshot) apply_channel_removal(work_spec, work_th, lname, d.indices());
        decisions.push_back(std::move(d));
    }
    return decisions;
}

std::pair<NetworkSpec, WeightSet> prune_filters(const NetworkSpec& spec, const WeightSet& theta,
                                                const std::vector<PruneDecision>& decisions) {
    NetworkSpec out_spec = spec;
    WeightSet out = theta;
    out.tag = WeightTag::theta_c;
    for (const auto& d : decisions)
        apply_channel_removal(out_spec, out, d.layer, d.indices());
    out_spec.validate();
    return {std::move(out_spec), std::move(out)};
}

std::tuple<NetworkSpec, WeightSet, std::vector<FcNeuronDecision>> prune_fc_neurons(
    const NetworkSpec& spec, const WeightSet& theta_th, const WeightSet& theta,
    const std::vector<std::string>& fc_layers) {
    NetworkSpec out_spec = spec;
    WeightSet out = theta;
    out.tag = WeightTag::theta_c;
    WeightSet work_th = theta_th;

    std::vector<FcNeuronDecision> all;
    for (const auto& lname : fc_layers) {
        const LayerSpec& l = out_spec.layer(lname);
        if (l.kind != LayerKind::fc)
            throw std::invalid_argument("prune_fc_neurons: '" + lname + "' is not fc");

        const Tensor& w = work_th.at(lname).weight;  // [d_out,d_in]
        auto consumers = consumers_of(out_spec, lname);

        FcNeuronDecision d;
        d.layer = lname;
        for (int j = 0; j < l.out_channels; ++j) {
            bool zero_in = true;
            for (int c = 0; c < w.dim(1) && zero_in; ++c)
                if (w.at2(j, c) != 0.0f) zero_in = false;
            bool zero_out = !consumers.empty();
            for (const auto& cs : consumers) {
                const Tensor& cw = work_th.at(cs.consumer).weight;
                for (int r = 0; r < cw.dim(0) && zero_out; ++r)
                    for (int b = 0; b < cs.block; ++b)
                        if (cw.at2(r, j * cs.block + b) != 0.0f) {
                            zero_out = false;
                            break;
                        }
            }
            if (zero_in || zero_out) {
                d.neurons.push_back(j);
                d.reasons.push_back(zero_in ? "zero_in" : "zero_out");
            }
        }
        if (d.neurons.empty()) continue;
        if (static_cast<int>(d.neurons.size()) >= l.out_channels)
            throw std::invalid_argument("prune_fc_neurons: removing all neurons of '" + lname +
                                        "' would empty the layer");
        remove_channels_weights(consumers, out, lname, d.neurons);
        remove_channels_weights(consumers, work_th, lname, d.neurons);
        out_spec.layer(lname).out_channels -= static_cast<int>(d.neurons.size());
        all.push_back(std::move(d));
    }
    out_spec.validate();
    return {std::move(out_spec), std::move(out), std::move(all)};
}

std::pair<NetworkSpec, WeightSet> drop_tail_layers(const NetworkSpec& spec,
                                                   const WeightSet& weights,
                                                   const std::string& after_layer,
                                                   const LayerSpec* replacement_head,
                                                   std::uint64_t seed) {
    int idx = spec.index_of(after_layer);
    if (idx < 0) throw std::invalid_argument("drop_tail_layers: no layer '" + after_layer + "'");
    NetworkSpec out_spec;
    out_spec.input_shape = spec.input_shape;
    out_spec.layers.assign(spec.layers.begin(), spec.layers.begin() + idx + 1);
    if (replacement_head) out_spec.layers.push_back(*replacement_head);
    if (out_spec.head_names().empty())
        throw std::invalid_argument("drop_tail_layers: no surviving head after '" + after_layer +
                                    "'");
    out_spec.validate();

    WeightSet out;
    out.tag = weights.tag;
    for (const auto& l : out_spec.layers) {
        if (!l.weighted()) continue;
        if (replacement_head && l.name == replacement_head->name) continue;
        out.layers.emplace(l.name, weights.at(l.name));
    }
    if (replacement_head) {
        WeightSet fresh = init_weights(out_spec, seed);
        out.layers.emplace(replacement_head->name, fresh.at(replacement_head->name));
    }
    return {std::move(out_spec), std::move(out)};
}

std::pair<NetworkSpec, WeightSet> random_prune(const NetworkSpec& spec, const WeightSet& weights,
                                               double fraction,
                                               const std::vector<std::string>& layer_range,
                                               std::uint64_t seed) {
    if (fraction < 0.0 || fraction >= 1.0)
        throw std::invalid_argument("random_prune: fraction must be in [0,1)");
    Rng rng(seed);
    std::vector<PruneDecision> decisions;
    for (const auto& lname : layer_range) {
        const LayerSpec& l = spec.layer(lname);
        if (l.kind != LayerKind::conv) continue;
        int m = static_cast<int>(fraction * l.out_channels);
        if (m == 0) continue;
        std::vector<int> pool(l.out_channels);
        for (int i = 0; i < l.out_channels; ++i) pool[i] = i;
        for (int i = 0; i < m; ++i)
            std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
        PruneDecision d;
        d.layer = lname;
        std::vector<int> chosen(pool.begin(), pool.begin() + m);
        std::sort(chosen.begin(), chosen.end());
        for (int i : chosen)
            d.filters.push_back({i, PruneReason::random_baseline, 0.0, 0.0});
        decisions.push_back(std::move(d));
    }
    return prune_filters(spec, weights, decisions);
}

void write_decisions(const std::string& path, const std::vector<PruneDecision>& decisions) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    for (const auto& d : decisions)
        for (const auto& fd : d.filters)
            f << d.layer << " " << fd.index << " " << prune_reason_name(fd.reason) << " "
              << fd.splevel_f << " " << fd.splevel_g << "\n";
}

}  // namespace mlpk
