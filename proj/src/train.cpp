#include "mlpk/train.hpp"

#include <algorithm>
#include <cmath>

#include "mlpk/ops.hpp"
#include "mlpk/rng.hpp"

namespace mlpk {

LossGrads loss_and_grads(const NetworkSpec& spec, const WeightSet& weights, const Batch& batch) {
    ForwardCache cache;
    auto head_logits = forward(spec, weights, batch.inputs, &cache);
    const int n = batch.size();

    LossGrads res;
    // zero-initialized gradient set aligned with the weights
    for (const auto& [name, lw] : weights.layers) {
        LayerWeights g;
        g.weight = Tensor(lw.weight.shape);
        g.bias = Tensor(lw.bias.shape);
        res.grads.layers.emplace(name, std::move(g));
    }

    // dL/d(output) per layer, accumulated from consumers
    std::map<std::string, Tensor> grad_out;
    auto accumulate = [&](const std::string& name, const Tensor& g) {
        auto it = grad_out.find(name);
        if (it == grad_out.end()) {
            grad_out[name] = g;
        } else {
            for (std::size_t i = 0; i < g.numel(); ++i) it->second[i] += g[i];
        }
    };

    std::vector<float> head_losses;
    for (const auto& hname : spec.head_names()) {
        XentResult x = softmax_xent(head_logits.at(hname), batch.labels);
        head_losses.push_back(x.loss);
        accumulate(hname, x.grad_logits);
    }
    res.loss = static_cast<float>(pairwise_sum(head_losses));

    for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
        const LayerSpec& l = *it;
        auto git = grad_out.find(l.name);
        if (git == grad_out.end()) continue;  // feeds no head
        Tensor& go = git->second;
        const Tensor& in =
            l.input_layer.empty() ? batch.inputs : cache.out.at(l.input_layer);
        switch (l.kind) {
            case LayerKind::conv: {
                const LayerWeights& lw = weights.at(l.name);
                ConvGrads g = conv2d_grad(in, lw.weight, l.stride, l.pad, go);
                res.grads.at(l.name).weight = std::move(g.grad_weights);
                res.grads.at(l.name).bias = std::move(g.grad_bias);
                if (!l.input_layer.empty()) accumulate(l.input_layer, g.grad_input);
                break;
            }
            case LayerKind::fc: {
                const LayerWeights& lw = weights.at(l.name);
                FcGrads g = fc_grad(in, lw.weight, go);
                res.grads.at(l.name).weight = std::move(g.grad_weights);
                res.grads.at(l.name).bias = std::move(g.grad_bias);
                if (!l.input_layer.empty()) accumulate(l.input_layer, g.grad_input);
                break;
            }
            case LayerKind::relu: {
                Tensor g = relu_grad(in, go);
                if (!l.input_layer.empty()) accumulate(l.input_layer, g);
                break;
            }
            case LayerKind::maxpool: {
                Tensor g = maxpool2x2_grad(in, go);
                if (!l.input_layer.empty()) accumulate(l.input_layer, g);
                break;
            }
            case LayerKind::flatten: {
                Tensor g = go;
                g.shape = in.shape;
                if (!l.input_layer.empty()) accumulate(l.input_layer, g);
                break;
            }
            case LayerKind::head: {
                const LayerWeights& lw = weights.at(l.name);
                if (in.rank() == 4) {
                    Tensor go4 = go;
                    go4.shape = {n, l.out_channels, 1, 1};
                    ConvGrads g = conv2d_grad(in, lw.weight, 1, 0, go4);
                    res.grads.at(l.name).weight = std::move(g.grad_weights);
                    res.grads.at(l.name).bias = std::move(g.grad_bias);
                    if (!l.input_layer.empty()) accumulate(l.input_layer, g.grad_input);
                } else {
                    FcGrads g = fc_grad(in, lw.weight, go);
                    res.grads.at(l.name).weight = std::move(g.grad_weights);
                    res.grads.at(l.name).bias = std::move(g.grad_bias);
                    if (!l.input_layer.empty()) accumulate(l.input_layer, g.grad_input);
                }
                break;
            }
        }
    }
    return res;
}

TrainResult train(const NetworkSpec& spec, const WeightSet& start, const DataSplit& data,
                  const TrainOptions& opts) {
    if (opts.lr < 0.0f) throw std::invalid_argument("train: negative learning rate");
    TrainResult res;
    res.weights = start;

    WeightSet velocity;
    for (const auto& [name, lw] : start.layers) {
        LayerWeights v;
        v.weight = Tensor(lw.weight.shape);
        v.bias = Tensor(lw.bias.shape);
        velocity.layers.emplace(name, std::move(v));
    }

    Rng rng(opts.seed);
    std::vector<int> order(data.size());
    float lr = opts.lr;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);

        std::vector<float> losses;
        for (int b = 0; b < data.size(); b += opts.batch_size) {
            int e = std::min(b + opts.batch_size, data.size());
            std::vector<int> idx(order.begin() + b, order.begin() + e);
            Batch batch = data.gather(idx);
            LossGrads lg = loss_and_grads(spec, res.weights, batch);
            if (!std::isfinite(lg.loss)) throw DivergenceError(epoch);
            losses.push_back(lg.loss);
            if (opts.momentum > 0.0f) {
                for (auto& [name, v] : velocity.layers) {
                    LayerWeights& g = lg.grads.at(name);
                    for (std::size_t i = 0; i < v.weight.numel(); ++i)
                        g.weight[i] = (v.weight[i] =
                                           opts.momentum * v.weight[i] + g.weight[i]);
                    for (std::size_t i = 0; i < v.bias.numel(); ++i)
                        g.bias[i] = (v.bias[i] = opts.momentum * v.bias[i] + g.bias[i]);
                }
            }
            res.weights = sgd_step_l1(res.weights, lg.grads, lr, opts.alpha, opts.l1_layers);
        }
        res.epoch_losses.push_back(
            losses.empty() ? 0.0f : static_cast<float>(pairwise_sum(losses) / losses.size()));
        lr *= opts.lr_decay;
    }
    return res;
}

float evaluate(const NetworkSpec& spec, const WeightSet& weights, const DataSplit& data,
               int batch_size) {
    auto heads = spec.head_names();
    std::vector<long long> correct(heads.size(), 0);
    for (int b = 0; b < data.size(); b += batch_size) {
        int e = std::min(b + batch_size, data.size());
        Batch batch = data.slice(b, e);
        auto logits = forward(spec, weights, batch.inputs);
        for (std::size_t h = 0; h < heads.size(); ++h) {
            const Tensor& lg = logits.at(heads[h]);
            for (int ni = 0; ni < batch.size(); ++ni) {
                int best = 0;
                for (int c = 1; c < lg.dim(1); ++c)
                    if (lg.at2(ni, c) > lg.at2(ni, best)) best = c;
                if (best == batch.labels[ni]) ++correct[h];
            }
        }
    }
    if (data.size() == 0 || heads.empty()) return 0.0f;
    double acc = 0.0;
    for (long long c : correct) acc += static_cast<double>(c) / data.size();
    return static_cast<float>(100.0 * acc / heads.size());
}

}  // namespace mlpk
