#include "mlpk/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace mlpk {

int max_threads() {
    if (const char* env = std::getenv("MLPK_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    int nthreads = std::min(max_threads(), n);
    if (nthreads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) {
        workers.emplace_back([&, t] {
            for (int i = t; i < n; i += nthreads) fn(i);
        });
    }
    for (auto& w : workers) w.join();
}

static void check_conv_shapes(const Tensor& input, const Tensor& weights, int stride, int pad) {
    if (input.rank() != 4)
        throw std::invalid_argument("conv2d: input must be 4-d, got " + shape_str(input.shape));
    if (weights.rank() != 4)
        throw std::invalid_argument("conv2d: weights must be 4-d, got " + shape_str(weights.shape));
    if (weights.dim(2) != weights.dim(3))
        throw std::invalid_argument("conv2d: kernel must be square, got " + shape_str(weights.shape));
    if (input.dim(1) != weights.dim(1))
        throw std::invalid_argument("conv2d: input channels " + std::to_string(input.dim(1)) +
                                    " do not match weight channels " + std::to_string(weights.dim(1)));
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    if (pad < 0) throw std::invalid_argument("conv2d: pad must be >= 0");
    int k = weights.dim(2);
    if (k > input.dim(2) + 2 * pad || k > input.dim(3) + 2 * pad)
        throw std::invalid_argument("conv2d: kernel " + std::to_string(k) +
                                    " larger than padded input " + shape_str(input.shape));
}

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              int stride, int pad) {
    check_conv_shapes(input, weights, stride, pad);
    require_shape(bias, {weights.dim(0)}, "conv2d bias");
    const int n = input.dim(0), c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int c_out = weights.dim(0), k = weights.dim(2);
    const int h_out = (h + 2 * pad - k) / stride + 1;
    const int w_out = (w + 2 * pad - k) / stride + 1;

    Tensor out({n, c_out, h_out, w_out});
    parallel_for(n, [&](int ni) {
        for (int co = 0; co < c_out; ++co) {
            for (int ho = 0; ho < h_out; ++ho) {
                for (int wo = 0; wo < w_out; ++wo) {
                    float acc = bias[co];
                    const int h0 = ho * stride - pad, w0 = wo * stride - pad;
                    for (int ci = 0; ci < c_in; ++ci) {
                        for (int kh = 0; kh < k; ++kh) {
                            const int hi = h0 + kh;
                            if (hi < 0 || hi >= h) continue;
                            for (int kw = 0; kw < k; ++kw) {
                                const int wi = w0 + kw;
                                if (wi < 0 || wi >= w) continue;
                                acc += input.at4(ni, ci, hi, wi) *
                                       weights.at4(co, ci, kh, kw);
                            }
                        }
                    }
                    out.at4(ni, co, ho, wo) = acc;
                }
            }
        }
    });
    return out;
}

ConvGrads conv2d_grad(const Tensor& input, const Tensor& weights, int stride, int pad,
                      const Tensor& grad_output) {
    check_conv_shapes(input, weights, stride, pad);
    const int n = input.dim(0), c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int c_out = weights.dim(0), k = weights.dim(2);
    const int h_out = (h + 2 * pad - k) / stride + 1;
    const int w_out = (w + 2 * pad - k) / stride + 1;
    require_shape(grad_output, {n, c_out, h_out, w_out}, "conv2d_grad upstream");

    ConvGrads g;
    g.grad_input = Tensor({n, c_in, h, w});
    g.grad_weights = Tensor({c_out, c_in, k, k});
    g.grad_bias = Tensor({c_out});

    // per-example weight/bias partials, reduced afterwards in a fixed
    // pairwise tree so the result does not depend on thread count
    const std::size_t wsz = g.grad_weights.numel();
    std::vector<std::vector<float>> wpart(n, std::vector<float>(wsz, 0.0f));
    std::vector<std::vector<float>> bpart(n, std::vector<float>(c_out, 0.0f));

    parallel_for(n, [&](int ni) {
        auto& wp = wpart[ni];
        auto& bp = bpart[ni];
        for (int co = 0; co < c_out; ++co) {
            for (int ho = 0; ho < h_out; ++ho) {
                for (int wo = 0; wo < w_out; ++wo) {
                    const float go = grad_output.at4(ni, co, ho, wo);
                    if (go == 0.0f) continue;
                    bp[co] += go;
                    const int h0 = ho * stride - pad, w0 = wo * stride - pad;
                    for (int ci = 0; ci < c_in; ++ci) {
                        for (int kh = 0; kh < k; ++kh) {
                            const int hi = h0 + kh;
                            if (hi < 0 || hi >= h) continue;
                            for (int kw = 0; kw < k; ++kw) {
                                const int wi = w0 + kw;
                                if (wi < 0 || wi >= w) continue;
                                wp[((static_cast<std::size_t>(co) * c_in + ci) * k + kh) * k + kw] +=
                                    go * input.at4(ni, ci, hi, wi);
                                g.grad_input.at4(ni, ci, hi, wi) +=
                                    go * weights.at4(co, ci, kh, kw);
                            }
                        }
                    }
                }
            }
        }
    });

    std::vector<float> col(n);
    for (std::size_t j = 0; j < wsz; ++j) {
        for (int ni = 0; ni < n; ++ni) col[ni] = wpart[ni][j];
        g.grad_weights[j] = static_cast<float>(pairwise_sum(col.data(), col.size()));
    }
    for (int co = 0; co < c_out; ++co) {
        for (int ni = 0; ni < n; ++ni) col[ni] = bpart[ni][co];
        g.grad_bias[co] = static_cast<float>(pairwise_sum(col.data(), col.size()));
    }
    return g;
}

Tensor fc(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    if (input.rank() != 2 || weights.rank() != 2)
        throw std::invalid_argument("fc: input and weights must be 2-d");
    if (input.dim(1) != weights.dim(1))
        throw std::invalid_argument("fc: input width " + std::to_string(input.dim(1)) +
                                    " does not match weight width " + std::to_string(weights.dim(1)));
    require_shape(bias, {weights.dim(0)}, "fc bias");
    const int n = input.dim(0), d_in = input.dim(1), d_out = weights.dim(0);
    Tensor out({n, d_out});
    parallel_for(n, [&](int ni) {
        for (int o = 0; o < d_out; ++o) {
            float acc = bias[o];
            const float* wrow = &weights.data[static_cast<std::size_t>(o) * d_in];
            const float* irow = &input.data[static_cast<std::size_t>(ni) * d_in];
            for (int i = 0; i < d_in; ++i) acc += wrow[i] * irow[i];
            out.at2(ni, o) = acc;
        }
    });
    return out;
}

FcGrads fc_grad(const Tensor& input, const Tensor& weights, const Tensor& grad_output) {
    const int n = input.dim(0), d_in = input.dim(1), d_out = weights.dim(0);
    require_shape(grad_output, {n, d_out}, "fc_grad upstream");
    FcGrads g;
    g.grad_input = Tensor({n, d_in});
    g.grad_weights = Tensor({d_out, d_in});
    g.grad_bias = Tensor({d_out});

    std::vector<std::vector<float>> wpart(n, std::vector<float>(g.grad_weights.numel(), 0.0f));
    parallel_for(n, [&](int ni) {
        auto& wp = wpart[ni];
        for (int o = 0; o < d_out; ++o) {
            const float go = grad_output.at2(ni, o);
            if (go == 0.0f) continue;
            const float* wrow = &weights.data[static_cast<std::size_t>(o) * d_in];
            float* gi = &g.grad_input.data[static_cast<std::size_t>(ni) * d_in];
            const float* irow = &input.data[static_cast<std::size_t>(ni) * d_in];
            float* wprow = &wp[static_cast<std::size_t>(o) * d_in];
            for (int i = 0; i < d_in; ++i) {
                gi[i] += go * wrow[i];
                wprow[i] += go * irow[i];
            }
        }
    });

    std::vector<float> col(n);
    for (std::size_t j = 0; j < g.grad_weights.numel(); ++j) {
        for (int ni = 0; ni < n; ++ni) col[ni] = wpart[ni][j];
        g.grad_weights[j] = static_cast<float>(pairwise_sum(col.data(), col.size()));
    }
    for (int o = 0; o < d_out; ++o) {
        for (int ni = 0; ni < n; ++ni) col[ni] = grad_output.at2(ni, o);
        g.grad_bias[o] = static_cast<float>(pairwise_sum(col.data(), col.size()));
    }
    return g;
}

Tensor relu(const Tensor& input) {
    Tensor out = input;
    for (float& v : out.data) v = v > 0.0f ? v : 0.0f;
    return out;
}

Tensor relu_grad(const Tensor& input, const Tensor& grad_output) {
    if (!input.same_shape(grad_output))
        throw std::invalid_argument("relu_grad: shape mismatch");
    Tensor g = grad_output;
    for (std::size_t i = 0; i < g.numel(); ++i)
        if (input[i] <= 0.0f) g[i] = 0.0f;
    return g;
}

Tensor maxpool2x2(const Tensor& input) {
    if (input.rank() != 4) throw std::invalid_argument("maxpool2x2: input must be 4-d");
    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (h % 2 != 0 || w % 2 != 0)
        throw std::invalid_argument("maxpool2x2: spatial dims must be even, got " +
                                    shape_str(input.shape));
    Tensor out({n, c, h / 2, w / 2});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int ho = 0; ho < h / 2; ++ho)
                for (int wo = 0; wo < w / 2; ++wo) {
                    float m = input.at4(ni, ci, 2 * ho, 2 * wo);
                    m = std::max(m, input.at4(ni, ci, 2 * ho, 2 * wo + 1));
                    m = std::max(m, input.at4(ni, ci, 2 * ho + 1, 2 * wo));
                    m = std::max(m, input.at4(ni, ci, 2 * ho + 1, 2 * wo + 1));
                    out.at4(ni, ci, ho, wo) = m;
                }
    return out;
}

Tensor maxpool2x2_grad(const Tensor& input, const Tensor& grad_output) {
    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    require_shape(grad_output, {n, c, h / 2, w / 2}, "maxpool2x2_grad upstream");
    Tensor g({n, c, h, w});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int ho = 0; ho < h / 2; ++ho)
                for (int wo = 0; wo < w / 2; ++wo) {
                    // gradient flows to the first maximal element (fixed
                    // scan order breaks ties deterministically)
                    int bh = 2 * ho, bw = 2 * wo;
                    float best = input.at4(ni, ci, bh, bw);
                    for (int dh = 0; dh < 2; ++dh)
                        for (int dw = 0; dw < 2; ++dw) {
                            float v = input.at4(ni, ci, 2 * ho + dh, 2 * wo + dw);
                            if (v > best) {
                                best = v;
                                bh = 2 * ho + dh;
                                bw = 2 * wo + dw;
                            }
                        }
                    g.at4(ni, ci, bh, bw) += grad_output.at4(ni, ci, ho, wo);
                }
    return g;
}

XentResult softmax_xent(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) throw std::invalid_argument("softmax_xent: logits must be 2-d");
    const int n = logits.dim(0), classes = logits.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("softmax_xent: label count does not match batch size");
    XentResult r;
    r.grad_logits = Tensor({n, classes});
    std::vector<float> per_example(n);
    for (int ni = 0; ni < n; ++ni) {
        const int y = labels[ni];
        if (y < 0 || y >= classes)
            throw std::invalid_argument("softmax_xent: label " + std::to_string(y) +
                                        " out of range for " + std::to_string(classes) + " classes");
        float mx = logits.at2(ni, 0);
        for (int c = 1; c < classes; ++c) mx = std::max(mx, logits.at2(ni, c));
        double denom = 0.0;
        for (int c = 0; c < classes; ++c) denom += std::exp(static_cast<double>(logits.at2(ni, c) - mx));
        per_example[ni] = static_cast<float>(std::log(denom) - (logits.at2(ni, y) - mx));
        for (int c = 0; c < classes; ++c) {
            double p = std::exp(static_cast<double>(logits.at2(ni, c) - mx)) / denom;
            r.grad_logits.at2(ni, c) = static_cast<float>((p - (c == y ? 1.0 : 0.0)) / n);
        }
    }
    r.loss = static_cast<float>(pairwise_sum(per_example) / n);
    return r;
}

WeightSet sgd_step_l1(const WeightSet& weights, const WeightSet& grads, float lr,
                      float alpha, const std::set<std::string>& l1_layers) {
    if (lr < 0.0f) throw std::invalid_argument("sgd_step_l1: negative learning rate");
    if (alpha < 0.0f) throw std::invalid_argument("sgd_step_l1: negative alpha");
    WeightSet out = weights;
    for (auto& [name, lw] : out.layers) {
        const LayerWeights& g = grads.at(name);
        if (!lw.weight.same_shape(g.weight) || !lw.bias.same_shape(g.bias))
            throw std::invalid_argument("sgd_step_l1: gradient shape mismatch for '" + name + "'");
        const bool l1 = l1_layers.count(name) != 0;
        for (std::size_t i = 0; i < lw.weight.numel(); ++i) {
            float w = lw.weight[i];
            float step = g.weight[i];
            if (l1 && w != 0.0f) step += alpha * (w > 0.0f ? 1.0f : -1.0f);
            lw.weight[i] = w - lr * step;
        }
        for (std::size_t i = 0; i < lw.bias.numel(); ++i)
            lw.bias[i] -= lr * g.bias[i];
    }
    return out;
}

}  // namespace mlpk
