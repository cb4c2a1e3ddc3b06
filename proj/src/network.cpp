#include "mlpk/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mlpk/rng.hpp"

namespace mlpk {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv: return "conv";
        case LayerKind::fc: return "fc";
        case LayerKind::relu: return "relu";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::flatten: return "flatten";
        case LayerKind::head: return "head";
    }
    return "?";
}

LayerKind layer_kind_from_name(const std::string& s) {
    if (s == "conv") return LayerKind::conv;
    if (s == "fc") return LayerKind::fc;
    if (s == "relu") return LayerKind::relu;
    if (s == "maxpool") return LayerKind::maxpool;
    if (s == "flatten") return LayerKind::flatten;
    if (s == "head") return LayerKind::head;
    throw std::invalid_argument("unknown layer kind '" + s + "'");
}

int NetworkSpec::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].name == name) return static_cast<int>(i);
    return -1;
}

const LayerSpec& NetworkSpec::layer(const std::string& name) const {
    int i = index_of(name);
    if (i < 0) throw std::out_of_range("NetworkSpec: no layer '" + name + "'");
    return layers[i];
}

LayerSpec& NetworkSpec::layer(const std::string& name) {
    int i = index_of(name);
    if (i < 0) throw std::out_of_range("NetworkSpec: no layer '" + name + "'");
    return layers[i];
}

std::vector<std::string> NetworkSpec::head_names() const {
    std::vector<std::string> out;
    for (const auto& l : layers)
        if (l.kind == LayerKind::head) out.push_back(l.name);
    return out;
}

void NetworkSpec::validate() const {
    if (input_shape.size() != 3)
        throw std::invalid_argument("NetworkSpec: input_shape must be {c,h,w}");
    std::map<std::string, int> seen;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        if (l.name.empty()) throw std::invalid_argument("NetworkSpec: empty layer name");
        if (!seen.emplace(l.name, static_cast<int>(i)).second)
            throw std::invalid_argument("NetworkSpec: duplicate layer '" + l.name + "'");
        if (!l.input_layer.empty()) {
            auto it = seen.find(l.input_layer);
            if (it == seen.end() || it->second >= static_cast<int>(i))
                throw std::invalid_argument("NetworkSpec: layer '" + l.name +
                                            "' input '" + l.input_layer +
                                            "' must appear earlier in the list");
        }
        if (l.weighted() && l.out_channels < 1)
            throw std::invalid_argument("NetworkSpec: layer '" + l.name + "' needs out_channels >= 1");
        if (l.kind == LayerKind::conv && l.kernel < 1)
            throw std::invalid_argument("NetworkSpec: conv '" + l.name + "' needs kernel >= 1");
    }
    if (head_names().empty()) throw std::invalid_argument("NetworkSpec: no head layer");
    infer_shapes(*this);  // shape sanity
}

std::map<std::string, std::vector<int>> infer_shapes(const NetworkSpec& spec) {
    std::map<std::string, std::vector<int>> shapes;
    auto input_of = [&](const LayerSpec& l) -> std::vector<int> {
        if (l.input_layer.empty()) return spec.input_shape;
        auto it = shapes.find(l.input_layer);
        if (it == shapes.end())
            throw std::invalid_argument("infer_shapes: '" + l.name + "' references unknown '" +
                                        l.input_layer + "'");
        return it->second;
    };
    for (const auto& l : spec.layers) {
        std::vector<int> in = input_of(l);
        switch (l.kind) {
            case LayerKind::conv: {
                if (in.size() != 3)
                    throw std::invalid_argument("conv '" + l.name + "' needs spatial input");
                int h = (in[1] + 2 * l.pad - l.kernel) / l.stride + 1;
                int w = (in[2] + 2 * l.pad - l.kernel) / l.stride + 1;
                if (h < 1 || w < 1)
                    throw std::invalid_argument("conv '" + l.name + "' output collapses to zero");
                shapes[l.name] = {l.out_channels, h, w};
                break;
            }
            case LayerKind::fc: {
                if (in.size() != 1)
                    throw std::invalid_argument("fc '" + l.name + "' needs flat input");
                shapes[l.name] = {l.out_channels};
                break;
            }
            case LayerKind::relu:
            case LayerKind::maxpool: {
                if (l.kind == LayerKind::maxpool) {
                    if (in.size() != 3 || in[1] % 2 != 0 || in[2] % 2 != 0)
                        throw std::invalid_argument("maxpool '" + l.name +
                                                    "' needs even spatial input");
                    shapes[l.name] = {in[0], in[1] / 2, in[2] / 2};
                } else {
                    shapes[l.name] = in;
                }
                break;
            }
            case LayerKind::flatten: {
                int d = 1;
                for (int v : in) d *= v;
                shapes[l.name] = {d};
                break;
            }
            case LayerKind::head: {
                shapes[l.name] = {l.out_channels};
                break;
            }
        }
    }
    return shapes;
}

std::map<std::string, WeightShape> weight_shapes(const NetworkSpec& spec) {
    auto shapes = infer_shapes(spec);
    std::map<std::string, WeightShape> out;
    for (const auto& l : spec.layers) {
        if (!l.weighted()) continue;
        std::vector<int> in =
            l.input_layer.empty() ? spec.input_shape : shapes.at(l.input_layer);
        WeightShape ws;
        if (l.kind == LayerKind::conv) {
            ws.weight = {l.out_channels, in[0], l.kernel, l.kernel};
        } else if (l.kind == LayerKind::fc) {
            ws.weight = {l.out_channels, in[0]};
        } else {  // head: full-kernel conv over spatial input, fc over flat
            if (in.size() == 3)
                ws.weight = {l.out_channels, in[0], in[1], in[2]};
            else
                ws.weight = {l.out_channels, in[0]};
        }
        ws.bias = {l.out_channels};
        out[l.name] = ws;
    }
    return out;
}

WeightSet init_weights(const NetworkSpec& spec, std::uint64_t seed) {
    auto shapes = weight_shapes(spec);
    WeightSet ws;
    ws.tag = WeightTag::theta;
    Rng rng(seed);
    // iterate in layer-list order so the stream is pinned to the spec
    for (const auto& l : spec.layers) {
        if (!l.weighted()) continue;
        const WeightShape& sh = shapes.at(l.name);
        LayerWeights lw;
        lw.weight = Tensor(sh.weight);
        lw.bias = Tensor(sh.bias);
        std::size_t fan_in = lw.weight.numel() / static_cast<std::size_t>(sh.weight[0]);
        float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
        for (float& v : lw.weight.data) v = static_cast<float>(rng.uniform(-bound, bound));
        ws.layers.emplace(l.name, std::move(lw));
    }
    return ws;
}

std::map<std::string, Tensor> forward(const NetworkSpec& spec, const WeightSet& weights,
                                      const Tensor& inputs, ForwardCache* cache) {
    if (inputs.rank() != 4)
        throw std::invalid_argument("forward: inputs must be [n,c,h,w]");
    std::map<std::string, Tensor> outs;
    std::map<std::string, Tensor> heads;
    auto input_of = [&](const LayerSpec& l) -> const Tensor& {
        if (l.input_layer.empty()) return inputs;
        auto it = outs.find(l.input_layer);
        if (it == outs.end())
            throw std::invalid_argument("forward: missing output of '" + l.input_layer + "'");
        return it->second;
    };
    const int n = inputs.dim(0);
    for (const auto& l : spec.layers) {
        const Tensor& in = input_of(l);
        Tensor out;
        switch (l.kind) {
            case LayerKind::conv: {
                const LayerWeights& lw = weights.at(l.name);
                out = conv2d(in, lw.weight, lw.bias, l.stride, l.pad);
                break;
            }
            case LayerKind::fc: {
                const LayerWeights& lw = weights.at(l.name);
                out = fc(in, lw.weight, lw.bias);
                break;
            }
            case LayerKind::relu:
                out = relu(in);
                break;
            case LayerKind::maxpool:
                out = maxpool2x2(in);
                break;
            case LayerKind::flatten: {
                out = in;
                out.shape = {n, static_cast<int>(in.numel()) / n};
                break;
            }
            case LayerKind::head: {
                const LayerWeights& lw = weights.at(l.name);
                if (in.rank() == 4) {
                    Tensor o = conv2d(in, lw.weight, lw.bias, 1, 0);  // full kernel -> 1x1
                    o.shape = {n, l.out_channels};
                    out = std::move(o);
                } else {
                    out = fc(in, lw.weight, lw.bias);
                }
                heads[l.name] = out;
                break;
            }
        }
        outs[l.name] = std::move(out);
    }
    if (cache) cache->out = std::move(outs);
    return heads;
}

std::vector<ConsumerSlice> consumers_of(const NetworkSpec& spec, const std::string& layer) {
    const LayerSpec& src = spec.layer(layer);
    if (src.kind != LayerKind::conv && src.kind != LayerKind::fc)
        throw std::invalid_argument("consumers_of: '" + layer + "' is not conv or fc");
    auto shapes = infer_shapes(spec);

    // Walk each weighted layer's producer chain through the pass-through
    // kinds; if it bottoms out at `layer`, record the slicing rule.
    std::vector<ConsumerSlice> out;
    for (const auto& l : spec.layers) {
        if (!l.weighted()) continue;
        std::string cur = l.input_layer;
        bool through_flatten = false;
        std::vector<int> flat_in_shape;  // shape entering the flatten
        while (!cur.empty()) {
            const LayerSpec& p = spec.layer(cur);
            if (p.weighted()) break;
            if (p.kind == LayerKind::flatten) {
                through_flatten = true;
                flat_in_shape =
                    p.input_layer.empty() ? spec.input_shape : shapes.at(p.input_layer);
            }
            cur = p.input_layer;
        }
        if (cur != layer) continue;
        ConsumerSlice cs;
        cs.consumer = l.name;
        if (through_flatten) {
            // channel i -> contiguous h*w columns (row-major c,h,w flatten)
            cs.rule = ConsumerSlice::Rule::fc_block;
            cs.block = flat_in_shape.size() == 3 ? flat_in_shape[1] * flat_in_shape[2] : 1;
        } else if (src.kind == LayerKind::fc) {
            cs.rule = ConsumerSlice::Rule::fc_block;
            cs.block = 1;
        } else {
            cs.rule = ConsumerSlice::Rule::input_channel;
            cs.block = 1;
        }
        out.push_back(cs);
    }
    return out;
}

CountReport count_params(const NetworkSpec& spec, bool include_bias) {
    auto shapes = weight_shapes(spec);
    CountReport r;
    for (const auto& l : spec.layers) {
        if (!l.weighted()) continue;
        const WeightShape& ws = shapes.at(l.name);
        long long n = 1;
        for (int d : ws.weight) n *= d;
        if (include_bias) n += ws.bias[0];
        r.per_layer[l.name] = n;
        r.total += n;
    }
    return r;
}

CountReport count_flops(const NetworkSpec& spec) {
    auto act = infer_shapes(spec);
    auto wsh = weight_shapes(spec);
    CountReport r;
    for (const auto& l : spec.layers) {
        if (!l.weighted()) continue;
        long long per_position = 1;
        for (std::size_t i = 1; i < wsh.at(l.name).weight.size(); ++i)
            per_position *= wsh.at(l.name).weight[i];
        long long positions = 1;  // fc and head produce one position
        if (l.kind == LayerKind::conv) {
            const auto& os = act.at(l.name);
            positions = static_cast<long long>(os[1]) * os[2];
        }
        long long n = static_cast<long long>(l.out_channels) * per_position * positions;
        r.per_layer[l.name] = n;
        r.total += n;
    }
    return r;
}

long long model_size_bytes(const NetworkSpec& spec) {
    return 4LL * count_params(spec, true).total;
}

std::string serialize_spec(const NetworkSpec& spec) {
    std::ostringstream os;
    os << "mlpk-spec 1\n";
    os << "input " << spec.input_shape[0] << " " << spec.input_shape[1] << " "
       << spec.input_shape[2] << "\n";
    for (const auto& l : spec.layers) {
        os << "layer " << l.name << " " << layer_kind_name(l.kind) << " in="
           << (l.input_layer.empty() ? "@input" : l.input_layer);
        if (l.weighted()) os << " c=" << l.out_channels;
        if (l.kind == LayerKind::conv)
            os << " k=" << l.kernel << " stride=" << l.stride << " pad=" << l.pad;
        os << "\n";
    }
    return os.str();
}

NetworkSpec parse_spec(const std::string& text) {
    NetworkSpec spec;
    std::istringstream is(text);
    std::string line;
    bool saw_magic = false;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok) || tok[0] == '#') continue;
        if (tok == "mlpk-spec") {
            int version = 0;
            ls >> version;
            if (version != 1)
                throw std::invalid_argument("parse_spec: unsupported version on line " +
                                            std::to_string(lineno));
            saw_magic = true;
        } else if (tok == "input") {
            int c, h, w;
            if (!(ls >> c >> h >> w))
                throw std::invalid_argument("parse_spec: bad input line " + std::to_string(lineno));
            spec.input_shape = {c, h, w};
        } else if (tok == "layer") {
            LayerSpec l;
            std::string kind;
            if (!(ls >> l.name >> kind))
                throw std::invalid_argument("parse_spec: bad layer line " + std::to_string(lineno));
            l.kind = layer_kind_from_name(kind);
            std::string kv;
            while (ls >> kv) {
                auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw std::invalid_argument("parse_spec: bad token '" + kv + "' on line " +
                                                std::to_string(lineno));
                std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
                if (key == "in")
                    l.input_layer = (val == "@input") ? "" : val;
                else if (key == "c")
                    l.out_channels = std::stoi(val);
                else if (key == "k")
                    l.kernel = std::stoi(val);
                else if (key == "stride")
                    l.stride = std::stoi(val);
                else if (key == "pad")
                    l.pad = std::stoi(val);
                else
                    throw std::invalid_argument("parse_spec: unknown key '" + key + "' on line " +
                                                std::to_string(lineno));
            }
            spec.layers.push_back(l);
        } else {
            throw std::invalid_argument("parse_spec: unknown directive '" + tok + "' on line " +
                                        std::to_string(lineno));
        }
    }
    if (!saw_magic) throw std::invalid_argument("parse_spec: missing mlpk-spec header");
    spec.validate();
    return spec;
}

}  // namespace mlpk
