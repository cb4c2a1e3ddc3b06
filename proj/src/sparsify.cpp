#include "mlpk/sparsify.hpp"

#include <cmath>
#include <fstream>

namespace mlpk {

static TrainOptions to_train_options(const SparsityConfig& cfg) {
    TrainOptions o;
    o.epochs = cfg.epochs;
    o.lr = cfg.lr;
    o.lr_decay = cfg.lr_decay;
    o.momentum = cfg.momentum;
    o.batch_size = cfg.batch_size;
    o.seed = cfg.seed;
    return o;
}

WeightSet train_l1(const NetworkSpec& spec, const WeightSet& weights, const Dataset& data,
                   const SparsityConfig& cfg) {
    TrainOptions o = to_train_options(cfg);
    o.alpha = cfg.alpha;
    o.l1_layers.insert(cfg.layer_set.begin(), cfg.layer_set.end());
    WeightSet out = train(spec, weights, data.train, o).weights;
    out.tag = WeightTag::theta_l1;
    return out;
}

AlphaSearchResult select_alpha(const NetworkSpec& spec, const WeightSet& weights,
                               const Dataset& data, float eps1,
                               const std::vector<float>& candidate_grid,
                               const SparsityConfig& cfg_base) {
    if (candidate_grid.empty())
        throw std::invalid_argument("select_alpha: empty candidate grid");
    const float base = evaluate(spec, weights, data.val);
    AlphaSearchResult res;
    bool found = false;
    for (float alpha : candidate_grid) {
        SparsityConfig cfg = cfg_base;
        cfg.alpha = alpha;
        WeightSet w = train_l1(spec, weights, data, cfg);
        AlphaCandidate cand;
        cand.alpha = alpha;
        cand.val_metric = evaluate(spec, w, data.val);
        cand.feasible = cand.val_metric >= base - eps1;
        if (cand.feasible) {
            res.alpha = alpha;  // grid is ascending; keep the largest feasible
            found = true;
        }
        res.candidates.push_back(cand);
    }
    if (!found) {
        res.alpha = candidate_grid.front();
        res.warning = true;
    }
    return res;
}

WeightSet apply_threshold(const WeightSet& weights, const std::vector<std::string>& layer_set,
                          float t) {
    if (t < 0.0f) throw std::invalid_argument("apply_threshold: negative threshold");
    WeightSet out = weights;
    out.tag = WeightTag::theta_l1_th;
    for (const auto& name : layer_set) {
        Tensor& w = out.at(name).weight;
        for (float& v : w.data)
            if (std::fabs(v) < t) v = 0.0f;
    }
    return out;
}

double weight_std(const WeightSet& weights, const std::vector<std::string>& layer_set) {
    double sum = 0.0, sumsq = 0.0;
    long long n = 0;
    for (const auto& name : layer_set) {
        const Tensor& w = weights.at(name).weight;
        for (float v : w.data) {
            sum += v;
            sumsq += static_cast<double>(v) * v;
            ++n;
        }
    }
    if (n == 0) return 0.0;
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    return var > 0.0 ? std::sqrt(var) : 0.0;
}

long long count_nonzero(const WeightSet& weights, const std::vector<std::string>& layer_set) {
    long long n = 0;
    for (const auto& name : layer_set)
        for (float v : weights.at(name).weight.data)
            if (v != 0.0f) ++n;
    return n;
}

ThresholdSearchResult search_threshold(const NetworkSpec& spec, const WeightSet& weights,
                                       const std::vector<std::string>& layer_set,
                                       const DataSplit& val, float eps2) {
    if (eps2 < 0.0f) throw std::invalid_argument("search_threshold: negative eps2");
    ThresholdSearchResult res;
    res.sigma = weight_std(weights, layer_set);
    res.base_metric = evaluate(spec, weights, val);
    float best = 0.0f;
    bool found = false;
    for (int i = 1; i <= 40; ++i) {
        float t = static_cast<float>(0.05 * i * res.sigma);
        WeightSet th = apply_threshold(weights, layer_set, t);
        ThresholdRow row;
        row.t = t;
        row.nonzero = count_nonzero(th, layer_set);
        row.val_metric = evaluate(spec, th, val);
        res.rows.push_back(row);
        if (row.val_metric >= res.base_metric - eps2) {
            best = t;  // keep the largest passing grid point
            found = true;
        }
    }
    res.t = found ? best : 0.0f;
    res.warning = !found;
    return res;
}

std::map<std::string, ThresholdSearchResult> layerwise_thresholds(
    const NetworkSpec& spec, const WeightSet& weights,
    const std::vector<std::string>& layer_set, const DataSplit& val, float eps2) {
    std::map<std::string, ThresholdSearchResult> out;
    for (const auto& name : layer_set)
        out[name] = search_threshold(spec, weights, {name}, val, eps2);
    return out;
}

void write_threshold_csv(const std::string& path, const std::vector<ThresholdRow>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "t,nonzero_count,val_metric\n";
    for (const auto& r : rows)
        f << r.t << "," << r.nonzero << "," << r.val_metric << "\n";
}

}  // namespace mlpk
