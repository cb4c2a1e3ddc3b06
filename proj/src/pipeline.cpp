#include "mlpk/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mlpk/train.hpp"

namespace mlpk {

double RunLog::compression_factor() const {
    if (spec_original.empty() || spec_final.empty()) return 1.0;
    long long before = count_params(parse_spec(spec_original), true).total;
    long long after = count_params(parse_spec(spec_final), true).total;
    return after > 0 ? static_cast<double>(before) / after : 1.0;
}

static WeightHistogram make_histogram(const Tensor& pre, const Tensor& post, int bins = 100) {
    WeightHistogram h;
    float lo = 0.0f, hi = 0.0f;
    bool first = true;
    for (const Tensor* t : {&pre, &post})
        for (float v : t->data) {
            if (first) {
                lo = hi = v;
                first = false;
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (hi <= lo) hi = lo + 1e-6f;
    h.lo = lo;
    h.hi = hi;
    h.pre.assign(bins, 0);
    h.post.assign(bins, 0);
    auto bin_of = [&](float v) {
        int b = static_cast<int>((v - lo) / (hi - lo) * bins);
        return std::clamp(b, 0, bins - 1);
    };
    for (float v : pre.data) ++h.pre[bin_of(v)];
    for (float v : post.data) ++h.post[bin_of(v)];
    return h;
}

static std::map<std::string, int> filter_counts(const NetworkSpec& spec) {
    std::map<std::string, int> out;
    for (const auto& l : spec.layers)
        if (l.weighted()) out[l.name] = l.out_channels;
    return out;
}

PhaseResult run_phase(const NetworkSpec& spec, const WeightSet& weights, const Dataset& data,
                      const PhaseConfig& phase) {
    auto t0 = std::chrono::steady_clock::now();
    SparsityConfig cfg = phase.sparsity;

    PhaseResult res;
    PhaseRecord& rec = res.record;
    rec.phase = phase.name;
    rec.seed = cfg.seed;
    rec.pre_metric = evaluate(spec, weights, data.val);
    rec.params_before = count_params(spec, true).total;
    rec.flops_before = count_flops(spec).total;
    rec.filters_before = filter_counts(spec);

    if (!phase.alpha_grid.empty()) {
        auto ar = select_alpha(spec, weights, data, cfg.eps1, phase.alpha_grid, cfg);
        cfg.alpha = ar.alpha;
    }
    rec.alpha = cfg.alpha;

    WeightSet theta_l1 = train_l1(spec, weights, data, cfg);
    rec.post_l1_metric = evaluate(spec, theta_l1, data.val);
    for (const auto& lname : cfg.layer_set)
        rec.histograms[lname] =
            make_histogram(weights.at(lname).weight, theta_l1.at(lname).weight);

    auto ts = search_threshold(spec, theta_l1, cfg.layer_set, data.val, cfg.eps2);
    rec.threshold = ts.t;
    rec.sigma = ts.sigma;
    rec.threshold_warning = ts.warning;
    rec.threshold_rows = ts.rows;

    WeightSet theta_th = apply_threshold(theta_l1, cfg.layer_set, ts.t);
    rec.post_th_metric = evaluate(spec, theta_th, data.val);
    for (const auto& lname : cfg.layer_set) {
        rec.nonzero_before[lname] = count_nonzero(theta_l1, {lname});
        rec.nonzero_after[lname] = count_nonzero(theta_th, {lname});
    }

    if (phase.layerwise_comparison) {
        auto lw = layerwise_thresholds(spec, theta_l1, cfg.layer_set, data.val, cfg.eps2);
        for (const auto& [lname, r] : lw) rec.layerwise_t[lname] = r.t;
    }

    SelectOptions sel;
    sel.snapshot = phase.snapshot_selection;
    rec.decisions = select_filters(spec, theta_th, cfg.layer_set, phase.thresholds, sel);

    auto [cur_spec, theta_c] = prune_filters(spec, theta_l1, rec.decisions);
    if (!phase.fc_prune_layers.empty()) {
        // keep the thresholded set aligned with the pruned shapes
        WeightSet theta_th_pruned = prune_filters(spec, theta_th, rec.decisions).second;
        theta_th_pruned.tag = WeightTag::theta_l1_th;
        auto [s2, w2, fcdec] =
            prune_fc_neurons(cur_spec, theta_th_pruned, theta_c, phase.fc_prune_layers);
        cur_spec = std::move(s2);
        theta_c = std::move(w2);
        rec.fc_decisions = std::move(fcdec);
    }
    if (!phase.drop_tail_after.empty()) {
        auto [s2, w2] = drop_tail_layers(cur_spec, theta_c, phase.drop_tail_after);
        cur_spec = std::move(s2);
        theta_c = std::move(w2);
    }
    rec.post_prune_metric = evaluate(cur_spec, theta_c, data.val);

    TrainOptions retrain;
    retrain.epochs = phase.retrain_epochs >= 0 ? phase.retrain_epochs : cfg.epochs;
    retrain.lr = cfg.lr;
    retrain.lr_decay = cfg.lr_decay;
    retrain.momentum = cfg.momentum;
    retrain.batch_size = cfg.batch_size;
    retrain.seed = cfg.seed + 7777;  // decorrelate the retrain shuffle
    WeightSet final_w = train(cur_spec, theta_c, data.train, retrain).weights;
    final_w.tag = WeightTag::theta;

    rec.post_retrain_metric = evaluate(cur_spec, final_w, data.val);
    rec.params_after = count_params(cur_spec, true).total;
    rec.flops_after = count_flops(cur_spec).total;
    rec.filters_after = filter_counts(cur_spec);
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    res.spec = std::move(cur_spec);
    res.weights = std::move(final_w);
    return res;
}

PlanResult run_plan(const NetworkSpec& spec, const WeightSet& weights, const Dataset& data,
                    const PhasePlan& plan) {
    PlanResult res;
    res.spec = spec;
    res.weights = weights;
    res.log.spec_original = serialize_spec(spec);
    res.log.baseline_metric = evaluate(spec, weights, data.val);
    for (const auto& phase : plan.phases) {
        PhaseResult pr = run_phase(res.spec, res.weights, data, phase);
        res.spec = std::move(pr.spec);
        res.weights = std::move(pr.weights);
        res.log.phases.push_back(std::move(pr.record));
    }
    res.log.spec_final = serialize_spec(res.spec);
    res.log.final_metric = evaluate(res.spec, res.weights, data.val);
    return res;
}

WeightSet train_baseline(const NetworkSpec& spec, const Dataset& data, int epochs,
                         std::uint64_t seed, float lr, float lr_decay, int batch_size) {
    WeightSet init = init_weights(spec, seed);
    if (epochs == 0) return init;
    TrainOptions o;
    o.epochs = epochs;
    o.lr = lr;
    o.lr_decay = lr_decay;
    o.batch_size = batch_size;
    o.seed = seed;
    return train(spec, init, data.train, o).weights;
}

// ---- plan file ----

static std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

PhasePlan parse_plan(const std::string& text) {
    PhasePlan plan;
    std::istringstream is(text);
    std::string line;
    PhaseConfig* cur = nullptr;
    int lineno = 0;
    int n_unnamed = 0;
    while (std::getline(is, line)) {
        ++lineno;
        // strip comments and whitespace
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);

        if (line == "phase {") {
            if (cur) throw std::invalid_argument("plan line " + std::to_string(lineno) +
                                                 ": nested phase block");
            plan.phases.emplace_back();
            cur = &plan.phases.back();
            cur->name = "phase" + std::to_string(++n_unnamed);
            continue;
        }
        if (line == "}") {
            if (!cur) throw std::invalid_argument("plan line " + std::to_string(lineno) +
                                                  ": stray '}'");
            cur = nullptr;
            continue;
        }
        auto eq = line.find('=');
        if (!cur || eq == std::string::npos)
            throw std::invalid_argument("plan line " + std::to_string(lineno) + ": expected "
                                        "'key = value' inside a phase block, got '" + line + "'");
        std::string key = line.substr(0, line.find_last_not_of(" \t", eq - 1) + 1);
        auto vb = line.find_first_not_of(" \t", eq + 1);
        std::string val = vb == std::string::npos ? "" : line.substr(vb);

        if (key == "name") cur->name = val;
        else if (key == "layers") cur->sparsity.layer_set = split_csv_list(val);
        else if (key == "alpha") cur->sparsity.alpha = std::stof(val);
        else if (key == "alpha_grid") {
            for (const auto& a : split_csv_list(val)) cur->alpha_grid.push_back(std::stof(a));
        } else if (key == "eps1") cur->sparsity.eps1 = std::stof(val);
        else if (key == "eps2") cur->sparsity.eps2 = std::stof(val);
        else if (key == "epochs") cur->sparsity.epochs = std::stoi(val);
        else if (key == "lr") cur->sparsity.lr = std::stof(val);
        else if (key == "lr_decay") cur->sparsity.lr_decay = std::stof(val);
        else if (key == "momentum") cur->sparsity.momentum = std::stof(val);
        else if (key == "batch_size") cur->sparsity.batch_size = std::stoi(val);
        else if (key == "seed") cur->sparsity.seed = std::stoull(val);
        else if (key == "retrain_epochs") cur->retrain_epochs = std::stoi(val);
        else if (key == "s_f") cur->thresholds.s_f = std::stof(val);
        else if (key == "s_f_prime") cur->thresholds.s_f_prime = std::stof(val);
        else if (key == "s_g") cur->thresholds.s_g = std::stof(val);
        else if (key == "fc_prune") cur->fc_prune_layers = split_csv_list(val);
        else if (key == "drop_tail_after") cur->drop_tail_after = val;
        else if (key == "snapshot_selection") cur->snapshot_selection = (val == "true");
        else if (key == "layerwise_comparison") cur->layerwise_comparison = (val == "true");
        else
            throw std::invalid_argument("plan line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
    }
    if (cur) throw std::invalid_argument("plan: unterminated phase block");
    for (const auto& p : plan.phases) p.thresholds.validate();
    return plan;
}

PhasePlan load_plan(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read plan " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_plan(ss.str());
}

}  // namespace mlpk
