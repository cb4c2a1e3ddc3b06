// mlpk: multi-layer pruning toolkit command line.
//
// Subcommands: train, compress, baseline-rrf, inspect, report.
// Exit codes: 0 success, 2 argument error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mlpk/io.hpp"
#include "mlpk/model_zoo.hpp"
#include "mlpk/pipeline.hpp"
#include "mlpk/prune.hpp"
#include "mlpk/train.hpp"

namespace fs = std::filesystem;
using namespace mlpk;

namespace {

/// --data accepts "synth" / "synth:<seed>" or a CIFAR-10 directory.
Dataset load_data(const std::string& src, std::uint64_t default_seed) {
    if (src == "synth") return synth_dataset(default_seed, 10, 256, 16);
    if (src.rfind("synth:", 0) == 0)
        return synth_dataset(std::stoull(src.substr(6)), 10, 256, 16);
    return load_cifar10(src, true);
}

NetworkSpec load_spec_arg(const std::string& src) {
    if (src == "desk") return desk_net();
    std::ifstream f(src);
    if (!f) throw std::runtime_error("cannot read spec " + src);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_spec(ss.str());
}

void print_final_line(const RunLog& log) {
    long long params = count_params(parse_spec(log.spec_final), true).total;
    std::printf("compression=%.2fx params=%lld val_acc=%.2f\n", log.compression_factor(),
                params, log.final_metric);
}

int cmd_train(const std::string& data_src, const std::string& spec_src, int epochs,
              std::uint64_t seed, float lr, const std::string& out) {
    NetworkSpec spec = load_spec_arg(spec_src);
    Dataset data = load_data(data_src, seed);
    std::cerr << "seed=" << seed << "\n";
    WeightSet w = train_baseline(spec, data, epochs, seed, lr);
    fs::create_directories(out);
    save_checkpoint((fs::path(out) / "model.ckpt").string(), spec, w);
    std::printf("val_acc=%.2f\n", evaluate(spec, w, data.val));
    return 0;
}

int cmd_compress(const std::string& plan_path, const std::string& ckpt, const std::string& data_src,
                 std::uint64_t seed, const std::string& out) {
    PhasePlan plan = load_plan(plan_path);
    auto [spec, weights] = load_checkpoint(ckpt);
    Dataset data = load_data(data_src, seed);
    std::cerr << "seed=" << seed << "\n";
    fs::create_directories(out);

    PlanResult res = run_plan(spec, weights, data, plan);
    save_checkpoint((fs::path(out) / "final.ckpt").string(), res.spec, res.weights);
    save_runlog((fs::path(out) / "runlog.json").string(), res.log);
    for (std::size_t i = 0; i < res.log.phases.size(); ++i) {
        const auto& ph = res.log.phases[i];
        write_decisions((fs::path(out) / ("decisions_" + ph.phase + ".txt")).string(),
                        ph.decisions);
        write_threshold_csv((fs::path(out) / ("threshold_" + ph.phase + ".csv")).string(),
                            ph.threshold_rows);
    }
    emit_reports(res.log, out);
    print_final_line(res.log);
    return 0;
}

int cmd_baseline_rrf(double fraction, const std::string& ckpt, const std::string& data_src,
                     std::uint64_t seed, int retrain_epochs, float lr, const std::string& out) {
    auto [spec, weights] = load_checkpoint(ckpt);
    Dataset data = load_data(data_src, seed);
    std::cerr << "seed=" << seed << "\n";

    std::vector<std::string> conv_layers;
    for (const auto& l : spec.layers)
        if (l.kind == LayerKind::conv) conv_layers.push_back(l.name);
    auto [pruned_spec, pruned_w] = random_prune(spec, weights, fraction, conv_layers, seed);

    TrainOptions o;
    o.epochs = retrain_epochs;
    o.lr = lr;
    o.seed = seed;
    WeightSet final_w =
        retrain_epochs > 0 ? train(pruned_spec, pruned_w, data.train, o).weights : pruned_w;

    if (!out.empty()) {
        fs::create_directories(out);
        save_checkpoint((fs::path(out) / "rrf.ckpt").string(), pruned_spec, final_w);
    }
    long long before = count_params(spec, true).total;
    long long after = count_params(pruned_spec, true).total;
    std::printf("compression=%.2fx params=%lld val_acc=%.2f\n",
                static_cast<double>(before) / after, after,
                evaluate(pruned_spec, final_w, data.val));
    return 0;
}

int cmd_inspect(const std::string& ckpt) {
    auto [spec, weights] = load_checkpoint(ckpt);
    auto params = count_params(spec, true);
    auto flops = count_flops(spec);
    std::printf("%-12s %-8s %10s %14s %16s\n", "layer", "kind", "filters", "params", "flops");
    for (const auto& l : spec.layers) {
        if (!l.weighted()) continue;
        std::printf("%-12s %-8s %10d %14lld %16lld\n", l.name.c_str(),
                    layer_kind_name(l.kind), l.out_channels, params.per_layer.at(l.name),
                    flops.per_layer.at(l.name));
    }
    std::printf("total params=%lld flops=%lld size_mb=%.2f\n", params.total, flops.total,
                model_size_bytes(spec) / 1e6);
    return 0;
}

int cmd_report(const std::string& runlog_path, const std::string& out) {
    RunLog log = load_runlog(runlog_path);
    emit_reports(log, out);
    std::printf("reports written to %s\n", out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mlpk: structured multi-layer filter pruning toolkit"};
    app.require_subcommand(1);

    std::string data_src, spec_src = "desk", plan_path, ckpt, out = "out", runlog_path;
    int epochs = 10, retrain_epochs = 5;
    std::uint64_t seed = 42;
    float lr = 0.01f;
    double fraction = 0.5;

    auto* train_cmd = app.add_subcommand("train", "train a baseline model");
    train_cmd->add_option("--data", data_src, "'synth', 'synth:<seed>' or CIFAR-10 dir")
        ->required();
    train_cmd->add_option("--spec", spec_src, "'desk' or path to a spec file");
    train_cmd->add_option("--epochs", epochs);
    train_cmd->add_option("--seed", seed);
    train_cmd->add_option("--lr", lr);
    train_cmd->add_option("--out", out);

    auto* compress_cmd = app.add_subcommand("compress", "run a pruning plan");
    compress_cmd->add_option("--plan", plan_path)->required();
    compress_cmd->add_option("--checkpoint", ckpt)->required();
    compress_cmd->add_option("--data", data_src)->required();
    compress_cmd->add_option("--seed", seed);
    compress_cmd->add_option("--out", out);

    auto* rrf_cmd = app.add_subcommand("baseline-rrf", "random filter removal baseline");
    rrf_cmd->add_option("--fraction", fraction)->required();
    rrf_cmd->add_option("--checkpoint", ckpt)->required();
    rrf_cmd->add_option("--data", data_src)->required();
    rrf_cmd->add_option("--seed", seed);
    rrf_cmd->add_option("--retrain-epochs", retrain_epochs);
    rrf_cmd->add_option("--lr", lr);
    rrf_cmd->add_option("--out", out);

    auto* inspect_cmd = app.add_subcommand("inspect", "per-layer summary of a checkpoint");
    inspect_cmd->add_option("--checkpoint", ckpt)->required();

    auto* report_cmd = app.add_subcommand("report", "re-emit CSV reports from a run log");
    report_cmd->add_option("--runlog", runlog_path)->required();
    report_cmd->add_option("--out", out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*train_cmd) return cmd_train(data_src, spec_src, epochs, seed, lr, out);
        if (*compress_cmd) return cmd_compress(plan_path, ckpt, data_src, seed, out);
        if (*rrf_cmd)
            return cmd_baseline_rrf(fraction, ckpt, data_src, seed, retrain_epochs, lr, out);
        if (*inspect_cmd) return cmd_inspect(ckpt);
        if (*report_cmd) return cmd_report(runlog_path, out);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
