#include "mlpk/io.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <zlib.h>
#include <json.hpp>

#include "mlpk/pipeline.hpp"
#include "mlpk/rng.hpp"

namespace mlpk {

namespace {

constexpr char kMagic[4] = {'M', 'L', 'P', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
    buf.push_back(static_cast<char>((v >> 16) & 0xff));
    buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::string& buf, std::size_t& off) {
    if (off + 4 > buf.size()) throw std::runtime_error("checkpoint truncated");
    std::uint32_t v = static_cast<std::uint8_t>(buf[off]) |
                      (static_cast<std::uint8_t>(buf[off + 1]) << 8) |
                      (static_cast<std::uint8_t>(buf[off + 2]) << 16) |
                      (static_cast<std::uint8_t>(buf[off + 3]) << 24);
    off += 4;
    return v;
}

void put_tensor_record(std::string& buf, const std::string& name, const Tensor& t) {
    put_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf.append(name);
    put_u32(buf, 1);  // dtype f32
    put_u32(buf, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(buf, static_cast<std::uint32_t>(d));
    static_assert(sizeof(float) == 4);
    // floats stored little-endian; all supported targets are LE
    buf.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * 4);
}

}  // namespace

void save_checkpoint(const std::string& path, const NetworkSpec& spec, const WeightSet& weights) {
    std::string buf(kMagic, 4);
    put_u32(buf, kVersion);
    put_u32(buf, static_cast<std::uint32_t>(weights.tag));
    std::string spec_text = serialize_spec(spec);
    put_u32(buf, static_cast<std::uint32_t>(spec_text.size()));
    buf.append(spec_text);
    put_u32(buf, static_cast<std::uint32_t>(weights.layers.size() * 2));
    for (const auto& [name, lw] : weights.layers) {
        put_tensor_record(buf, name + "/weight", lw.weight);
        put_tensor_record(buf, name + "/bias", lw.bias);
    }
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
    put_u32(buf, crc);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write checkpoint " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("short write to " + path);
}

std::pair<NetworkSpec, WeightSet> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read checkpoint " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    std::string buf = ss.str();
    if (buf.size() < 16 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw std::runtime_error("checkpoint " + path + ": bad magic");

    std::size_t crc_off = buf.size() - 4;
    std::size_t off = crc_off;
    std::uint32_t stored_crc = get_u32(buf, off);
    std::uint32_t actual_crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(crc_off)));
    if (stored_crc != actual_crc)
        throw std::runtime_error("checkpoint " + path + ": CRC mismatch at byte offset " +
                                 std::to_string(crc_off) + " (stored " +
                                 std::to_string(stored_crc) + ", computed " +
                                 std::to_string(actual_crc) + ")");

    off = 4;
    std::uint32_t version = get_u32(buf, off);
    if (version != kVersion)
        throw std::runtime_error("checkpoint " + path + ": unsupported version " +
                                 std::to_string(version));
    WeightSet ws;
    ws.tag = static_cast<WeightTag>(get_u32(buf, off));
    std::uint32_t spec_len = get_u32(buf, off);
    if (off + spec_len > crc_off) throw std::runtime_error("checkpoint truncated");
    NetworkSpec spec = parse_spec(buf.substr(off, spec_len));
    off += spec_len;

    std::uint32_t nrec = get_u32(buf, off);
    for (std::uint32_t r = 0; r < nrec; ++r) {
        std::uint32_t nlen = get_u32(buf, off);
        if (off + nlen > crc_off) throw std::runtime_error("checkpoint truncated");
        std::string name = buf.substr(off, nlen);
        off += nlen;
        std::uint32_t dtype = get_u32(buf, off);
        if (dtype != 1)
            throw std::runtime_error("checkpoint " + path + ": unsupported dtype tag " +
                                     std::to_string(dtype));
        std::uint32_t rank = get_u32(buf, off);
        std::vector<int> shape(rank);
        for (auto& d : shape) d = static_cast<int>(get_u32(buf, off));
        Tensor t(shape);
        std::size_t bytes = t.numel() * 4;
        if (off + bytes > crc_off) throw std::runtime_error("checkpoint truncated");
        std::memcpy(t.data.data(), buf.data() + off, bytes);
        off += bytes;

        auto slash = name.rfind('/');
        if (slash == std::string::npos)
            throw std::runtime_error("checkpoint record '" + name + "': bad name");
        std::string layer = name.substr(0, slash), part = name.substr(slash + 1);
        if (part == "weight")
            ws.layers[layer].weight = std::move(t);
        else if (part == "bias")
            ws.layers[layer].bias = std::move(t);
        else
            throw std::runtime_error("checkpoint record '" + name + "': bad suffix");
    }
    return {std::move(spec), std::move(ws)};
}

// ---- CIFAR-10 ----

static DataSplit read_cifar_files(const std::vector<std::string>& paths) {
    constexpr int kRecord = 3073;  // 1 label byte + 3*1024 channel-planar pixels
    DataSplit split;
    std::vector<float> pixels;
    for (const auto& path : paths) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot read CIFAR batch " + path);
        f.seekg(0, std::ios::end);
        std::streamoff sz = f.tellg();
        if (sz % kRecord != 0)
            throw std::runtime_error("CIFAR batch " + path + ": size " + std::to_string(sz) +
                                     " is not a multiple of 3073");
        f.seekg(0);
        std::vector<unsigned char> rec(kRecord);
        for (std::streamoff r = 0; r < sz / kRecord; ++r) {
            f.read(reinterpret_cast<char*>(rec.data()), kRecord);
            split.labels.push_back(rec[0]);
            for (int i = 1; i < kRecord; ++i)
                pixels.push_back(static_cast<float>(rec[i]) / 255.0f);
        }
    }
    int n = static_cast<int>(split.labels.size());
    split.images = Tensor({n, 3, 32, 32}, std::move(pixels));
    return split;
}

Dataset load_cifar10(const std::string& dir, bool normalize, Cifar10Normalization* norm_out) {
    namespace fs = std::filesystem;
    auto p = [&](const std::string& name) { return (fs::path(dir) / name).string(); };
    Dataset d;
    d.n_classes = 10;
    d.train = read_cifar_files(
        {p("data_batch_1.bin"), p("data_batch_2.bin"), p("data_batch_3.bin"),
         p("data_batch_4.bin")});
    d.val = read_cifar_files({p("data_batch_5.bin")});
    d.test = read_cifar_files({p("test_batch.bin")});

    Cifar10Normalization norm;
    if (normalize) {
        const std::size_t plane = 32 * 32;
        const int n = d.train.size();
        for (int c = 0; c < 3; ++c) {
            double sum = 0, sumsq = 0;
            for (int i = 0; i < n; ++i) {
                const float* base = &d.train.images.data[(static_cast<std::size_t>(i) * 3 + c) * plane];
                for (std::size_t j = 0; j < plane; ++j) {
                    sum += base[j];
                    sumsq += static_cast<double>(base[j]) * base[j];
                }
            }
            double count = static_cast<double>(n) * plane;
            double mean = sum / count;
            double var = sumsq / count - mean * mean;
            norm.mean[c] = static_cast<float>(mean);
            norm.stddev[c] = static_cast<float>(var > 0 ? std::sqrt(var) : 1.0);
        }
        for (DataSplit* s : {&d.train, &d.val, &d.test}) {
            for (int i = 0; i < s->size(); ++i)
                for (int c = 0; c < 3; ++c) {
                    float* base = &s->images.data[(static_cast<std::size_t>(i) * 3 + c) * plane];
                    for (std::size_t j = 0; j < plane; ++j)
                        base[j] = (base[j] - norm.mean[c]) / norm.stddev[c];
                }
        }
    }
    if (norm_out) *norm_out = norm;
    return d;
}

// ---- synthetic dataset ----

Dataset synth_dataset(std::uint64_t seed, int n_classes, int n_per_class, int size) {
    if (size < 8) throw std::invalid_argument("synth_dataset: size must be >= 8");
    if (n_classes < 2 || n_per_class < 1)
        throw std::invalid_argument("synth_dataset: need n_classes >= 2, n_per_class >= 1");
    const std::size_t per = static_cast<std::size_t>(3) * size * size;

    Rng template_rng(seed + 1000);
    std::vector<std::vector<float>> templates(n_classes, std::vector<float>(per));
    for (auto& t : templates)
        for (auto& v : t) v = static_cast<float>(template_rng.normal());

    auto make_split = [&](int count_per_class, std::uint64_t s) {
        Rng rng(s);
        DataSplit split;
        const int n = count_per_class * n_classes;
        split.images = Tensor({n, 3, size, size});
        split.labels.resize(n);
        // class-interleaved so any contiguous slice is label-balanced
        for (int e = 0; e < count_per_class; ++e)
            for (int c = 0; c < n_classes; ++c) {
                int i = e * n_classes + c;
                split.labels[i] = c;
                float* dst = &split.images.data[i * per];
                for (std::size_t j = 0; j < per; ++j)
                    dst[j] = templates[c][j] + 0.25f * static_cast<float>(rng.normal());
            }
        return split;
    };

    Dataset d;
    d.n_classes = n_classes;
    int holdout = std::max(1, n_per_class / 4);
    d.train = make_split(n_per_class, seed);
    d.val = make_split(holdout, seed + 1);
    d.test = make_split(holdout, seed + 2);
    return d;
}

// ---- reports ----

void emit_reports(const RunLog& log, const std::string& outdir) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    auto open = [&](const std::string& name) {
        std::ofstream f((fs::path(outdir) / name).string());
        if (!f) throw std::runtime_error("cannot write report file " + name + " in " + outdir);
        return f;
    };

    {
        auto f = open("nonzeros.csv");
        f << "phase,layer,nonzero_before,nonzero_after\n";
        for (const auto& ph : log.phases)
            for (const auto& [layer, before] : ph.nonzero_before)
                f << ph.phase << "," << layer << "," << before << ","
                  << ph.nonzero_after.at(layer) << "\n";
    }

    for (const auto& ph : log.phases) {
        for (const auto& [layer, h] : ph.histograms) {
            auto f = open("hist_" + layer + ".csv");
            f << "bin_lo,bin_hi,count_pre,count_post\n";
            const int bins = static_cast<int>(h.pre.size());
            for (int b = 0; b < bins; ++b) {
                float w = (h.hi - h.lo) / bins;
                f << (h.lo + b * w) << "," << (h.lo + (b + 1) * w) << "," << h.pre[b] << ","
                  << h.post[b] << "\n";
            }
        }
    }

    {
        NetworkSpec orig = parse_spec(log.spec_original);
        NetworkSpec fin = parse_spec(log.spec_final);
        auto po = count_params(orig, true), pf = count_params(fin, true);
        auto fo = count_flops(orig), ff = count_flops(fin);
        auto f = open("summary.csv");
        f << "layer,kind,filters_original,filters_pruned,params_original,params_pruned,"
             "flops_original,flops_pruned\n";
        for (const auto& l : orig.layers) {
            if (!l.weighted()) continue;
            bool alive = fin.has_layer(l.name);
            f << l.name << "," << layer_kind_name(l.kind) << "," << l.out_channels << ","
              << (alive ? fin.layer(l.name).out_channels : 0) << "," << po.per_layer.at(l.name)
              << "," << (alive ? pf.per_layer.at(l.name) : 0) << "," << fo.per_layer.at(l.name)
              << "," << (alive ? ff.per_layer.at(l.name) : 0) << "\n";
        }
        f << "TOTAL,,,," << po.total << "," << pf.total << "," << fo.total << "," << ff.total
          << "\n";
        f << "MODEL_SIZE_MB,,,," << model_size_bytes(orig) / 1e6 << ","
          << model_size_bytes(fin) / 1e6 << ",,\n";
        f << "VAL_METRIC,,,," << log.baseline_metric << "," << log.final_metric << ",,\n";
    }
}

// ---- run log persistence ----

using nlohmann::json;

static json histogram_to_json(const WeightHistogram& h) {
    return json{{"lo", h.lo}, {"hi", h.hi}, {"pre", h.pre}, {"post", h.post}};
}

static WeightHistogram histogram_from_json(const json& j) {
    WeightHistogram h;
    h.lo = j.at("lo");
    h.hi = j.at("hi");
    h.pre = j.at("pre").get<std::vector<long long>>();
    h.post = j.at("post").get<std::vector<long long>>();
    return h;
}

void save_runlog(const std::string& path, const RunLog& log) {
    json j;
    j["spec_original"] = log.spec_original;
    j["spec_final"] = log.spec_final;
    j["baseline_metric"] = log.baseline_metric;
    j["final_metric"] = log.final_metric;
    j["phases"] = json::array();
    for (const auto& ph : log.phases) {
        json p;
        p["phase"] = ph.phase;
        p["seed"] = ph.seed;
        p["pre_metric"] = ph.pre_metric;
        p["post_l1_metric"] = ph.post_l1_metric;
        p["post_th_metric"] = ph.post_th_metric;
        p["post_prune_metric"] = ph.post_prune_metric;
        p["post_retrain_metric"] = ph.post_retrain_metric;
        p["alpha"] = ph.alpha;
        p["threshold"] = ph.threshold;
        p["sigma"] = ph.sigma;
        p["threshold_warning"] = ph.threshold_warning;
        p["nonzero_before"] = ph.nonzero_before;
        p["nonzero_after"] = ph.nonzero_after;
        p["filters_before"] = ph.filters_before;
        p["filters_after"] = ph.filters_after;
        p["params_before"] = ph.params_before;
        p["params_after"] = ph.params_after;
        p["flops_before"] = ph.flops_before;
        p["flops_after"] = ph.flops_after;
        p["wall_seconds"] = ph.wall_seconds;
        p["layerwise_t"] = ph.layerwise_t;
        json hists = json::object();
        for (const auto& [layer, h] : ph.histograms) hists[layer] = histogram_to_json(h);
        p["histograms"] = hists;
        json rows = json::array();
        for (const auto& r : ph.threshold_rows)
            rows.push_back({{"t", r.t}, {"nonzero", r.nonzero}, {"val_metric", r.val_metric}});
        p["threshold_rows"] = rows;
        json decs = json::array();
        for (const auto& d : ph.decisions) {
            json fd = json::array();
            for (const auto& x : d.filters)
                fd.push_back({{"index", x.index},
                              {"reason", prune_reason_name(x.reason)},
                              {"splevel_f", x.splevel_f},
                              {"splevel_g", x.splevel_g}});
            decs.push_back({{"layer", d.layer}, {"filters", fd}});
        }
        p["decisions"] = decs;
        json fcd = json::array();
        for (const auto& d : ph.fc_decisions)
            fcd.push_back({{"layer", d.layer}, {"neurons", d.neurons}, {"reasons", d.reasons}});
        p["fc_decisions"] = fcd;
        j["phases"].push_back(std::move(p));
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write runlog " + path);
    f << j.dump(2) << "\n";
}

RunLog load_runlog(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read runlog " + path);
    json j = json::parse(f);
    RunLog log;
    log.spec_original = j.at("spec_original");
    log.spec_final = j.at("spec_final");
    log.baseline_metric = j.at("baseline_metric");
    log.final_metric = j.at("final_metric");
    for (const auto& p : j.at("phases")) {
        PhaseRecord ph;
        ph.phase = p.at("phase");
        ph.seed = p.at("seed");
        ph.pre_metric = p.at("pre_metric");
        ph.post_l1_metric = p.at("post_l1_metric");
        ph.post_th_metric = p.at("post_th_metric");
        ph.post_prune_metric = p.at("post_prune_metric");
        ph.post_retrain_metric = p.at("post_retrain_metric");
        ph.alpha = p.at("alpha");
        ph.threshold = p.at("threshold");
        ph.sigma = p.at("sigma");
        ph.threshold_warning = p.at("threshold_warning");
        ph.nonzero_before = p.at("nonzero_before").get<std::map<std::string, long long>>();
        ph.nonzero_after = p.at("nonzero_after").get<std::map<std::string, long long>>();
        ph.filters_before = p.at("filters_before").get<std::map<std::string, int>>();
        ph.filters_after = p.at("filters_after").get<std::map<std::string, int>>();
        ph.params_before = p.at("params_before");
        ph.params_after = p.at("params_after");
        ph.flops_before = p.at("flops_before");
        ph.flops_after = p.at("flops_after");
        ph.wall_seconds = p.at("wall_seconds");
        ph.layerwise_t = p.at("layerwise_t").get<std::map<std::string, float>>();
        for (auto it = p.at("histograms").begin(); it != p.at("histograms").end(); ++it)
            ph.histograms[it.key()] = histogram_from_json(it.value());
        for (const auto& r : p.at("threshold_rows"))
            ph.threshold_rows.push_back(
                {r.at("t"), r.at("nonzero"), r.at("val_metric")});
        for (const auto& d : p.at("decisions")) {
            PruneDecision pd;
            pd.layer = d.at("layer");
            for (const auto& x : d.at("filters")) {
                FilterDecision fd;
                fd.index = x.at("index");
                std::string reason = x.at("reason");
                fd.reason = reason == "cond1" ? PruneReason::cond1
                            : reason == "cond2" ? PruneReason::cond2
                                                : PruneReason::random_baseline;
                fd.splevel_f = x.at("splevel_f");
                fd.splevel_g = x.at("splevel_g");
                pd.filters.push_back(fd);
            }
            ph.decisions.push_back(std::move(pd));
        }
        for (const auto& d : p.at("fc_decisions")) {
            FcNeuronDecision fd;
            fd.layer = d.at("layer");
            fd.neurons = d.at("neurons").get<std::vector<int>>();
            fd.reasons = d.at("reasons").get<std::vector<std::string>>();
            ph.fc_decisions.push_back(std::move(fd));
        }
        log.phases.push_back(std::move(ph));
    }
    return log;
}

}  // namespace mlpk
