#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mlpk/prune.hpp"
#include "mlpk/sparsify.hpp"
#include "test_util.hpp"

using namespace mlpk;

namespace {

/// Pure conv chain: conv_a(4) -> conv_b(5) -> conv_c(3) -> head.
NetworkSpec chain_net() {
    NetworkSpec s;
    s.input_shape = {2, 6, 6};
    s.layers.push_back({"conv_a", LayerKind::conv, 4, 3, 1, 1, ""});
    s.layers.push_back({"relu_a", LayerKind::relu, 0, 0, 1, 0, "conv_a"});
    s.layers.push_back({"conv_b", LayerKind::conv, 5, 3, 1, 1, "relu_a"});
    s.layers.push_back({"relu_b", LayerKind::relu, 0, 0, 1, 0, "conv_b"});
    s.layers.push_back({"conv_c", LayerKind::conv, 3, 3, 1, 1, "relu_b"});
    s.layers.push_back({"relu_c", LayerKind::relu, 0, 0, 1, 0, "conv_c"});
    s.layers.push_back({"flat", LayerKind::flatten, 0, 0, 1, 0, "relu_c"});
    s.layers.push_back({"head", LayerKind::head, 3, 0, 1, 0, "flat"});
    s.validate();
    return s;
}

/// fc chain: flatten(32) -> fc1(6) -> fc2(5) -> head(3).
NetworkSpec fc_net() {
    NetworkSpec s;
    s.input_shape = {2, 4, 4};
    s.layers.push_back({"flat", LayerKind::flatten, 0, 0, 1, 0, ""});
    s.layers.push_back({"fc1", LayerKind::fc, 6, 0, 1, 0, "flat"});
    s.layers.push_back({"relu1", LayerKind::relu, 0, 0, 1, 0, "fc1"});
    s.layers.push_back({"fc2", LayerKind::fc, 5, 0, 1, 0, "relu1"});
    s.layers.push_back({"relu2", LayerKind::relu, 0, 0, 1, 0, "fc2"});
    s.layers.push_back({"head", LayerKind::head, 3, 0, 1, 0, "relu2"});
    s.validate();
    return s;
}

/// Random weights with whole k-rows zeroed with probability p.
WeightSet sparse_weights(const NetworkSpec& spec, Rng& rng, double p) {
    WeightSet ws = init_weights(spec, rng.below(1u << 30));
    for (auto& [name, lw] : ws.layers) {
        Tensor& w = lw.weight;
        if (w.rank() != 4) continue;
        const int k = w.dim(3);
        for (std::size_t r = 0; r < w.numel() / k; ++r)
            if (rng.uniform() < p)
                for (int j = 0; j < k; ++j) w.data[r * k + j] = 0.0f;
    }
    ws.tag = WeightTag::theta_l1_th;
    return ws;
}

double brute_sparsity(const Tensor& slice) {
    int zero_rows = 0, rows = 0;
    for (int c = 0; c < slice.dim(0); ++c)
        for (int r = 0; r < slice.dim(1); ++r) {
            ++rows;
            bool z = true;
            for (int j = 0; j < slice.dim(2); ++j)
                if (slice.data[(static_cast<std::size_t>(c) * slice.dim(1) + r) * slice.dim(2) +
                               j] != 0.0f)
                    z = false;
            if (z) ++zero_rows;
        }
    return static_cast<double>(zero_rows) / rows;
}

Tensor oracle_filter(const Tensor& w, int i) {
    std::size_t per = w.numel() / w.dim(0);
    Tensor out({w.dim(1), w.dim(2), w.dim(3)});
    std::copy(w.data.begin() + i * per, w.data.begin() + (i + 1) * per, out.data.begin());
    return out;
}

Tensor oracle_input_slice(const Tensor& w, int i) {
    Tensor out({w.dim(0), w.dim(2), w.dim(3)});
    std::size_t kk = static_cast<std::size_t>(w.dim(2)) * w.dim(3);
    for (int o = 0; o < w.dim(0); ++o)
        std::copy(w.data.begin() + (static_cast<std::size_t>(o) * w.dim(1) + i) * kk,
                  w.data.begin() + (static_cast<std::size_t>(o) * w.dim(1) + i + 1) * kk,
                  out.data.begin() + o * kk);
    return out;
}

Tensor oracle_drop_dim0(const Tensor& t, const std::vector<int>& idx) {
    std::vector<char> drop(t.dim(0), 0);
    for (int i : idx) drop[i] = 1;
    std::size_t per = t.numel() / t.dim(0);
    std::vector<int> shape = t.shape;
    shape[0] -= static_cast<int>(idx.size());
    Tensor out(shape);
    std::size_t o = 0;
    for (int i = 0; i < t.dim(0); ++i)
        if (!drop[i])
            std::copy(t.data.begin() + i * per, t.data.begin() + (i + 1) * per,
                      out.data.begin() + (o++) * per);
    return out;
}

Tensor oracle_drop_dim1(const Tensor& t, const std::vector<int>& idx) {
    std::vector<char> drop(t.dim(1), 0);
    for (int i : idx) drop[i] = 1;
    std::size_t inner = static_cast<std::size_t>(t.dim(2)) * t.dim(3);
    std::vector<int> shape = t.shape;
    shape[1] -= static_cast<int>(idx.size());
    Tensor out(shape);
    std::size_t o = 0;
    for (int n = 0; n < t.dim(0); ++n)
        for (int c = 0; c < t.dim(1); ++c)
            if (!drop[c])
                std::copy(t.data.begin() + (static_cast<std::size_t>(n) * t.dim(1) + c) * inner,
                          t.data.begin() + (static_cast<std::size_t>(n) * t.dim(1) + c + 1) * inner,
                          out.data.begin() + (o++) * inner);
    return out;
}

struct OracleDecision {
    std::string layer;
    std::vector<int> idx;
    std::vector<PruneReason> reasons;
};

/// Line-by-line reimplementation of the selection loop for the chain
/// net, independent of the library surgery helpers.
std::vector<OracleDecision> oracle_select(const WeightSet& theta_th,
                                          const SelectionThresholds& th, bool progressive,
                                          bool keep_least_sparse) {
    const std::vector<std::string> order = {"conv_a", "conv_b", "conv_c"};
    std::map<std::string, Tensor> w;
    for (const auto& n : order) w.emplace(n, theta_th.at(n).weight);
    std::vector<OracleDecision> out;
    for (std::size_t li = 0; li < order.size(); ++li) {
        const std::string& name = order[li];
        const std::string succ = li + 1 < order.size() ? order[li + 1] : "";
        OracleDecision d;
        d.layer = name;
        std::vector<double> spl_fs;
        for (int i = 0; i < w.at(name).dim(0); ++i) {
            double f = brute_sparsity(oracle_filter(w.at(name), i));
            spl_fs.push_back(f);
            if (f >= th.s_f) {
                d.idx.push_back(i);
                d.reasons.push_back(PruneReason::cond1);
            } else if (!succ.empty() && f >= th.s_f_prime &&
                       brute_sparsity(oracle_input_slice(w.at(succ), i)) >= th.s_g) {
                d.idx.push_back(i);
                d.reasons.push_back(PruneReason::cond2);
            }
        }
        if (keep_least_sparse && static_cast<int>(d.idx.size()) == w.at(name).dim(0) &&
            !d.idx.empty()) {
            std::size_t keep = 0;
            for (std::size_t j = 1; j < d.idx.size(); ++j)
                if (spl_fs[d.idx[j]] < spl_fs[d.idx[keep]]) keep = j;
            d.idx.erase(d.idx.begin() + keep);
            d.reasons.erase(d.reasons.begin() + keep);
        }
        if (d.idx.empty()) continue;
        if (progressive) {
            w.at(name) = oracle_drop_dim0(w.at(name), d.idx);
            if (!succ.empty()) w.at(succ) = oracle_drop_dim1(w.at(succ), d.idx);
        }
        out.push_back(std::move(d));
    }
    return out;
}

void check_decisions_match(const std::vector<PruneDecision>& got,
                           const std::vector<OracleDecision>& want) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].layer == want[i].layer);
        REQUIRE(got[i].filters.size() == want[i].idx.size());
        for (std::size_t j = 0; j < want[i].idx.size(); ++j) {
            CHECK(got[i].filters[j].index == want[i].idx[j]);
            CHECK(got[i].filters[j].reason == want[i].reasons[j]);
        }
    }
}

}  // namespace

TEST_CASE("sparsity_level: hand examples") {
    Tensor all_zero({2, 3, 3});
    CHECK(sparsity_level(all_zero) == 1.0);
    Tensor none({2, 3, 3});
    for (float& v : none.data) v = 0.5f;
    CHECK(sparsity_level(none) == 0.0);
    // one fully-zero row out of 6, plus a partially-zero row that must not count
    Tensor mixed({2, 3, 3});
    for (float& v : mixed.data) v = 1.0f;
    for (int j = 0; j < 3; ++j) mixed.data[j] = 0.0f;  // row (0,0) fully zero
    mixed.data[3] = 0.0f;                              // row (0,1) partially zero
    CHECK(sparsity_level(mixed) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("sparsity_level matches a brute-force row count on random slices") {
    Rng rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        int c = 1 + static_cast<int>(rng.below(5));
        int k = 1 + static_cast<int>(rng.below(4));
        Tensor slice({c, k, k});
        for (float& v : slice.data)
            v = rng.uniform() < 0.4 ? 0.0f : static_cast<float>(rng.uniform(-1, 1));
        // zero whole rows sometimes so both regimes occur
        for (int ci = 0; ci < c; ++ci)
            for (int r = 0; r < k; ++r)
                if (rng.uniform() < 0.3)
                    for (int j = 0; j < k; ++j) slice.data[(ci * k + r) * k + j] = 0.0f;
        CHECK(sparsity_level(slice) == brute_sparsity(slice));
    }
}

TEST_CASE("sparsity_level rejects non-3d input") {
    CHECK_THROWS_AS(sparsity_level(Tensor({2, 2})), std::invalid_argument);
}

TEST_CASE("selection thresholds validate their ordering") {
    SelectionThresholds t;
    CHECK_NOTHROW(t.validate());
    t.s_f_prime = 0.95f;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
    t = SelectionThresholds{1.2f, 0.85f, 0.95f};
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}

TEST_CASE("select_filters requires a thresholded weight set") {
    NetworkSpec spec = chain_net();
    WeightSet w = init_weights(spec, 1);  // tag: theta
    CHECK_THROWS_AS(select_filters(spec, w, {"conv_a"}, SelectionThresholds{}),
                    std::invalid_argument);
}

TEST_CASE("select_filters agrees with a straight-line oracle, snapshot mode") {
    NetworkSpec spec = chain_net();
    Rng rng(32);
    SelectionThresholds th;
    SelectOptions opts;
    opts.snapshot = true;
    opts.allow_full_layer = true;
    long long total = 0;
    for (int trial = 0; trial < 100; ++trial) {
        double p = 0.4 + 0.55 * rng.uniform();
        WeightSet ws = sparse_weights(spec, rng, p);
        auto got = select_filters(spec, ws, {"conv_a", "conv_b", "conv_c"}, th, opts);
        auto want = oracle_select(ws, th, /*progressive=*/false, /*keep_least_sparse=*/false);
        check_decisions_match(got, want);
        for (const auto& d : got) total += static_cast<long long>(d.filters.size());
    }
    CHECK(total > 50);  // the trials actually exercise selection
}

TEST_CASE("select_filters agrees with the oracle in progressive mode") {
    NetworkSpec spec = chain_net();
    Rng rng(33);
    SelectionThresholds th;
    SelectOptions opts;  // progressive, keep-least-sparse
    long long total = 0;
    for (int trial = 0; trial < 100; ++trial) {
        double p = 0.4 + 0.55 * rng.uniform();
        WeightSet ws = sparse_weights(spec, rng, p);
        auto got = select_filters(spec, ws, {"conv_a", "conv_b", "conv_c"}, th, opts);
        auto want = oracle_select(ws, th, /*progressive=*/true, /*keep_least_sparse=*/true);
        check_decisions_match(got, want);
        for (const auto& d : got) total += static_cast<long long>(d.filters.size());
    }
    CHECK(total > 50);
}

TEST_CASE("pruning a filter whose weights and bias are zero preserves the forward pass") {
    NetworkSpec spec = chain_net();
    WeightSet theta = init_weights(spec, 34);
    // zero out filter 2 of conv_a entirely
    Tensor& w = theta.at("conv_a").weight;
    std::size_t per = w.numel() / w.dim(0);
    for (std::size_t i = 2 * per; i < 3 * per; ++i) w.data[i] = 0.0f;
    theta.at("conv_a").bias[2] = 0.0f;

    PruneDecision d;
    d.layer = "conv_a";
    d.filters.push_back({2, PruneReason::cond1, 1.0, 0.0});
    auto [pspec, pw] = prune_filters(spec, theta, {d});
    CHECK(pspec.layer("conv_a").out_channels == 3);

    Rng rng(35);
    Tensor x = testutil::random_tensor({3, 2, 6, 6}, rng);
    auto before = forward(spec, theta, x);
    auto after = forward(pspec, pw, x);
    for (std::size_t i = 0; i < before.at("head").numel(); ++i)
        CHECK(before.at("head")[i] == doctest::Approx(after.at("head")[i]).epsilon(1e-5));
}

TEST_CASE("pruning a filter nobody consumes (zero G slice) preserves the forward pass") {
    NetworkSpec spec = chain_net();
    WeightSet theta = init_weights(spec, 36);
    // conv_b ignores input channel 1: zero its slice [:,1,:,:]
    Tensor& w = theta.at("conv_b").weight;
    std::size_t kk = static_cast<std::size_t>(w.dim(2)) * w.dim(3);
    for (int o = 0; o < w.dim(0); ++o)
        for (std::size_t j = 0; j < kk; ++j)
            w.data[(static_cast<std::size_t>(o) * w.dim(1) + 1) * kk + j] = 0.0f;

    PruneDecision d;
    d.layer = "conv_a";
    d.filters.push_back({1, PruneReason::cond2, 0.0, 1.0});
    auto [pspec, pw] = prune_filters(spec, theta, {d});

    Rng rng(37);
    Tensor x = testutil::random_tensor({3, 2, 6, 6}, rng);
    auto before = forward(spec, theta, x);
    auto after = forward(pspec, pw, x);
    for (std::size_t i = 0; i < before.at("head").numel(); ++i)
        CHECK(before.at("head")[i] == doctest::Approx(after.at("head")[i]).epsilon(1e-5));
}

TEST_CASE("surviving values come from theta, not the thresholded copy") {
    NetworkSpec spec = chain_net();
    WeightSet theta = init_weights(spec, 38);
    WeightSet theta_th = apply_threshold(theta, {"conv_a", "conv_b", "conv_c"}, 0.05f);
    SelectOptions opts;
    auto decisions = select_filters(spec, theta_th, {"conv_a", "conv_b", "conv_c"},
                                    SelectionThresholds{}, opts);
    auto [pspec, pw] = prune_filters(spec, theta, decisions);
    CHECK(pw.tag == WeightTag::theta_c);
    // conv_a keeps all filters here (random init is dense), so its weights
    // must be bitwise the originals including sub-threshold magnitudes
    CHECK(decisions.empty());
    CHECK(pw.at("conv_a").weight.data == theta.at("conv_a").weight.data);
    bool any_small = false;
    for (float v : pw.at("conv_a").weight.data)
        if (v != 0.0f && std::fabs(v) < 0.05f) any_small = true;
    CHECK(any_small);
}

TEST_CASE("prune_filters: shapes and param counts stay consistent after surgery") {
    NetworkSpec spec = chain_net();
    WeightSet theta = init_weights(spec, 39);
    PruneDecision da;
    da.layer = "conv_a";
    da.filters.push_back({0, PruneReason::cond1, 1.0, 0.0});
    da.filters.push_back({3, PruneReason::cond1, 1.0, 0.0});
    PruneDecision dc;
    dc.layer = "conv_c";
    dc.filters.push_back({1, PruneReason::cond2, 0.9, 1.0});
    auto [pspec, pw] = prune_filters(spec, theta, {da, dc});

    CHECK(pspec.layer("conv_a").out_channels == 2);
    CHECK(pspec.layer("conv_c").out_channels == 2);
    auto ws = weight_shapes(pspec);
    for (const auto& [name, sh] : ws) {
        CHECK(pw.at(name).weight.shape == sh.weight);
        CHECK(pw.at(name).bias.shape == sh.bias);
    }
    // recount: conv_b lost 2 input slices, head lost one 36-column block
    long long expect_delta = 2LL * (2 * 9 + 1)      // conv_a rows + biases
                             + 2LL * 5 * 9          // conv_b input slices
                             + 1LL * (5 * 9 + 1)    // conv_c row + bias
                             + 3LL * 36;            // head columns (6x6 block)
    CHECK(count_params(spec, true).total - count_params(pspec, true).total == expect_delta);
}

TEST_CASE("prune_filters is order-independent across layers") {
    NetworkSpec spec = chain_net();
    WeightSet theta = init_weights(spec, 40);
    PruneDecision da;
    da.layer = "conv_a";
    da.filters.push_back({2, PruneReason::cond1, 1.0, 0.0});
    PruneDecision db;
    db.layer = "conv_b";
    db.filters.push_back({0, PruneReason::cond1, 1.0, 0.0});
    db.filters.push_back({4, PruneReason::cond2, 0.9, 1.0});
    auto [s1, w1] = prune_filters(spec, theta, {da, db});
    auto [s2, w2] = prune_filters(spec, theta, {db, da});
    CHECK(serialize_spec(s1) == serialize_spec(s2));
    for (const auto& [name, lw] : w1.layers) {
        CHECK(lw.weight.data == w2.at(name).weight.data);
        CHECK(lw.bias.data == w2.at(name).bias.data);
    }
}

TEST_CASE("prune_filters refuses to empty a layer") {
    NetworkSpec spec = chain_net();
    WeightSet theta = init_weights(spec, 41);
    PruneDecision d;
    d.layer = "conv_c";
    for (int i = 0; i < 3; ++i) d.filters.push_back({i, PruneReason::cond1, 1.0, 0.0});
    CHECK_THROWS_AS(prune_filters(spec, theta, {d}), std::invalid_argument);
}

TEST_CASE("keep-least-sparse guard leaves exactly one filter when all qualify") {
    NetworkSpec spec = chain_net();
    Rng rng(42);
    WeightSet ws = init_weights(spec, 42);
    // make every conv_c filter fully zero-rowed except leave filter 1 a
    // single nonzero entry so it is the least sparse
    Tensor& w = ws.at("conv_c").weight;
    for (float& v : w.data) v = 0.0f;
    ws.tag = WeightTag::theta_l1_th;
    w.data[w.numel() / 3 + 4] = 0.7f;  // inside filter 1

    SelectOptions opts;  // allow_full_layer=false
    auto d = select_filters(spec, ws, {"conv_c"}, SelectionThresholds{}, opts);
    REQUIRE(d.size() == 1);
    CHECK(d[0].filters.size() == 2);
    CHECK(d[0].indices() == std::vector<int>{0, 2});  // filter 1 survives

    SelectOptions all;
    all.allow_full_layer = true;
    all.snapshot = true;
    auto d2 = select_filters(spec, ws, {"conv_c"}, SelectionThresholds{}, all);
    REQUIRE(d2.size() == 1);
    CHECK(d2[0].filters.size() == 3);
}

TEST_CASE("fc neuron with a fully zero incoming row and zero bias prunes cleanly") {
    NetworkSpec spec = fc_net();
    WeightSet theta = init_weights(spec, 43);
    Tensor& w = theta.at("fc1").weight;
    for (int c = 0; c < w.dim(1); ++c) w.at2(3, c) = 0.0f;
    theta.at("fc1").bias[3] = 0.0f;

    auto [pspec, pw, dec] = prune_fc_neurons(spec, theta, theta, {"fc1"});
    REQUIRE(dec.size() == 1);
    CHECK(dec[0].layer == "fc1");
    CHECK(dec[0].neurons == std::vector<int>{3});
    CHECK(dec[0].reasons == std::vector<std::string>{"zero_in"});
    CHECK(pspec.layer("fc1").out_channels == 5);

    Rng rng(44);
    Tensor x = testutil::random_tensor({3, 2, 4, 4}, rng);
    auto before = forward(spec, theta, x);
    auto after = forward(pspec, pw, x);
    for (std::size_t i = 0; i < before.at("head").numel(); ++i)
        CHECK(before.at("head")[i] == doctest::Approx(after.at("head")[i]).epsilon(1e-5));
}

TEST_CASE("fc neuron whose outgoing column is zero prunes cleanly") {
    NetworkSpec spec = fc_net();
    WeightSet theta = init_weights(spec, 45);
    theta.at("fc1").bias[2] = 0.3f;  // nonzero bias: removal only valid via zero_out
    Tensor& w2 = theta.at("fc2").weight;
    for (int r = 0; r < w2.dim(0); ++r) w2.at2(r, 2) = 0.0f;

    auto [pspec, pw, dec] = prune_fc_neurons(spec, theta, theta, {"fc1"});
    REQUIRE(dec.size() == 1);
    CHECK(dec[0].neurons == std::vector<int>{2});
    CHECK(dec[0].reasons == std::vector<std::string>{"zero_out"});

    Rng rng(46);
    Tensor x = testutil::random_tensor({3, 2, 4, 4}, rng);
    auto before = forward(spec, theta, x);
    auto after = forward(pspec, pw, x);
    for (std::size_t i = 0; i < before.at("head").numel(); ++i)
        CHECK(before.at("head")[i] == doctest::Approx(after.at("head")[i]).epsilon(1e-5));
}

TEST_CASE("fc pruning takes zeros from theta_th but values from theta") {
    NetworkSpec spec = fc_net();
    WeightSet theta = init_weights(spec, 47);
    WeightSet theta_th = theta;
    theta_th.tag = WeightTag::theta_l1_th;
    Tensor& wth = theta_th.at("fc1").weight;
    for (int c = 0; c < wth.dim(1); ++c) wth.at2(1, c) = 0.0f;
    // zero a few unrelated entries in the thresholded copy only
    theta_th.at("fc2").weight.at2(0, 0) = 0.0f;

    auto [pspec, pw, dec] = prune_fc_neurons(spec, theta_th, theta, {"fc1"});
    REQUIRE(dec.size() == 1);
    CHECK(dec[0].neurons == std::vector<int>{1});
    // surviving fc2 entry keeps its theta value despite being zero in theta_th
    CHECK(pw.at("fc2").weight.at2(0, 0) == theta.at("fc2").weight.at2(0, 0));
    CHECK(pw.at("fc2").weight.at2(0, 0) != 0.0f);
}

TEST_CASE("prune_fc_neurons refuses to empty a layer") {
    NetworkSpec spec = fc_net();
    WeightSet theta = init_weights(spec, 48);
    for (float& v : theta.at("fc1").weight.data) v = 0.0f;
    CHECK_THROWS_AS(prune_fc_neurons(spec, theta, theta, {"fc1"}), std::invalid_argument);
}

TEST_CASE("drop_tail_layers with a replacement head yields a working smaller net") {
    NetworkSpec spec = chain_net();
    WeightSet theta = init_weights(spec, 49);
    LayerSpec head{"new_head", LayerKind::head, 3, 0, 1, 0, "relu_b"};
    auto [pspec, pw] = drop_tail_layers(spec, theta, "relu_b", &head, 50);
    CHECK(pspec.layers.back().name == "new_head");
    CHECK(!pspec.has_layer("conv_c"));
    CHECK(pw.at("conv_a").weight.data == theta.at("conv_a").weight.data);

    Rng rng(51);
    Tensor x = testutil::random_tensor({2, 2, 6, 6}, rng);
    auto out = forward(pspec, pw, x);
    CHECK(out.at("new_head").shape == std::vector<int>{2, 3});
}

TEST_CASE("drop_tail_layers without a surviving head throws") {
    NetworkSpec spec = chain_net();
    WeightSet theta = init_weights(spec, 52);
    CHECK_THROWS_AS(drop_tail_layers(spec, theta, "relu_b"), std::invalid_argument);
}

TEST_CASE("random_prune: deterministic, floor(x*c) filters per conv layer") {
    NetworkSpec spec = chain_net();
    WeightSet theta = init_weights(spec, 53);
    auto [s1, w1] = random_prune(spec, theta, 0.5, {"conv_a", "conv_b"}, 99);
    auto [s2, w2] = random_prune(spec, theta, 0.5, {"conv_a", "conv_b"}, 99);
    CHECK(s1.layer("conv_a").out_channels == 4 - 2);  // floor(0.5*4)
    CHECK(s1.layer("conv_b").out_channels == 5 - 2);  // floor(0.5*5)
    CHECK(s1.layer("conv_c").out_channels == 3);
    CHECK(serialize_spec(s1) == serialize_spec(s2));
    for (const auto& [name, lw] : w1.layers) CHECK(lw.weight.data == w2.at(name).weight.data);

    auto [s3, w3] = random_prune(spec, theta, 0.0, {"conv_a", "conv_b"}, 99);
    CHECK(count_params(s3, true).total == count_params(spec, true).total);
    CHECK_THROWS_AS(random_prune(spec, theta, 1.0, {"conv_a"}, 99), std::invalid_argument);
}

TEST_CASE("write_decisions emits one parseable line per pruned filter") {
    PruneDecision d;
    d.layer = "conv_a";
    d.filters.push_back({0, PruneReason::cond1, 0.95, 0.1});
    d.filters.push_back({2, PruneReason::cond2, 0.88, 0.97});
    const char* path = "decisions_test.txt";
    write_decisions(path, {d});
    std::ifstream f(path);
    REQUIRE(static_cast<bool>(f));
    std::string layer, reason;
    int index;
    double sf, sg;
    int lines = 0;
    std::string line;
    while (std::getline(f, line)) {
        std::istringstream is(line);
        REQUIRE(static_cast<bool>(is >> layer >> index >> reason >> sf >> sg));
        CHECK(layer == "conv_a");
        ++lines;
    }
    CHECK(lines == 2);
    std::remove(path);
}
