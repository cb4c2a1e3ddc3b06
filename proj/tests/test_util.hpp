#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mlpk/rng.hpp"
#include "mlpk/tensor.hpp"

namespace mlpk::testutil {

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (float& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

/// Random tensor whose entries all satisfy |v| > margin, keeping
/// finite-difference probes away from the L1 kink and from relu kinks.
inline Tensor random_tensor_away_from_zero(std::vector<int> shape, Rng& rng,
                                           double margin = 5e-2, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (float& v : t.data) {
        double m = rng.uniform(margin, scale);
        v = static_cast<float>(rng.uniform() < 0.5 ? -m : m);
    }
    return t;
}

/// Central finite differences of a scalar function w.r.t. every entry
/// of `x`, h = 1e-3.
inline std::vector<double> finite_diff(Tensor& x, const std::function<double()>& f,
                                       double h = 1e-3) {
    std::vector<double> g(x.numel());
    for (std::size_t i = 0; i < x.numel(); ++i) {
        float save = x[i];
        x[i] = static_cast<float>(save + h);
        double fp = f();
        x[i] = static_cast<float>(save - h);
        double fm = f();
        x[i] = save;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// max_i |a_i - b_i| / max(1, |a_i|, |b_i|)
inline double max_rel_err(const std::vector<double>& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double denom = std::max({1.0, std::fabs(a[i]), std::fabs(static_cast<double>(b[i]))});
        worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace mlpk::testutil
