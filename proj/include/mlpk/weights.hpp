#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "mlpk/tensor.hpp"

namespace mlpk {

enum class WeightTag { theta, theta_l1, theta_l1_th, theta_c };

inline const char* weight_tag_name(WeightTag t) {
    switch (t) {
        case WeightTag::theta: return "theta";
        case WeightTag::theta_l1: return "theta_l1";
        case WeightTag::theta_l1_th: return "theta_l1_th";
        case WeightTag::theta_c: return "theta_c";
    }
    return "?";
}

inline WeightTag weight_tag_from_name(const std::string& s) {
    if (s == "theta") return WeightTag::theta;
    if (s == "theta_l1") return WeightTag::theta_l1;
    if (s == "theta_l1_th") return WeightTag::theta_l1_th;
    if (s == "theta_c") return WeightTag::theta_c;
    throw std::invalid_argument("unknown weight tag '" + s + "'");
}

struct LayerWeights {
    Tensor weight;
    Tensor bias;
};

/// Named collection of per-layer parameters. std::map keeps iteration
/// order deterministic (sorted by layer name).
struct WeightSet {
    std::map<std::string, LayerWeights> layers;
    WeightTag tag = WeightTag::theta;

    bool has(const std::string& name) const { return layers.count(name) != 0; }

    LayerWeights& at(const std::string& name) {
        auto it = layers.find(name);
        if (it == layers.end()) throw std::out_of_range("WeightSet: no layer '" + name + "'");
        return it->second;
    }
    const LayerWeights& at(const std::string& name) const {
        auto it = layers.find(name);
        if (it == layers.end()) throw std::out_of_range("WeightSet: no layer '" + name + "'");
        return it->second;
    }
};

}  // namespace mlpk
