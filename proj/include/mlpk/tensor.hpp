#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlpk {

/// Dense row-major float32 tensor.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), 0.0f);
    }
    Tensor(std::vector<int> s, std::vector<float> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != data.size())
            throw std::invalid_argument("Tensor: shape/data size mismatch");
    }

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return data.size(); }
    int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
    int rank() const { return static_cast<int>(shape.size()); }

    float& operator[](std::size_t i) { return data[i]; }
    float operator[](std::size_t i) const { return data[i]; }

    // 4-d accessor, [n][c][h][w]
    float& at4(int n, int c, int h, int w) {
        return data[((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    float at4(int n, int c, int h, int w) const {
        return data[((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    // 2-d accessor, [r][c]
    float& at2(int r, int c) { return data[static_cast<std::size_t>(r) * shape[1] + c]; }
    float at2(int r, int c) const { return data[static_cast<std::size_t>(r) * shape[1] + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (float v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

std::string shape_str(const std::vector<int>& s);

/// Throws std::invalid_argument naming `what` when shapes differ.
void require_shape(const Tensor& t, const std::vector<int>& expect, const std::string& what);

/// Deterministic pairwise-tree summation; result is independent of any
/// chunking the caller might do because the tree is fixed by (offset, n).
double pairwise_sum(const float* v, std::size_t n);
double pairwise_sum(const std::vector<float>& v);

}  // namespace mlpk
