#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlpk/tensor.hpp"

namespace mlpk {

/// One minibatch. All heads classify the same target, so a single label
/// vector serves every head.
struct Batch {
    Tensor inputs;            // [n,c,h,w]
    std::vector<int> labels;  // n entries

    int size() const { return inputs.rank() ? inputs.dim(0) : 0; }
};

struct DataSplit {
    Tensor images;            // [n,c,h,w]
    std::vector<int> labels;

    int size() const { return images.rank() ? images.dim(0) : 0; }
    Batch slice(int begin, int end) const;
    Batch gather(const std::vector<int>& idx) const;
};

struct Dataset {
    DataSplit train, val, test;
    int n_classes = 0;
};

}  // namespace mlpk
