#include "mlpk/data.hpp"

#include <algorithm>

namespace mlpk {

Batch DataSplit::slice(int begin, int end) const {
    if (begin < 0 || end > size() || begin >= end)
        throw std::invalid_argument("DataSplit::slice: bad range");
    const int c = images.dim(1), h = images.dim(2), w = images.dim(3);
    const std::size_t per = static_cast<std::size_t>(c) * h * w;
    Batch b;
    b.inputs = Tensor({end - begin, c, h, w});
    std::copy(images.data.begin() + begin * per, images.data.begin() + end * per,
              b.inputs.data.begin());
    b.labels.assign(labels.begin() + begin, labels.begin() + end);
    return b;
}

Batch DataSplit::gather(const std::vector<int>& idx) const {
    const int c = images.dim(1), h = images.dim(2), w = images.dim(3);
    const std::size_t per = static_cast<std::size_t>(c) * h * w;
    Batch b;
    b.inputs = Tensor({static_cast<int>(idx.size()), c, h, w});
    for (std::size_t j = 0; j < idx.size(); ++j) {
        std::copy(images.data.begin() + idx[j] * per, images.data.begin() + (idx[j] + 1) * per,
                  b.inputs.data.begin() + j * per);
        b.labels.push_back(labels[idx[j]]);
    }
    return b;
}

}  // namespace mlpk
