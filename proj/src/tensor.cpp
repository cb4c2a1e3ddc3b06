#include "mlpk/tensor.hpp"

#include <sstream>

namespace mlpk {

std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << "]";
    return os.str();
}

void require_shape(const Tensor& t, const std::vector<int>& expect, const std::string& what) {
    if (t.shape != expect)
        throw std::invalid_argument(what + ": expected shape " + shape_str(expect) +
                                    ", got " + shape_str(t.shape));
}

double pairwise_sum(const float* v, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(v[i]);
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

double pairwise_sum(const std::vector<float>& v) { return pairwise_sum(v.data(), v.size()); }

}  // namespace mlpk
