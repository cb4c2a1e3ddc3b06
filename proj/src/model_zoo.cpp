#include "mlpk/model_zoo.hpp"

#include <stdexcept>
#include <string>

namespace mlpk {

NetworkSpec vgg16_spec(const std::vector<int>& conv_channels, const std::vector<int>& fc_sizes,
                       int input_hw) {
    if (conv_channels.size() != 13)
        throw std::invalid_argument("vgg16_spec: need 13 conv channel counts");
    if (fc_sizes.size() != 3) throw std::invalid_argument("vgg16_spec: need 3 fc sizes");

    NetworkSpec spec;
    spec.input_shape = {3, input_hw, input_hw};
    const int block_sizes[5] = {2, 2, 3, 3, 3};
    const char* block_names[5] = {"conv1", "conv2", "conv3", "conv4", "conv5"};
    std::string prev;
    int ci = 0;
    for (int b = 0; b < 5; ++b) {
        for (int i = 0; i < block_sizes[b]; ++i) {
            std::string name = std::string(block_names[b]) + "_" + std::to_string(i + 1);
            spec.layers.push_back(
                {name, LayerKind::conv, conv_channels[ci++], 3, 1, 1, prev});
            spec.layers.push_back({"relu_" + name, LayerKind::relu, 0, 0, 1, 0, name});
            prev = "relu_" + name;
        }
        std::string pool = std::string("pool") + std::to_string(b + 1);
        spec.layers.push_back({pool, LayerKind::maxpool, 0, 0, 1, 0, prev});
        prev = pool;
    }
    spec.layers.push_back({"flatten", LayerKind::flatten, 0, 0, 1, 0, prev});
    spec.layers.push_back({"fc6", LayerKind::fc, fc_sizes[0], 0, 1, 0, "flatten"});
    spec.layers.push_back({"relu_fc6", LayerKind::relu, 0, 0, 1, 0, "fc6"});
    spec.layers.push_back({"fc7", LayerKind::fc, fc_sizes[1], 0, 1, 0, "relu_fc6"});
    spec.layers.push_back({"relu_fc7", LayerKind::relu, 0, 0, 1, 0, "fc7"});
    spec.layers.push_back({"fc8", LayerKind::head, fc_sizes[2], 0, 1, 0, "relu_fc7"});
    spec.validate();
    return spec;
}

NetworkSpec desk_net(int n_classes) {
    NetworkSpec spec;
    spec.input_shape = {3, 16, 16};
    auto conv = [&](const std::string& name, int c, const std::string& in) {
        spec.layers.push_back({name, LayerKind::conv, c, 3, 1, 1, in});
        spec.layers.push_back({"relu_" + name, LayerKind::relu, 0, 0, 1, 0, name});
        return "relu_" + name;
    };
    std::string p;
    p = conv("conv1", 8, "");
    p = conv("conv2", 8, p);
    spec.layers.push_back({"pool1", LayerKind::maxpool, 0, 0, 1, 0, p});
    p = conv("conv3", 16, "pool1");
    p = conv("conv4", 16, p);
    spec.layers.push_back({"pool2", LayerKind::maxpool, 0, 0, 1, 0, p});
    p = conv("conv5", 32, "pool2");
    p = conv("conv6", 32, p);
    spec.layers.push_back({"head1", LayerKind::head, n_classes, 0, 1, 0, p});
    p = conv("conv7", 32, p);
    p = conv("conv8", 32, p);
    spec.layers.push_back({"pool3", LayerKind::maxpool, 0, 0, 1, 0, p});
    spec.layers.push_back({"flatten", LayerKind::flatten, 0, 0, 1, 0, "pool3"});
    spec.layers.push_back({"fc1", LayerKind::fc, 64, 0, 1, 0, "flatten"});
    spec.layers.push_back({"relu_fc1", LayerKind::relu, 0, 0, 1, 0, "fc1"});
    spec.layers.push_back({"fc2", LayerKind::fc, 64, 0, 1, 0, "relu_fc1"});
    spec.layers.push_back({"relu_fc2", LayerKind::relu, 0, 0, 1, 0, "fc2"});
    spec.layers.push_back({"head2", LayerKind::head, n_classes, 0, 1, 0, "relu_fc2"});
    spec.validate();
    return spec;
}

}  // namespace mlpk
