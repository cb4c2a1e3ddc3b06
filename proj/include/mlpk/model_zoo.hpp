#pragma once

#include <vector>

#include "mlpk/network.hpp"

namespace mlpk {

/// VGG16 topology (13 conv + 3 fc, 224x224x3 input by default) with
/// configurable per-layer widths, e.g. for pruned variants. `fc_sizes`
/// is {fc6, fc7, classes}; fc8 is the head.
NetworkSpec vgg16_spec(const std::vector<int>& conv_channels = {64, 64, 128, 128, 256, 256, 256,
                                                               512, 512, 512, 512, 512, 512},
                       const std::vector<int>& fc_sizes = {4096, 4096, 10},
                       int input_hw = 224);

/// Desk-scale reference net: 8 conv in four blocks, two fc, a conv head
/// on block 3 and an fc head after the fc stack. 3x16x16 input.
NetworkSpec desk_net(int n_classes = 10);

}  // namespace mlpk
