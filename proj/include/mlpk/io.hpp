#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mlpk/data.hpp"
#include "mlpk/network.hpp"
#include "mlpk/weights.hpp"

namespace mlpk {

/// Binary checkpoint, little-endian throughout:
///   magic "MLPK" | u32 version (=1) | u32 tag | u32 spec text length |
///   spec text | u32 record count | records | u32 CRC32 of all
///   preceding bytes.
/// Each record: u32 name length | name | u32 dtype (f32=1) | u32 rank |
/// u32 dims... | raw f32 payload. One record per tensor, named
/// "<layer>/weight" and "<layer>/bias".
void save_checkpoint(const std::string& path, const NetworkSpec& spec, const WeightSet& weights);
std::pair<NetworkSpec, WeightSet> load_checkpoint(const std::string& path);

struct Cifar10Normalization {
    float mean[3] = {0, 0, 0};
    float stddev[3] = {1, 1, 1};
};

/// Standard CIFAR-10 binary batches: data_batch_{1..5}.bin as
/// train (1-4) and val (5), test_batch.bin as test. 3073-byte records,
/// label byte then channel-planar pixels. Pixels are scaled to [0,1]
/// and, when `normalize`, per-channel standardized with train-set
/// statistics (returned via `norm_out`).
Dataset load_cifar10(const std::string& dir, bool normalize,
                     Cifar10Normalization* norm_out = nullptr);

/// Deterministic synthetic classification set: per-class Gaussian
/// templates plus noise (sigma 0.25), 3-channel size x size images.
/// Val and test get max(1, n_per_class/4) examples per class each.
Dataset synth_dataset(std::uint64_t seed, int n_classes, int n_per_class, int size);

struct RunLog;  // pipeline.hpp

/// Writes nonzeros.csv, hist_<layer>.csv and summary.csv under outdir.
void emit_reports(const RunLog& log, const std::string& outdir);

void save_runlog(const std::string& path, const RunLog& log);
RunLog load_runlog(const std::string& path);

}  // namespace mlpk
