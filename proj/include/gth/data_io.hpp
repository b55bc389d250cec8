#pragma once

#include "gth/types.hpp"

#include <cstdint>
#include <string>
#include <utility>

namespace gth {

struct SynthConfig {
    int d = 128;
    int p = 10;
    int classes = 5;
    int n_s = 2000;
    int n_t = 200;
    double angle = 0.3;
    double noise_sigma = 0.1;
    std::uint64_t seed = 0;
};

// datasets plus the exact embedded class means (useful for ground-truth checks)
struct SynthResult {
    Dataset source;
    Dataset target;
    Matrix source_class_means; // d x classes
    Matrix target_class_means; // d x classes
};

enum class FileFormat { csv, fbin };

Dataset load(const std::string& path, FileFormat format,
             bool csv_has_labels = false, bool csv_has_header = false);
Dataset load_csv(const std::string& path, bool has_labels, bool has_header);
Dataset load_fbin(const std::string& path);
void save_fbin(const std::string& path, const Dataset& ds);

SynthResult synth(const SynthConfig& cfg);

// (train, query); seeded uniform sample without replacement, indices kept ascending
std::pair<Dataset, Dataset> split(const Dataset& ds, int n_query, std::uint64_t seed);

// (centered, mean)
std::pair<Dataset, Vector> center(const Dataset& ds);

} // namespace gth
