#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "fblearn/grid.hpp"

namespace fblearn {

// Desk-scale stand-in for rain-streak imagery: parameters of the synthetic
// sample generator.
struct DatasetSpec {
    int patch_size = 16;
    int streak_count_min = 1;
    int streak_count_max = 4;
    double streak_intensity_min = 0.25;
    double streak_intensity_max = 0.75;
    double streak_angle_min = -1.0471975511965976;  // -60 deg
    double streak_angle_max = 1.0471975511965976;   // +60 deg
    double background_smoothness = 2.0;
    double residual_mean_target = 0.5;

    void validate() const;

    friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

void to_json(nlohmann::json& j, const DatasetSpec& spec);
void from_json(const nlohmann::json& j, DatasetSpec& spec);

// One synthetic patch. All grids share the spec's square shape and every
// value is an exact float32; observed == clamp01(background + residual_truth)
// holds exactly (in the quantized domain) and survives file round trips.
struct Sample {
    Grid observed;
    Grid residual_truth;
    Grid background;
};

struct Dataset {
    DatasetSpec spec;
    std::uint64_t seed = 0;
    std::vector<Sample> samples;
};

Sample generate_sample(const DatasetSpec& spec, std::uint64_t seed);

// n samples with per-sample seeds substream(seed, index); sample i is
// independent of generation order.
Dataset generate_dataset(const DatasetSpec& spec, int n, std::uint64_t seed);

// Binary layout: 16-byte magic, u32 version, u64 JSON length, JSON metadata
// (spec, n, seed), float32 LE planes (observed, residual, background) per
// sample, trailing FNV-1a 64-bit checksum of all preceding bytes.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace fblearn
