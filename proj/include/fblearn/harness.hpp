#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fblearn/synthetic.hpp"
#include "fblearn/train.hpp"

namespace fblearn {

// Invalid or inconsistent experiment configuration (CLI exit code 1).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HarnessConfig {
    std::string experiment;  // stats | control | train | compare-detectors
    double theta1 = 0.05;
    std::uint64_t seed = 20260809;
    std::filesystem::path out_dir = "out";

    // stats
    std::vector<double> theta1_grid = {1e-1, 1e-2, 1e-3, 1e-4, 1e-6};
    std::uint64_t mc_samples = 1000000;

    // control
    double plant_gain = 0.8;
    double compensator_gain = 100.0;
    double integrator_gain = 10.0;
    std::vector<double> frequencies;  // empty -> dc row plus the default grid

    // data + training
    DatasetSpec dataset;
    int train_samples = 4096;
    int heldout_samples = 512;
    std::optional<std::filesystem::path> dataset_path;
    TrainConfig train;

    void validate() const;
};

// Parses a config file object; unknown keys are rejected so typos fail
// loudly. Throws ConfigError.
HarnessConfig harness_config_from_json(const nlohmann::json& j);

void run_stats(const HarnessConfig& cfg);
void run_control(const HarnessConfig& cfg);
void run_train(const HarnessConfig& cfg);
void run_compare_detectors(const HarnessConfig& cfg);

// Full command-line entry point. Returns the process exit code:
// 0 success, 1 config error, 2 I/O error, 3 training divergence.
int run_cli(int argc, const char* const* argv);

}  // namespace fblearn
