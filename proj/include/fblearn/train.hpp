#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "fblearn/feedback.hpp"
#include "fblearn/mlp.hpp"
#include "fblearn/synthetic.hpp"

namespace fblearn {

struct TrainConfig {
    double learning_rate = 0.05;
    int epochs = 200;
    int batch_size = 64;
    std::uint64_t seed = 0;
    LossKind loss_kind = LossKind::l1;
    std::vector<int> hidden_sizes{64, 64};

    void validate() const;
};

// Non-finite loss, or loss stuck above 10x its initial value for 5
// consecutive epochs.
struct TrainingDivergence : std::runtime_error {
    TrainingDivergence(int epoch_, const std::string& what)
        : std::runtime_error(what), epoch(epoch_) {}

    int epoch;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    std::optional<double> val_loss;
};

struct TrainResult {
    Mlp model;
    std::vector<EpochStats> curve;
};

// Plain minibatch gradient descent, single-threaded, bit-stable: the
// initialization and every epoch's shuffle derive from cfg.seed substreams.
TrainResult train_mlp(Mlp model, const std::vector<std::vector<double>>& inputs,
                      const std::vector<std::vector<double>>& targets,
                      const TrainConfig& cfg,
                      const std::vector<std::vector<double>>* val_inputs = nullptr,
                      const std::vector<std::vector<double>>* val_targets = nullptr);

// Residual map regression: observed patch -> residual truth, squash output.
TrainResult train_phi1(const Dataset& train_set, const TrainConfig& cfg,
                       const Dataset* val_set = nullptr);

// Error detector on truncated inverse targets min(1, theta1/|R - phi1(I)|),
// squash output. phi1 is frozen; targets are computed once up front.
TrainResult train_detector_inverse(const Dataset& train_set, const Mlp& phi1,
                                   Threshold theta1, const TrainConfig& cfg,
                                   const Dataset* val_set = nullptr);

// Direct alternative: affine output trained on signed errors R - phi1(I).
TrainResult train_detector_naive(const Dataset& train_set, const Mlp& phi1,
                                 const TrainConfig& cfg, const Dataset* val_set = nullptr);

// phi1 prediction as a residual map (clamped to [0,1]).
Grid predict_residual_map(const Mlp& phi1, const Grid& observed);

// Detector prediction clamped to [kDetectorFloor, 1].
Grid predict_detector_map(const Mlp& detector, const Grid& observed);

// Single-shot compensation: compensate_map(phi1(I), detector(I), theta1).
Grid apply_feedback(const Mlp& phi1, const Mlp& detector, const Grid& observed,
                    Threshold theta1);

struct MetricsReport {
    double mae_baseline = 0.0;
    double mae_compensated = 0.0;
    double mae_super_threshold_baseline = 0.0;
    double mae_super_threshold_compensated = 0.0;
    double detector_val_loss = 0.0;
    double fraction_sign_aligned = 0.0;
    std::uint64_t super_threshold_pixels = 0;
    bool super_threshold_empty = false;
};

// Held-out evaluation of the trained pair. Super-threshold metrics cover
// pixels with |R - phi1(I)| > theta1; when that set is empty they are
// reported as 0 with the flag set.
MetricsReport evaluate_metrics(const Mlp& phi1, const Mlp& detector,
                               const Dataset& held_out, Threshold theta1);

nlohmann::json metrics_to_json(const MetricsReport& m);

// Model file: magic, u32 version, u64 JSON length, JSON header (layer
// sizes, activation, seed lineage), float32 LE parameter block.
void save_model(const Mlp& mlp, const std::filesystem::path& path,
                std::uint64_t config_seed);
Mlp load_model(const std::filesystem::path& path);

// Header: epoch,train_loss,val_loss  (val_loss empty when absent)
void write_loss_curve_csv(std::ostream& os, std::span<const EpochStats> curve);

// Observed patches flattened row-major; shared by all training entry points.
std::vector<std::vector<double>> flatten_observed(const Dataset& ds);
std::vector<std::vector<double>> flatten_residual_truth(const Dataset& ds);

// Detector training targets for a frozen phi1, one row per sample.
std::vector<std::vector<double>> detector_targets_inverse(const Dataset& ds, const Mlp& phi1,
                                                          Threshold theta1);
std::vector<std::vector<double>> detector_targets_naive(const Dataset& ds, const Mlp& phi1);

}  // namespace fblearn
