#include "fblearn/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fblearn/io_util.hpp"
#include "fblearn/rng.hpp"
#include "fblearn/stats.hpp"
#include "fblearn/transfer_function.hpp"

namespace fs = std::filesystem;

namespace fblearn {

namespace {

// Substream roles under the master seed.
constexpr std::uint64_t kTrainDataStream = 101;
constexpr std::uint64_t kHeldoutDataStream = 102;
constexpr std::uint64_t kPhi1Stream = 103;
constexpr std::uint64_t kInverseDetectorStream = 104;
constexpr std::uint64_t kNaiveDetectorStream = 105;
constexpr std::uint64_t kMomentsMcStream = 106;

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
    for (const auto& item : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
                return item.key() == k;
            }) == allowed.end())
            throw ConfigError("unknown config key '" + item.key() + "' in " + context);
    }
}

template <typename T>
void maybe_get(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

void parse_range(const nlohmann::json& j, const char* key, double& lo, double& hi) {
    if (!j.contains(key)) return;
    const auto& r = j.at(key);
    if (!r.is_array() || r.size() != 2)
        throw ConfigError(std::string("config key '") + key + "' must be a [lo, hi] pair");
    lo = r.at(0).get<double>();
    hi = r.at(1).get<double>();
}

void parse_dataset_block(const nlohmann::json& j, HarnessConfig& cfg) {
    check_keys(j,
               {"patch_size", "streak_count_range", "streak_intensity_range",
                "streak_angle_range", "background_smoothness", "residual_mean_target",
                "train_samples", "heldout_samples", "path"},
               "dataset");
    maybe_get(j, "patch_size", cfg.dataset.patch_size);
    if (j.contains("streak_count_range")) {
        const auto& r = j.at("streak_count_range");
        if (!r.is_array() || r.size() != 2)
            throw ConfigError("config key 'streak_count_range' must be a [lo, hi] pair");
        cfg.dataset.streak_count_min = r.at(0).get<int>();
        cfg.dataset.streak_count_max = r.at(1).get<int>();
    }
    parse_range(j, "streak_intensity_range", cfg.dataset.streak_intensity_min,
                cfg.dataset.streak_intensity_max);
    parse_range(j, "streak_angle_range", cfg.dataset.streak_angle_min,
                cfg.dataset.streak_angle_max);
    maybe_get(j, "background_smoothness", cfg.dataset.background_smoothness);
    maybe_get(j, "residual_mean_target", cfg.dataset.residual_mean_target);
    maybe_get(j, "train_samples", cfg.train_samples);
    maybe_get(j, "heldout_samples", cfg.heldout_samples);
    if (j.contains("path")) cfg.dataset_path = fs::path(j.at("path").get<std::string>());
}

void parse_train_block(const nlohmann::json& j, HarnessConfig& cfg) {
    check_keys(j, {"learning_rate", "epochs", "batch_size", "loss", "hidden_sizes"}, "train");
    maybe_get(j, "learning_rate", cfg.train.learning_rate);
    maybe_get(j, "epochs", cfg.train.epochs);
    maybe_get(j, "batch_size", cfg.train.batch_size);
    maybe_get(j, "hidden_sizes", cfg.train.hidden_sizes);
    if (j.contains("loss")) {
        const std::string loss = j.at("loss").get<std::string>();
        if (loss == "L1")
            cfg.train.loss_kind = LossKind::l1;
        else if (loss == "L2")
            cfg.train.loss_kind = LossKind::l2;
        else
            throw ConfigError("config key 'loss' must be \"L1\" or \"L2\"");
    }
}

nlohmann::json moments_to_json(const MomentSet& m) {
    return nlohmann::json{{"mean_x", m.mean_x},   {"var_x", m.var_x},
                          {"mean_y", m.mean_y},   {"var_y", m.var_y},
                          {"cov_xy", m.cov_xy},   {"corr_xy", m.corr_xy}};
}

void emit_file(const fs::path& path, const std::string& contents) {
    write_file(path, contents);
    std::cout << "wrote " << path.string() << "\n";
}

void emit_json(const fs::path& path, const nlohmann::json& j) {
    emit_file(path, j.dump(2) + "\n");
}

std::pair<Dataset, Dataset> prepare_datasets(const HarnessConfig& cfg) {
    if (cfg.dataset_path) {
        Dataset all = load_dataset(*cfg.dataset_path);
        const std::size_t need =
            static_cast<std::size_t>(cfg.train_samples) + cfg.heldout_samples;
        if (all.samples.size() < need)
            throw ConfigError("dataset file holds " + std::to_string(all.samples.size()) +
                              " samples, config needs " + std::to_string(need));
        Dataset train{all.spec, all.seed, {}};
        Dataset heldout{all.spec, all.seed, {}};
        train.samples.assign(all.samples.begin(), all.samples.begin() + cfg.train_samples);
        heldout.samples.assign(all.samples.begin() + cfg.train_samples,
                               all.samples.begin() + static_cast<std::ptrdiff_t>(need));
        return {std::move(train), std::move(heldout)};
    }
    Dataset train = generate_dataset(cfg.dataset, cfg.train_samples,
                                     substream(cfg.seed, kTrainDataStream));
    Dataset heldout = generate_dataset(cfg.dataset, cfg.heldout_samples,
                                       substream(cfg.seed, kHeldoutDataStream));
    return {std::move(train), std::move(heldout)};
}

TrainConfig phase_config(const HarnessConfig& cfg, std::uint64_t stream) {
    TrainConfig tc = cfg.train;
    tc.seed = substream(cfg.seed, stream);
    return tc;
}

std::string loss_curve_string(std::span<const EpochStats> curve) {
    std::ostringstream os;
    write_loss_curve_csv(os, curve);
    return os.str();
}

// Metrics for the signed-error detector variant. Its natural correction is
// additive: phi1' = clamp01(phi1(I) + phi_naive(I)).
MetricsReport evaluate_metrics_naive(const Mlp& phi1, const Mlp& naive,
                                     const Dataset& held_out, Threshold theta1) {
    const double t = theta1.value();
    double sum_base = 0.0, sum_comp = 0.0;
    double sum_super_base = 0.0, sum_super_comp = 0.0;
    double sum_det_loss = 0.0;
    std::uint64_t pixels = 0, super_pixels = 0, aligned = 0;

    for (const auto& s : held_out.samples) {
        const Grid pred = predict_residual_map(phi1, s.observed);
        const auto naive_out = forward(naive, s.observed.values());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double truth = s.residual_truth[i];
            const double base_err = pred[i] - truth;
            const double corrected = clamp01(pred[i] + naive_out[i]);
            const double comp_err = corrected - truth;
            sum_base += std::abs(base_err);
            sum_comp += std::abs(comp_err);
            sum_det_loss += std::abs(naive_out[i] - (truth - pred[i]));
            ++pixels;
            if (std::abs(base_err) > t) {
                ++super_pixels;
                sum_super_base += std::abs(base_err);
                sum_super_comp += std::abs(comp_err);
                const double dir = 1.0 - 2.0 * pred[i];
                if ((base_err > 0.0 && dir > 0.0) || (base_err < 0.0 && dir < 0.0))
                    ++aligned;
            }
        }
    }

    MetricsReport m;
    m.mae_baseline = sum_base / static_cast<double>(pixels);
    m.mae_compensated = sum_comp / static_cast<double>(pixels);
    m.detector_val_loss = sum_det_loss / static_cast<double>(pixels);
    m.super_threshold_pixels = super_pixels;
    m.super_threshold_empty = super_pixels == 0;
    if (super_pixels > 0) {
        m.mae_super_threshold_baseline = sum_super_base / static_cast<double>(super_pixels);
        m.mae_super_threshold_compensated =
            sum_super_comp / static_cast<double>(super_pixels);
        m.fraction_sign_aligned =
            static_cast<double>(aligned) / static_cast<double>(super_pixels);
    }
    return m;
}

}  // namespace

void HarnessConfig::validate() const {
    static const char* kExperiments[] = {"stats", "control", "train", "compare-detectors"};
    if (std::find(std::begin(kExperiments), std::end(kExperiments), experiment) ==
        std::end(kExperiments))
        throw ConfigError("unknown experiment '" + experiment + "'");
    if (!(theta1 > 0.0 && theta1 < 1.0))
        throw ConfigError("theta1 must lie in (0,1)");
    if (theta1_grid.empty()) throw ConfigError("theta1_grid must not be empty");
    for (double t : theta1_grid)
        if (!(t > 0.0 && t < 1.0)) throw ConfigError("theta1_grid entries must lie in (0,1)");
    if (mc_samples < 2) throw ConfigError("mc_samples must be >= 2");
    if (compensator_gain == 0.0 || integrator_gain == 0.0)
        throw ConfigError("compensator_gain and integrator_gain must be nonzero");
    for (double w : frequencies)
        if (!(w >= 0.0)) throw ConfigError("frequencies must be >= 0");
    if (train_samples < 1 || heldout_samples < 1)
        throw ConfigError("train_samples and heldout_samples must be >= 1");
    try {
        dataset.validate();
        train.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

HarnessConfig harness_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    check_keys(j, {"experiment", "theta1", "seed", "out", "stats", "control", "dataset",
                   "train"},
               "config root");

    HarnessConfig cfg;
    try {
        maybe_get(j, "experiment", cfg.experiment);
        maybe_get(j, "theta1", cfg.theta1);
        maybe_get(j, "seed", cfg.seed);
        if (j.contains("out")) cfg.out_dir = fs::path(j.at("out").get<std::string>());
        if (j.contains("stats")) {
            const auto& s = j.at("stats");
            check_keys(s, {"theta1_grid", "mc_samples"}, "stats");
            maybe_get(s, "theta1_grid", cfg.theta1_grid);
            maybe_get(s, "mc_samples", cfg.mc_samples);
        }
        if (j.contains("control")) {
            const auto& c = j.at("control");
            check_keys(c, {"plant_gain", "compensator_gain", "integrator_gain", "frequencies"},
                       "control");
            maybe_get(c, "plant_gain", cfg.plant_gain);
            maybe_get(c, "compensator_gain", cfg.compensator_gain);
            maybe_get(c, "integrator_gain", cfg.integrator_gain);
            maybe_get(c, "frequencies", cfg.frequencies);
        }
        if (j.contains("dataset")) parse_dataset_block(j.at("dataset"), cfg);
        if (j.contains("train")) parse_train_block(j.at("train"), cfg);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return cfg;
}

void run_stats(const HarnessConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);

    const auto rows = corr_scan(cfg.theta1_grid, cfg.mc_samples, cfg.seed);
    std::ostringstream csv;
    write_corr_scan_csv(csv, rows);
    emit_file(cfg.out_dir / "corr_scan.csv", csv.str());

    const UniformErrorModel model(cfg.theta1);
    const std::uint64_t mc_seed = substream(cfg.seed, kMomentsMcStream);
    const nlohmann::json moments{
        {"theta1", cfg.theta1},
        {"closed_form", moments_to_json(closed_form_moments(model))},
        {"monte_carlo", [&] {
             nlohmann::json m = moments_to_json(
                 monte_carlo_moments(model, cfg.mc_samples, mc_seed));
             m["n"] = cfg.mc_samples;
             m["seed"] = mc_seed;
             return m;
         }()}};
    emit_json(cfg.out_dir / ("moments_" + format_double(cfg.theta1) + ".json"), moments);
}

void run_control(const HarnessConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);

    std::vector<double> freqs = cfg.frequencies;
    if (freqs.empty()) {
        freqs.push_back(0.0);  // dc row
        const auto grid = default_frequency_grid();
        freqs.insert(freqs.end(), grid.begin(), grid.end());
    }

    const RationalTF plant = RationalTF::constant(cfg.plant_gain);

    const auto constant_rows =
        identity_gap(plant, RationalTF::constant(cfg.compensator_gain), freqs);
    std::ostringstream constant_csv;
    write_identity_gap_csv(constant_csv, constant_rows);
    emit_file(cfg.out_dir / "identity_gap.csv", constant_csv.str());

    const auto integrator_rows =
        identity_gap(plant, RationalTF::integrator(cfg.integrator_gain), freqs);
    std::ostringstream integrator_csv;
    write_identity_gap_csv(integrator_csv, integrator_rows);
    emit_file(cfg.out_dir / "identity_gap_integrator.csv", integrator_csv.str());
}

void run_train(const HarnessConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);

    const auto [train_ds, heldout_ds] = prepare_datasets(cfg);
    const Threshold theta1(cfg.theta1);

    const TrainConfig phi1_cfg = phase_config(cfg, kPhi1Stream);
    const TrainResult phi1 = train_phi1(train_ds, phi1_cfg, &heldout_ds);

    const TrainConfig det_cfg = phase_config(cfg, kInverseDetectorStream);
    const TrainResult detector =
        train_detector_inverse(train_ds, phi1.model, theta1, det_cfg, &heldout_ds);

    const MetricsReport metrics =
        evaluate_metrics(phi1.model, detector.model, heldout_ds, theta1);

    emit_json(cfg.out_dir / "metrics.json", metrics_to_json(metrics));
    save_model(phi1.model, cfg.out_dir / "phi1.model", phi1_cfg.seed);
    std::cout << "wrote " << (cfg.out_dir / "phi1.model").string() << "\n";
    save_model(detector.model, cfg.out_dir / "detector.model", det_cfg.seed);
    std::cout << "wrote " << (cfg.out_dir / "detector.model").string() << "\n";
    emit_file(cfg.out_dir / "loss_curve_phi1.csv", loss_curve_string(phi1.curve));
    emit_file(cfg.out_dir / "loss_curve_detector.csv", loss_curve_string(detector.curve));
}

void run_compare_detectors(const HarnessConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);

    const auto [train_ds, heldout_ds] = prepare_datasets(cfg);
    const Threshold theta1(cfg.theta1);

    const TrainConfig phi1_cfg = phase_config(cfg, kPhi1Stream);
    const TrainResult phi1 = train_phi1(train_ds, phi1_cfg, &heldout_ds);

    const TrainResult inverse = train_detector_inverse(
        train_ds, phi1.model, theta1, phase_config(cfg, kInverseDetectorStream), &heldout_ds);
    const TrainResult naive = train_detector_naive(
        train_ds, phi1.model, phase_config(cfg, kNaiveDetectorStream), &heldout_ds);

    // Coupling between training statistics. The naive targets are the
    // residual errors themselves, so their correlation is definitionally 1;
    // the inverse targets decorrelate per the uniform error model.
    std::vector<double> residuals;
    for (const auto& row : detector_targets_naive(train_ds, phi1.model))
        residuals.insert(residuals.end(), row.begin(), row.end());
    std::vector<double> naive_targets;
    for (const auto& row : detector_targets_naive(train_ds, phi1.model))
        naive_targets.insert(naive_targets.end(), row.begin(), row.end());
    const double naive_corr = pearson_corr(naive_targets, residuals);

    std::vector<double> super_errors, super_targets;
    for (double r : residuals) {
        const double e = std::abs(r);
        if (e > theta1.value()) {
            super_errors.push_back(e);
            super_targets.push_back(theta1.value() / e);
        }
    }
    const double inverse_corr = pearson_corr(super_errors, super_targets);

    nlohmann::json coupling{
        {"naive_target_residual_corr", naive_corr},
        {"inverse_target_error_corr", inverse_corr},
        {"super_threshold_train_pixels", super_errors.size()}};
    if (theta1.value() > 0.0 && theta1.value() < 1.0)
        coupling["closed_form_corr_uniform_model"] =
            closed_form_moments(UniformErrorModel(theta1.value())).corr_xy;

    const nlohmann::json report{
        {"theta1", cfg.theta1},
        {"coupling", coupling},
        {"variants",
         {{"inverse",
           metrics_to_json(evaluate_metrics(phi1.model, inverse.model, heldout_ds, theta1))},
          {"naive", metrics_to_json(evaluate_metrics_naive(phi1.model, naive.model,
                                                           heldout_ds, theta1))}}}};

    emit_json(cfg.out_dir / "compare.json", report);
    emit_file(cfg.out_dir / "loss_curve_phi1.csv", loss_curve_string(phi1.curve));
    emit_file(cfg.out_dir / "loss_curve_detector_inverse.csv",
              loss_curve_string(inverse.curve));
    emit_file(cfg.out_dir / "loss_curve_detector_naive.csv", loss_curve_string(naive.curve));
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"feedback-compensated residual learning experiment harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::string dataset_override;
    std::uint64_t seed_override = 0;
    bool have_seed = false;

    const char* kCommands[] = {"stats", "control", "train", "compare-detectors"};
    const char* kDescriptions[] = {
        "closed-form vs Monte Carlo statistics of the inverse error model",
        "open-loop vs closed-loop identity tracking report",
        "two-phase training plus compensated evaluation",
        "inverse vs direct error detector comparison"};
    for (std::size_t i = 0; i < 4; ++i) {
        auto* sub = app.add_subcommand(kCommands[i], kDescriptions[i]);
        sub->add_option("--config", config_path, "JSON experiment config file");
        sub->add_option("--out", out_override, "output directory (overrides config)");
        auto* seed_opt =
            sub->add_option("--seed", seed_override, "master seed (overrides config)");
        sub->callback([&have_seed, seed_opt] { have_seed = seed_opt->count() > 0; });
        if (i >= 2)
            sub->add_option("--dataset", dataset_override,
                            "read samples from this dataset file instead of generating");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        nlohmann::json config_json = nlohmann::json::object();
        if (!config_path.empty()) {
            std::string raw;
            try {
                raw = read_file(config_path);
            } catch (const IoError& e) {
                throw ConfigError(e.what());
            }
            try {
                config_json = nlohmann::json::parse(raw);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(std::string("config parse error: ") + e.what());
            }
        }

        HarnessConfig cfg = harness_config_from_json(config_json);
        const std::string chosen = app.get_subcommands().front()->get_name();
        if (!cfg.experiment.empty() && cfg.experiment != chosen)
            throw ConfigError("config experiment '" + cfg.experiment +
                              "' does not match subcommand '" + chosen + "'");
        cfg.experiment = chosen;
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (have_seed) cfg.seed = seed_override;
        if (!dataset_override.empty()) cfg.dataset_path = dataset_override;

        if (chosen == "stats")
            run_stats(cfg);
        else if (chosen == "control")
            run_control(cfg);
        else if (chosen == "train")
            run_train(cfg);
        else
            run_compare_detectors(cfg);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const TrainingDivergence& e) {
        std::cerr << "training divergence: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        // IoError, FormatError and stream failures land here.
        std::cerr << "i/o error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace fblearn
