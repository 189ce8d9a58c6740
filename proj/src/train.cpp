#include "fblearn/train.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <ostream>

#include "fblearn/io_util.hpp"
#include "fblearn/rng.hpp"

namespace fblearn {

namespace {

constexpr char kModelMagic[8] = {'F', 'B', 'L', 'M', 'O', 'D', 'L', '\0'};
constexpr std::uint32_t kModelVersion = 1;

// Substream roles under a TrainConfig seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kShuffleStreamBase = 1;

void fisher_yates(std::vector<int>& idx, Xoshiro256pp& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(idx[i - 1], idx[j]);
    }
}

std::vector<int> hidden_to_layers(int io_dim, const std::vector<int>& hidden) {
    std::vector<int> layers;
    layers.push_back(io_dim);
    layers.insert(layers.end(), hidden.begin(), hidden.end());
    layers.push_back(io_dim);
    return layers;
}

double full_loss(const Mlp& mlp, const std::vector<std::vector<double>>& x,
                 const std::vector<std::vector<double>>& y, LossKind kind) {
    std::vector<int> all(x.size());
    std::iota(all.begin(), all.end(), 0);
    return batch_loss(mlp, x, y, all, kind);
}

std::string output_activation_name(OutputActivation a) {
    return a == OutputActivation::unit_interval_squash ? "unit_interval_squash" : "affine";
}

OutputActivation output_activation_from_name(const std::string& s) {
    if (s == "unit_interval_squash") return OutputActivation::unit_interval_squash;
    if (s == "affine") return OutputActivation::affine;
    throw FormatError("unknown output activation: " + s);
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    for (int h : hidden_sizes)
        if (h < 1) throw std::invalid_argument("TrainConfig: hidden sizes must be >= 1");
}

TrainResult train_mlp(Mlp model, const std::vector<std::vector<double>>& inputs,
                      const std::vector<std::vector<double>>& targets,
                      const TrainConfig& cfg,
                      const std::vector<std::vector<double>>* val_inputs,
                      const std::vector<std::vector<double>>* val_targets) {
    cfg.validate();
    if (inputs.empty() || inputs.size() != targets.size())
        throw std::invalid_argument("train_mlp: bad training set");

    MlpGrad grad = make_grad_like(model);
    MlpWorkspace ws;
    std::vector<int> order(inputs.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    double initial_loss = 0.0;
    int high_loss_streak = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Xoshiro256pp shuffle_rng(substream(cfg.seed, kShuffleStreamBase + epoch));
        fisher_yates(order, shuffle_rng);

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t count =
                std::min<std::size_t>(cfg.batch_size, order.size() - start);
            const std::span<const int> batch(order.data() + start, count);
            epoch_loss += batch_gradient(model, inputs, targets, batch, cfg.loss_kind,
                                         grad, ws);
            ++batches;

            for (std::size_t l = 0; l < model.layer_count(); ++l) {
                double* w = model.weights[l].data();
                const double* gw = grad.weights[l].data();
                for (std::size_t i = 0; i < model.weights[l].size(); ++i)
                    w[i] -= cfg.learning_rate * gw[i];
                double* b = model.biases[l].data();
                const double* gb = grad.biases[l].data();
                for (std::size_t i = 0; i < model.biases[l].size(); ++i)
                    b[i] -= cfg.learning_rate * gb[i];
            }
        }
        epoch_loss /= static_cast<double>(batches);

        if (epoch == 0) initial_loss = epoch_loss;
        if (!std::isfinite(epoch_loss))
            throw TrainingDivergence(epoch, "training diverged: non-finite loss at epoch " +
                                                std::to_string(epoch));
        if (epoch_loss > 10.0 * initial_loss) {
            if (++high_loss_streak >= 5)
                throw TrainingDivergence(
                    epoch, "training diverged: loss above 10x initial for 5 epochs, epoch " +
                               std::to_string(epoch));
        } else {
            high_loss_streak = 0;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss;
        if (val_inputs && val_targets)
            stats.val_loss = full_loss(model, *val_inputs, *val_targets, cfg.loss_kind);
        result.curve.push_back(stats);
    }

    result.model = std::move(model);
    return result;
}

std::vector<std::vector<double>> flatten_observed(const Dataset& ds) {
    std::vector<std::vector<double>> out;
    out.reserve(ds.samples.size());
    for (const auto& s : ds.samples)
        out.emplace_back(s.observed.values().begin(), s.observed.values().end());
    return out;
}

std::vector<std::vector<double>> flatten_residual_truth(const Dataset& ds) {
    std::vector<std::vector<double>> out;
    out.reserve(ds.samples.size());
    for (const auto& s : ds.samples)
        out.emplace_back(s.residual_truth.values().begin(), s.residual_truth.values().end());
    return out;
}

std::vector<std::vector<double>> detector_targets_inverse(const Dataset& ds, const Mlp& phi1,
                                                          Threshold theta1) {
    std::vector<std::vector<double>> out;
    out.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        const Grid pred = predict_residual_map(phi1, s.observed);
        const Grid target = detector_target_map(s.residual_truth, pred, theta1);
        out.emplace_back(target.values().begin(), target.values().end());
    }
    return out;
}

std::vector<std::vector<double>> detector_targets_naive(const Dataset& ds, const Mlp& phi1) {
    std::vector<std::vector<double>> out;
    out.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        const Grid pred = predict_residual_map(phi1, s.observed);
        std::vector<double> row(pred.size());
        for (std::size_t i = 0; i < pred.size(); ++i)
            row[i] = s.residual_truth[i] - pred[i];
        out.push_back(std::move(row));
    }
    return out;
}

TrainResult train_phi1(const Dataset& train_set, const TrainConfig& cfg,
                       const Dataset* val_set) {
    if (train_set.samples.empty())
        throw std::invalid_argument("train_phi1: empty training set");
    const int dim = train_set.spec.patch_size * train_set.spec.patch_size;
    Mlp model = mlp_init(hidden_to_layers(dim, cfg.hidden_sizes),
                         OutputActivation::unit_interval_squash,
                         substream(cfg.seed, kInitStream));

    const auto x = flatten_observed(train_set);
    const auto y = flatten_residual_truth(train_set);
    if (!val_set) return train_mlp(std::move(model), x, y, cfg);
    const auto vx = flatten_observed(*val_set);
    const auto vy = flatten_residual_truth(*val_set);
    return train_mlp(std::move(model), x, y, cfg, &vx, &vy);
}

TrainResult train_detector_inverse(const Dataset& train_set, const Mlp& phi1,
                                   Threshold theta1, const TrainConfig& cfg,
                                   const Dataset* val_set) {
    if (train_set.samples.empty())
        throw std::invalid_argument("train_detector_inverse: empty training set");
    const int dim = train_set.spec.patch_size * train_set.spec.patch_size;
    Mlp model = mlp_init(hidden_to_layers(dim, cfg.hidden_sizes),
                         OutputActivation::unit_interval_squash,
                         substream(cfg.seed, kInitStream));

    const auto x = flatten_observed(train_set);
    const auto y = detector_targets_inverse(train_set, phi1, theta1);
    if (!val_set) return train_mlp(std::move(model), x, y, cfg);
    const auto vx = flatten_observed(*val_set);
    const auto vy = detector_targets_inverse(*val_set, phi1, theta1);
    return train_mlp(std::move(model), x, y, cfg, &vx, &vy);
}

TrainResult train_detector_naive(const Dataset& train_set, const Mlp& phi1,
                                 const TrainConfig& cfg, const Dataset* val_set) {
    if (train_set.samples.empty())
        throw std::invalid_argument("train_detector_naive: empty training set");
    const int dim = train_set.spec.patch_size * train_set.spec.patch_size;
    Mlp model = mlp_init(hidden_to_layers(dim, cfg.hidden_sizes), OutputActivation::affine,
                         substream(cfg.seed, kInitStream));

    const auto x = flatten_observed(train_set);
    const auto y = detector_targets_naive(train_set, phi1);
    if (!val_set) return train_mlp(std::move(model), x, y, cfg);
    const auto vx = flatten_observed(*val_set);
    const auto vy = detector_targets_naive(*val_set, phi1);
    return train_mlp(std::move(model), x, y, cfg, &vx, &vy);
}

Grid predict_residual_map(const Mlp& phi1, const Grid& observed) {
    const auto out = forward(phi1, observed.values());
    Grid g(observed.width(), observed.height());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = clamp01(out[i]);
    return g;
}

Grid predict_detector_map(const Mlp& detector, const Grid& observed) {
    const auto out = forward(detector, observed.values());
    Grid g(observed.width(), observed.height());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = std::clamp(out[i], kDetectorFloor, 1.0);
    return g;
}

Grid apply_feedback(const Mlp& phi1, const Mlp& detector, const Grid& observed,
                    Threshold theta1) {
    const Grid phi1_map = predict_residual_map(phi1, observed);
    const Grid detector_map = predict_detector_map(detector, observed);
    return compensate_map(phi1_map, detector_map, theta1);
}

MetricsReport evaluate_metrics(const Mlp& phi1, const Mlp& detector,
                               const Dataset& held_out, Threshold theta1) {
    if (held_out.samples.empty())
        throw std::invalid_argument("evaluate_metrics: empty held-out set");

    const double t = theta1.value();
    double sum_base = 0.0, sum_comp = 0.0;
    double sum_super_base = 0.0, sum_super_comp = 0.0;
    double sum_det_loss = 0.0;
    std::uint64_t pixels = 0, super_pixels = 0, aligned = 0;

    for (const auto& s : held_out.samples) {
        const Grid pred = predict_residual_map(phi1, s.observed);
        const Grid comp = apply_feedback(phi1, detector, s.observed, theta1);
        const Grid det_target = detector_target_map(s.residual_truth, pred, theta1);
        const auto det_out = forward(detector, s.observed.values());

        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double base_err = pred[i] - s.residual_truth[i];
            const double comp_err = comp[i] - s.residual_truth[i];
            sum_base += std::abs(base_err);
            sum_comp += std::abs(comp_err);
            sum_det_loss += std::abs(det_out[i] - det_target[i]);
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

nlohmann::json metrics_to_json(const MetricsReport& m) {
    return nlohmann::json{{"mae_baseline", m.mae_baseline},
                          {"mae_compensated", m.mae_compensated},
                          {"mae_super_threshold_baseline", m.mae_super_threshold_baseline},
                          {"mae_super_threshold_compensated", m.mae_super_threshold_compensated},
                          {"detector_val_loss", m.detector_val_loss},
                          {"fraction_sign_aligned", m.fraction_sign_aligned},
                          {"super_threshold_pixels", m.super_threshold_pixels},
                          {"super_threshold_empty", m.super_threshold_empty}};
}

void save_model(const Mlp& mlp, const std::filesystem::path& path,
                std::uint64_t config_seed) {
    std::string buf;
    buf.append(kModelMagic, sizeof kModelMagic);
    append_u32le(buf, kModelVersion);

    const nlohmann::json header{
        {"layer_sizes", mlp.layer_sizes},
        {"output_activation", output_activation_name(mlp.output_activation)},
        {"seed_lineage", {{"config_seed", config_seed}, {"init_stream", kInitStream}}}};
    const std::string meta = header.dump();
    append_u64le(buf, meta.size());
    buf.append(meta);

    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        for (double w : mlp.weights[l]) append_f32le(buf, static_cast<float>(w));
        for (double b : mlp.biases[l]) append_f32le(buf, static_cast<float>(b));
    }
    write_file(path, buf);
}

Mlp load_model(const std::filesystem::path& path) {
    const std::string buf = read_file(path);
    if (buf.size() < sizeof kModelMagic + 4 + 8)
        throw FormatError("model file too short: " + path.string());
    if (std::memcmp(buf.data(), kModelMagic, sizeof kModelMagic) != 0)
        throw FormatError("bad model magic: " + path.string());

    std::size_t pos = sizeof kModelMagic;
    const std::uint32_t version = read_u32le(buf, pos);
    if (version != kModelVersion)
        throw FormatError("unsupported model version " + std::to_string(version));

    const std::uint64_t meta_len = read_u64le(buf, pos);
    if (pos + meta_len > buf.size()) throw FormatError("truncated model header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(buf.substr(pos, meta_len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad model header: ") + e.what());
    }
    pos += meta_len;

    Mlp mlp;
    try {
        header.at("layer_sizes").get_to(mlp.layer_sizes);
        mlp.output_activation =
            output_activation_from_name(header.at("output_activation").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad model header: ") + e.what());
    }
    if (mlp.layer_sizes.size() < 2) throw FormatError("bad model header: layer sizes");

    for (std::size_t l = 0; l + 1 < mlp.layer_sizes.size(); ++l) {
        const std::size_t in = static_cast<std::size_t>(mlp.layer_sizes[l]);
        const std::size_t out = static_cast<std::size_t>(mlp.layer_sizes[l + 1]);
        std::vector<double> w(in * out);
        for (auto& v : w) v = static_cast<double>(read_f32le(buf, pos));
        std::vector<double> b(out);
        for (auto& v : b) v = static_cast<double>(read_f32le(buf, pos));
        mlp.weights.push_back(std::move(w));
        mlp.biases.push_back(std::move(b));
    }
    if (pos != buf.size()) throw FormatError("model payload length mismatch");
    return mlp;
}

void write_loss_curve_csv(std::ostream& os, std::span<const EpochStats> curve) {
    os << "epoch,train_loss,val_loss\n";
    for (const auto& e : curve) {
        os << e.epoch << ',' << format_double(e.train_loss) << ',';
        if (e.val_loss) os << format_double(*e.val_loss);
        os << '\n';
    }
}

}  // namespace fblearn
