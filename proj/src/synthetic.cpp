#include "fblearn/synthetic.hpp"

#include <cmath>
#include <cstring>

#include "fblearn/io_util.hpp"
#include "fblearn/rng.hpp"

namespace fblearn {

namespace {

constexpr char kDatasetMagic[16] = {'F', 'B', 'L', 'E', 'A', 'R', 'N', '-',
                                    'D', 'A', 'T', 'A', 'S', 'E', 'T', '\0'};
constexpr std::uint32_t kDatasetVersion = 1;

// Backgrounds stay dim so streaks remain the dominant signal in the
// observed patch.
constexpr double kBackgroundAmplitude = 0.3;

void box_blur_3x3(Grid& g) {
    Grid src = g;
    const int w = g.width(), h = g.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sum = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int xx = std::clamp(x + dx, 0, w - 1);
                    const int yy = std::clamp(y + dy, 0, h - 1);
                    sum += src(xx, yy);
                }
            }
            g(x, y) = sum / 9.0;
        }
    }
}

Grid make_background(const DatasetSpec& spec, Xoshiro256pp& rng) {
    Grid g(spec.patch_size, spec.patch_size);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.uniform01();

    const int passes = static_cast<int>(std::lround(spec.background_smoothness));
    for (int p = 0; p < passes; ++p) box_blur_3x3(g);

    double lo = g[0], hi = g[0];
    for (std::size_t i = 0; i < g.size(); ++i) {
        lo = std::min(lo, g[i]);
        hi = std::max(hi, g[i]);
    }
    const double range = hi - lo;
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = range > 0.0 ? (g[i] - lo) / range * kBackgroundAmplitude
                           : kBackgroundAmplitude / 2.0;
    return g;
}

// Deposit one anti-aliased line segment; max-composited so overlaps never
// push intensities past the drawn amplitude.
void draw_streak(Grid& g, double cx, double cy, double angle, double half_len,
                 double amplitude) {
    const double dir_x = std::cos(angle);
    const double dir_y = std::sin(angle);
    const double step = 0.35;
    for (double t = -half_len; t <= half_len; t += step) {
        const double px = cx + t * dir_x;
        const double py = cy + t * dir_y;
        const int x0 = static_cast<int>(std::floor(px));
        const int y0 = static_cast<int>(std::floor(py));
        const double fx = px - x0;
        const double fy = py - y0;
        const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
        const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
        const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
        for (int k = 0; k < 4; ++k) {
            if (xs[k] < 0 || xs[k] >= g.width() || ys[k] < 0 || ys[k] >= g.height()) continue;
            g(xs[k], ys[k]) = std::max(g(xs[k], ys[k]), amplitude * w[k]);
        }
    }
}

Grid make_residual(const DatasetSpec& spec, Xoshiro256pp& rng) {
    Grid g(spec.patch_size, spec.patch_size);
    const int count = rng.uniform_int(spec.streak_count_min, spec.streak_count_max);
    const double size = spec.patch_size;
    for (int i = 0; i < count; ++i) {
        const double cx = rng.uniform(0.0, size);
        const double cy = rng.uniform(0.0, size);
        const double angle = rng.uniform(spec.streak_angle_min, spec.streak_angle_max);
        const double half_len = rng.uniform(0.35, 0.65) * size;
        const double amp = rng.uniform(spec.streak_intensity_min, spec.streak_intensity_max);
        draw_streak(g, cx, cy, angle, half_len, amp);
    }

    // Pull the mean over streak pixels toward the target; the clamp can
    // shift it back slightly, so iterate a few times.
    for (int pass = 0; pass < 3; ++pass) {
        double sum = 0.0;
        std::size_t nz = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g[i] > 0.0) {
                sum += g[i];
                ++nz;
            }
        }
        if (nz == 0) break;
        const double mean = sum / static_cast<double>(nz);
        if (mean <= 0.0) break;
        const double scale = spec.residual_mean_target / mean;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::min(1.0, g[i] * scale);
    }
    return g;
}

void quantize_grid(Grid& g) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = quantize_f32(g[i]);
}

nlohmann::json dataset_metadata(const Dataset& ds) {
    return nlohmann::json{{"spec", ds.spec},
                          {"n", ds.samples.size()},
                          {"seed", ds.seed}};
}

void append_plane(std::string& buf, const Grid& g) {
    for (std::size_t i = 0; i < g.size(); ++i)
        append_f32le(buf, static_cast<float>(g[i]));
}

Grid read_plane(const std::string& buf, std::size_t& pos, int side) {
    Grid g(side, side);
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = static_cast<double>(read_f32le(buf, pos));
    return g;
}

}  // namespace

void DatasetSpec::validate() const {
    if (patch_size < 4)
        throw std::invalid_argument("DatasetSpec: patch_size must be >= 4");
    if (streak_count_min < 0 || streak_count_max < streak_count_min)
        throw std::invalid_argument("DatasetSpec: bad streak count range");
    if (!(streak_intensity_min >= 0.0 && streak_intensity_max <= 1.0 &&
          streak_intensity_min <= streak_intensity_max))
        throw std::invalid_argument("DatasetSpec: intensity range must be ordered within [0,1]");
    if (!(streak_angle_min <= streak_angle_max))
        throw std::invalid_argument("DatasetSpec: bad angle range");
    if (!(background_smoothness >= 0.0))
        throw std::invalid_argument("DatasetSpec: background_smoothness must be >= 0");
    if (!(residual_mean_target > 0.0 && residual_mean_target < 1.0))
        throw std::invalid_argument("DatasetSpec: residual_mean_target must lie in (0,1)");
}

void to_json(nlohmann::json& j, const DatasetSpec& spec) {
    j = nlohmann::json{{"patch_size", spec.patch_size},
                       {"streak_count_range", {spec.streak_count_min, spec.streak_count_max}},
                       {"streak_intensity_range",
                        {spec.streak_intensity_min, spec.streak_intensity_max}},
                       {"streak_angle_range", {spec.streak_angle_min, spec.streak_angle_max}},
                       {"background_smoothness", spec.background_smoothness},
                       {"residual_mean_target", spec.residual_mean_target}};
}

void from_json(const nlohmann::json& j, DatasetSpec& spec) {
    j.at("patch_size").get_to(spec.patch_size);
    spec.streak_count_min = j.at("streak_count_range").at(0).get<int>();
    spec.streak_count_max = j.at("streak_count_range").at(1).get<int>();
    spec.streak_intensity_min = j.at("streak_intensity_range").at(0).get<double>();
    spec.streak_intensity_max = j.at("streak_intensity_range").at(1).get<double>();
    spec.streak_angle_min = j.at("streak_angle_range").at(0).get<double>();
    spec.streak_angle_max = j.at("streak_angle_range").at(1).get<double>();
    j.at("background_smoothness").get_to(spec.background_smoothness);
    j.at("residual_mean_target").get_to(spec.residual_mean_target);
}

Sample generate_sample(const DatasetSpec& spec, std::uint64_t seed) {
    spec.validate();
    Xoshiro256pp rng(seed);

    Sample s;
    s.background = make_background(spec, rng);
    s.residual_truth = make_residual(spec, rng);
    quantize_grid(s.background);
    quantize_grid(s.residual_truth);

    s.observed = Grid(spec.patch_size, spec.patch_size);
    for (std::size_t i = 0; i < s.observed.size(); ++i)
        s.observed[i] = quantize_f32(clamp01(s.background[i] + s.residual_truth[i]));
    return s;
}

Dataset generate_dataset(const DatasetSpec& spec, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("generate_dataset: need n >= 1");
    spec.validate();

    Dataset ds;
    ds.spec = spec;
    ds.seed = seed;
    ds.samples.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        ds.samples.push_back(generate_sample(spec, substream(seed, static_cast<std::uint64_t>(i))));
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::string buf;
    buf.append(kDatasetMagic, sizeof kDatasetMagic);
    append_u32le(buf, kDatasetVersion);

    const std::string meta = dataset_metadata(ds).dump();
    append_u64le(buf, meta.size());
    buf.append(meta);

    for (const auto& s : ds.samples) {
        append_plane(buf, s.observed);
        append_plane(buf, s.residual_truth);
        append_plane(buf, s.background);
    }

    append_u64le(buf, fnv1a64(buf.data(), buf.size()));
    write_file(path, buf);
}

Dataset load_dataset(const std::filesystem::path& path) {
    const std::string buf = read_file(path);

    if (buf.size() < sizeof kDatasetMagic + 4 + 8 + 8)
        throw FormatError("dataset file too short: " + path.string());
    if (std::memcmp(buf.data(), kDatasetMagic, sizeof kDatasetMagic) != 0)
        throw FormatError("bad dataset magic: " + path.string());

    const std::uint64_t stored_checksum = [&] {
        std::size_t pos = buf.size() - 8;
        return read_u64le(buf, pos);
    }();
    if (fnv1a64(buf.data(), buf.size() - 8) != stored_checksum)
        throw FormatError("dataset checksum mismatch: " + path.string());

    std::size_t pos = sizeof kDatasetMagic;
    const std::uint32_t version = read_u32le(buf, pos);
    if (version != kDatasetVersion)
        throw FormatError("unsupported dataset version " + std::to_string(version));

    const std::uint64_t meta_len = read_u64le(buf, pos);
    if (pos + meta_len > buf.size() - 8) throw FormatError("truncated dataset metadata");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(buf.substr(pos, meta_len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad dataset metadata: ") + e.what());
    }
    pos += meta_len;

    Dataset ds;
    std::uint64_t n = 0;
    try {
        ds.spec = meta.at("spec").get<DatasetSpec>();
        n = meta.at("n").get<std::uint64_t>();
        ds.seed = meta.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad dataset metadata: ") + e.what());
    }
    ds.spec.validate();

    const std::size_t plane = static_cast<std::size_t>(ds.spec.patch_size) * ds.spec.patch_size;
    const std::size_t expected = pos + n * plane * 3 * 4 + 8;
    if (buf.size() != expected)
        throw FormatError("dataset payload length mismatch: " + path.string());

    ds.samples.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Sample s;
        s.observed = read_plane(buf, pos, ds.spec.patch_size);
        s.residual_truth = read_plane(buf, pos, ds.spec.patch_size);
        s.background = read_plane(buf, pos, ds.spec.patch_size);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace fblearn
