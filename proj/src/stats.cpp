#include "fblearn/stats.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "fblearn/io_util.hpp"
#include "fblearn/rng.hpp"

namespace fblearn {

double inverse_pdf(double y, const UniformErrorModel& model) {
    const double t = model.theta1;
    if (y <= t || y > 1.0) return 0.0;
    return (t / (1.0 - t)) / (y * y);
}

MomentSet closed_form_moments(const UniformErrorModel& model) {
    const double t = model.theta1;
    const double log_t = std::log(t);

    MomentSet m;
    m.mean_x = (1.0 + t) / 2.0;
    m.var_x = (1.0 - t) * (1.0 - t) / 12.0;
    m.mean_y = t / (1.0 - t) * std::log(1.0 / t);
    const double r = log_t / (1.0 - t);
    m.var_y = t * (1.0 - t * r * r);
    m.cov_xy = t * (1.0 + (1.0 + t) / (2.0 * (1.0 - t)) * log_t);
    m.corr_xy = m.cov_xy / std::sqrt(m.var_x * m.var_y);
    return m;
}

MomentSet monte_carlo_moments(const UniformErrorModel& model, std::uint64_t n,
                              std::uint64_t seed) {
    if (n < 2)
        throw std::invalid_argument("monte_carlo_moments: need n >= 2 for variance");

    Xoshiro256pp rng(seed);
    const double t = model.theta1;

    // Welford-style streaming moments; single fixed accumulation order
    // keeps results identical run to run.
    double mean_x = 0.0, mean_y = 0.0;
    double m2_x = 0.0, m2_y = 0.0, c2_xy = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const double x = rng.uniform(t, 1.0);
        const double y = t / x;
        const double k = 1.0 / static_cast<double>(i + 1);
        const double dx = x - mean_x;
        const double dy = y - mean_y;
        mean_x += dx * k;
        mean_y += dy * k;
        m2_x += dx * (x - mean_x);
        m2_y += dy * (y - mean_y);
        c2_xy += dx * (y - mean_y);
    }

    MomentSet m;
    m.mean_x = mean_x;
    m.mean_y = mean_y;
    const double denom = static_cast<double>(n - 1);
    m.var_x = m2_x / denom;
    m.var_y = m2_y / denom;
    m.cov_xy = c2_xy / denom;
    m.corr_xy = (m.var_x > 0.0 && m.var_y > 0.0)
                    ? m.cov_xy / std::sqrt(m.var_x * m.var_y)
                    : std::numeric_limits<double>::quiet_NaN();
    return m;
}

double asymptotic_corr(const UniformErrorModel& model) {
    const double t = model.theta1;
    return 0.5 * t * std::log(t) / std::sqrt(t / 12.0);
}

std::vector<CorrScanRow> corr_scan(std::span<const double> theta1_grid,
                                   std::uint64_t mc_n, std::uint64_t seed) {
    if (theta1_grid.empty())
        throw std::invalid_argument("corr_scan: empty theta1 grid");

    std::vector<CorrScanRow> rows;
    rows.reserve(theta1_grid.size());
    for (std::size_t i = 0; i < theta1_grid.size(); ++i) {
        const UniformErrorModel model(theta1_grid[i]);
        CorrScanRow row;
        row.theta1 = model.theta1;
        row.exact_corr = closed_form_moments(model).corr_xy;
        row.asymptotic_corr = asymptotic_corr(model);
        row.mc_n = mc_n;
        row.seed = substream(seed, i);
        row.mc_corr = monte_carlo_moments(model, mc_n, row.seed).corr_xy;
        rows.push_back(row);
    }
    return rows;
}

void write_corr_scan_csv(std::ostream& os, std::span<const CorrScanRow> rows) {
    os << "theta1,exact_corr,asymptotic_corr,mc_corr,mc_n,seed\n";
    for (const auto& r : rows) {
        os << format_double(r.theta1) << ',' << format_double(r.exact_corr) << ','
           << format_double(r.asymptotic_corr) << ',' << format_double(r.mc_corr) << ','
           << r.mc_n << ',' << r.seed << '\n';
    }
}

double pearson_corr(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw std::invalid_argument("pearson_corr: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();

    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace fblearn
