#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace fblearn {

// Error magnitude x ~ Uniform(theta1, 1); its proportional inverse is
// y = theta1/x, the detector target on super-threshold errors.
struct UniformErrorModel {
    explicit UniformErrorModel(double theta1_) : theta1(theta1_) {
        if (!(theta1 > 0.0 && theta1 < 1.0))
            throw std::invalid_argument("UniformErrorModel: theta1 must lie in (0,1)");
    }

    double theta1;
};

struct MomentSet {
    double mean_x = 0.0;
    double var_x = 0.0;
    double mean_y = 0.0;
    double var_y = 0.0;
    double cov_xy = 0.0;
    double corr_xy = 0.0;
};

// Density of y = theta1/x: (theta1/(1-theta1))/y^2 on (theta1, 1), else 0.
double inverse_pdf(double y, const UniformErrorModel& model);

// Exact moments of (x, y). cov uses E[xy] = theta1 (x*y is identically theta1).
MomentSet closed_form_moments(const UniformErrorModel& model);

// Sample moments from n deterministic draws (unbiased n-1 estimators).
// Throws std::invalid_argument when n < 2.
MomentSet monte_carlo_moments(const UniformErrorModel& model, std::uint64_t n,
                              std::uint64_t seed);

// Small-theta1 limit of the correlation: (theta1*ln(theta1)/2)/sqrt(theta1/12).
double asymptotic_corr(const UniformErrorModel& model);

struct CorrScanRow {
    double theta1 = 0.0;
    double exact_corr = 0.0;
    double asymptotic_corr = 0.0;
    double mc_corr = 0.0;
    std::uint64_t mc_n = 0;
    std::uint64_t seed = 0;
};

// One row per theta1; row i uses the Monte Carlo substream (seed, i).
// Throws std::invalid_argument on an empty grid or out-of-range entries.
std::vector<CorrScanRow> corr_scan(std::span<const double> theta1_grid,
                                   std::uint64_t mc_n, std::uint64_t seed);

// Header: theta1,exact_corr,asymptotic_corr,mc_corr,mc_n,seed
void write_corr_scan_csv(std::ostream& os, std::span<const CorrScanRow> rows);

// Sample Pearson correlation; NaN when n < 2 or either variance is zero.
// Equal inputs (bitwise) yield exactly 1.0.
double pearson_corr(std::span<const double> x, std::span<const double> y);

}  // namespace fblearn
