#pragma once

#include "fblearn/grid.hpp"

namespace fblearn {

// Detector outputs are clamped to [kDetectorFloor, 1] before the error
// recovery division; learned outputs can underflow toward 0.
inline constexpr double kDetectorFloor = 1e-6;

// Tolerance threshold for residual map errors, strictly inside (0,1).
class Threshold {
public:
    explicit Threshold(double theta1) : theta1_(theta1) {
        if (!(theta1 > 0.0 && theta1 < 1.0))
            throw std::invalid_argument("Threshold: theta1 must lie in (0,1)");
    }

    double value() const { return theta1_; }

private:
    double theta1_;
};

// Training target for the error detector: min(1, theta1/abs_err).
// The truncation branch handles abs_err <= theta1, including abs_err == 0.
double detector_target(double abs_err, Threshold theta1);

// Elementwise detector_target(|residual_truth - residual_pred|).
Grid detector_target_map(const Grid& residual_truth, const Grid& residual_pred,
                         Threshold theta1);

// Recovered error magnitude theta1/phi - theta1; zero iff phi == 1.
// phi must be positive (callers clamp to [kDetectorFloor, 1] first).
double err_from_detector(double phi, Threshold theta1);

// Compensation update phi1 - err*(1 - 2*phi1). Raw variant; may leave [0,1].
double compensate(double phi1, double err);

// Same update clamped back into [0,1], the residual intensity range.
double compensate_clamped(double phi1, double err);

// Elementwise err_from_detector (after the clamping guard) followed by the
// clamped compensation update. Output is a valid residual map.
Grid compensate_map(const Grid& phi1_map, const Grid& detector_map, Threshold theta1);

}  // namespace fblearn
