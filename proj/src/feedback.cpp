#include "fblearn/feedback.hpp"

#include <cmath>

namespace fblearn {

double detector_target(double abs_err, Threshold theta1) {
    if (abs_err < 0.0)
        throw std::invalid_argument("detector_target: abs_err must be >= 0");
    const double t = theta1.value();
    if (abs_err <= t) return 1.0;
    return t / abs_err;
}

Grid detector_target_map(const Grid& residual_truth, const Grid& residual_pred,
                         Threshold theta1) {
    require_same_shape(residual_truth, residual_pred, "detector_target_map");
    Grid out(residual_truth.width(), residual_truth.height());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = detector_target(std::abs(residual_truth[i] - residual_pred[i]), theta1);
    return out;
}

double err_from_detector(double phi, Threshold theta1) {
    if (phi <= 0.0)
        throw std::domain_error("err_from_detector: phi must be positive");
    const double t = theta1.value();
    return t / phi - t;
}

double compensate(double phi1, double err) {
    return phi1 - err * (1.0 - 2.0 * phi1);
}

double compensate_clamped(double phi1, double err) {
    return clamp01(compensate(phi1, err));
}

Grid compensate_map(const Grid& phi1_map, const Grid& detector_map, Threshold theta1) {
    require_same_shape(phi1_map, detector_map, "compensate_map");
    Grid out(phi1_map.width(), phi1_map.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double phi = std::clamp(detector_map[i], kDetectorFloor, 1.0);
        out[i] = compensate_clamped(phi1_map[i], err_from_detector(phi, theta1));
    }
    return out;
}

}  // namespace fblearn
