#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fblearn/feedback.hpp"
#include "fblearn/rng.hpp"

using namespace fblearn;

TEST_CASE("Threshold validates its range") {
    CHECK_THROWS_AS(Threshold(0.0), std::invalid_argument);
    CHECK_THROWS_AS(Threshold(1.0), std::invalid_argument);
    CHECK_THROWS_AS(Threshold(-0.1), std::invalid_argument);
    CHECK(Threshold(0.05).value() == 0.05);
}

TEST_CASE("detector_target point examples") {
    const Threshold t(0.05);
    CHECK(detector_target(0.25, t) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(detector_target(0.01, t) == 1.0);
    CHECK(detector_target(0.05, t) == 1.0);  // boundary: theta1/theta1
    CHECK(detector_target(0.0, t) == 1.0);   // zero error hits the truncation branch
    CHECK_THROWS_AS(detector_target(-0.1, t), std::invalid_argument);
}

TEST_CASE("detector_target saturates exactly when the error is tolerated") {
    Xoshiro256pp rng(7101);
    for (int i = 0; i < 20000; ++i) {
        const Threshold t(rng.uniform(0.01, 0.99));
        const double e = rng.uniform(0.0, 2.0);
        const double d = detector_target(e, t);
        CHECK(d > 0.0);
        CHECK(d <= 1.0);
        if (e <= t.value())
            CHECK(d == 1.0);
        else
            CHECK(d < 1.0);
    }
}

TEST_CASE("detector_target_map examples") {
    const Threshold t01(0.1);
    const Grid truth(2, 2, {0.2, 0.2, 0.2, 0.2});

    SUBCASE("zero error everywhere gives the all-ones map") {
        const Grid ones = detector_target_map(truth, truth, t01);
        for (std::size_t i = 0; i < ones.size(); ++i) CHECK(ones[i] == 1.0);
    }

    SUBCASE("single pixel") {
        const Grid a(1, 1, {0.9}), b(1, 1, {0.4});
        const Grid d = detector_target_map(a, b, Threshold(0.05));
        CHECK(d[0] == doctest::Approx(0.1).epsilon(1e-15));
    }

    SUBCASE("2x2 elementwise") {
        const Grid pred(2, 2, {0.2, 0.3, 0.5, 0.2});
        const Grid d = detector_target_map(truth, pred, t01);
        CHECK(d[0] == 1.0);
        CHECK(d[1] == 1.0);  // |0.2-0.3| <= 0.1
        CHECK(d[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(d[3] == 1.0);
    }

    SUBCASE("shape mismatch is rejected") {
        const Grid wide(4, 1, {0.0, 0.0, 0.0, 0.0});
        CHECK_THROWS_AS(detector_target_map(truth, wide, t01), std::invalid_argument);
    }
}

TEST_CASE("err_from_detector examples and monotonicity") {
    CHECK(err_from_detector(1.0, Threshold(0.05)) == 0.0);
    CHECK(err_from_detector(0.2, Threshold(0.05)) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(err_from_detector(0.5, Threshold(0.1)) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK_THROWS_AS(err_from_detector(0.0, Threshold(0.1)), std::domain_error);
    CHECK_THROWS_AS(err_from_detector(-0.5, Threshold(0.1)), std::domain_error);

    // strictly decreasing in phi
    Xoshiro256pp rng(7102);
    const Threshold t(0.07);
    for (int i = 0; i < 1000; ++i) {
        const double a = rng.uniform(1e-6, 1.0);
        const double b = rng.uniform(1e-6, 1.0);
        if (a == b) continue;
        const double lo = std::min(a, b), hi = std::max(a, b);
        CHECK(err_from_detector(lo, t) > err_from_detector(hi, t));
    }
}

TEST_CASE("round trip recovers the super-threshold error") {
    Xoshiro256pp rng(7103);
    for (int i = 0; i < 10000; ++i) {
        const Threshold t(rng.uniform(0.01, 0.99));
        const double e = rng.uniform(0.0, 2.0);
        const double recovered = err_from_detector(detector_target(e, t), t);
        if (e <= t.value())
            CHECK(recovered == 0.0);
        else
            CHECK(std::abs(recovered - (e - t.value())) < 1e-12);
    }
}

TEST_CASE("compensate point examples") {
    CHECK(compensate(0.5, 0.7) == 0.5);
    CHECK(compensate(0.3, 0.0) == 0.3);
    CHECK(compensate(0.2, 0.1) == doctest::Approx(0.14).epsilon(1e-15));
    CHECK(compensate(0.8, 0.1) == doctest::Approx(0.86).epsilon(1e-15));
}

TEST_CASE("compensate fixed point and identity are exact") {
    Xoshiro256pp rng(7104);
    for (int i = 0; i < 5000; ++i) {
        const double err = rng.uniform(0.0, 3.0);
        const double p = rng.uniform01();
        CHECK(compensate(0.5, err) == 0.5);
        CHECK(compensate(p, 0.0) == p);
    }
}

TEST_CASE("compensate is affine in err with slope -(1-2p)") {
    Xoshiro256pp rng(7105);
    for (int i = 0; i < 2000; ++i) {
        const double p = rng.uniform01();
        const double e1 = rng.uniform(0.0, 1.0);
        const double e2 = rng.uniform(0.0, 1.0);
        if (e1 == e2) continue;
        const double slope = (compensate(p, e2) - compensate(p, e1)) / (e2 - e1);
        CHECK(std::abs(slope + (1.0 - 2.0 * p)) < 1e-9);
    }
}

TEST_CASE("compensate_clamped stays inside the intensity range") {
    CHECK(compensate_clamped(0.9, 2.0) == 1.0);  // raw value 2.5
    CHECK(compensate_clamped(0.1, 2.0) == 0.0);  // raw value -1.5
    Xoshiro256pp rng(7106);
    for (int i = 0; i < 5000; ++i) {
        const double v = compensate_clamped(rng.uniform01(), rng.uniform(0.0, 5.0));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("sign-aligned improvement under a perfect detector") {
    // When sign(phi1 - truth) == sign(1 - 2*phi1) and the detector is exact,
    // the pointwise deviation shrinks to |e| - err*|1 - 2*phi1|, strictly so
    // for super-threshold errors with phi1 != 0.5.
    Xoshiro256pp rng(7107);
    int strict = 0;
    for (int i = 0; i < 20000; ++i) {
        const Threshold t(rng.uniform(0.01, 0.3));
        const double p = rng.uniform01();
        if (std::abs(p - 0.5) < 1e-12) continue;
        const double mag = p < 0.5 ? rng.uniform(0.0, p) : rng.uniform(0.0, 1.0 - p);
        const double truth = p < 0.5 ? p - mag : p + mag;  // aligned by construction
        const double e_signed = p - truth;
        const double err = err_from_detector(detector_target(std::abs(e_signed), t), t);
        const double after = std::abs(compensate(p, err) - truth);
        const double predicted = std::abs(e_signed) - err * std::abs(1.0 - 2.0 * p);
        CHECK(std::abs(after - predicted) < 1e-12);
        CHECK(after <= std::abs(e_signed) + 1e-15);
        if (std::abs(e_signed) > t.value() && err > 0.0) {
            CHECK(after < std::abs(e_signed));
            ++strict;
        }
        // clamping never engages in the aligned regime
        CHECK(compensate_clamped(p, err) == clamp01(compensate(p, err)));
        if (std::abs(e_signed) > 0.0)
            CHECK(compensate_clamped(p, err) == compensate(p, err));
    }
    CHECK(strict > 1000);  // the generator exercises the strict branch
}

TEST_CASE("compensate_map examples") {
    const Threshold t(0.05);

    SUBCASE("all-ones detector is the identity") {
        const Grid phi1(3, 2, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
        const Grid ones(3, 2, 1.0);
        CHECK(compensate_map(phi1, ones, t) == phi1);
    }

    SUBCASE("0.5 is a fixed point regardless of the detector") {
        const Grid phi1(2, 1, {0.5, 0.5});
        const Grid det(2, 1, {0.1, 0.9});
        const Grid out = compensate_map(phi1, det, t);
        CHECK(out[0] == 0.5);
        CHECK(out[1] == 0.5);
    }

    SUBCASE("single pixel compensation") {
        const Grid phi1(1, 1, {0.2});
        const Grid det(1, 1, {0.2});
        const Grid out = compensate_map(phi1, det, t);
        CHECK(out[0] == doctest::Approx(0.08).epsilon(1e-12));
    }

    SUBCASE("underflowed detector values are clamped before dividing") {
        const Grid phi1(1, 1, {0.4});
        const Grid det(1, 1, {1e-300});
        const Grid out = compensate_map(phi1, det, t);  // err large but finite
        CHECK(std::isfinite(out[0]));
        CHECK(out[0] == 0.0);  // clamped after the large downward push
    }

    SUBCASE("shape mismatch is rejected") {
        CHECK_THROWS_AS(compensate_map(Grid(2, 1, 0.5), Grid(1, 2, 1.0), t),
                        std::invalid_argument);
    }
}

TEST_CASE("operations are pure: repeated calls are bit-identical") {
    const Threshold t(0.03);
    Xoshiro256pp rng(7108);
    std::vector<double> values(64);
    for (auto& v : values) v = rng.uniform01();
    const Grid truth(8, 8, values);
    for (auto& v : values) v = rng.uniform01();
    const Grid pred(8, 8, values);

    const Grid d1 = detector_target_map(truth, pred, t);
    const Grid d2 = detector_target_map(truth, pred, t);
    CHECK(d1 == d2);
    CHECK(compensate_map(pred, d1, t) == compensate_map(pred, d2, t));
}
