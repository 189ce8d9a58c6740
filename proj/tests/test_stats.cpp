#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fblearn/stats.hpp"
#include "fblearn/rng.hpp"
#include "oracles.hpp"

using namespace fblearn;

TEST_CASE("UniformErrorModel validates theta1") {
    CHECK_THROWS_AS(UniformErrorModel(0.0), std::invalid_argument);
    CHECK_THROWS_AS(UniformErrorModel(1.0), std::invalid_argument);
    CHECK(UniformErrorModel(0.3).theta1 == 0.3);
}

TEST_CASE("inverse_pdf point values and support") {
    CHECK(inverse_pdf(1.0, UniformErrorModel(0.5)) == 1.0);
    CHECK(inverse_pdf(0.05, UniformErrorModel(0.1)) == 0.0);   // below support
    CHECK(inverse_pdf(0.1, UniformErrorModel(0.1)) == 0.0);    // at the open lower end
    CHECK(inverse_pdf(1.5, UniformErrorModel(0.1)) == 0.0);    // above support
    CHECK(inverse_pdf(0.5, UniformErrorModel(0.1)) ==
          doctest::Approx((0.1 / 0.9) / 0.25).epsilon(1e-15));
}

TEST_CASE("inverse_pdf integrates to 1 by adaptive quadrature") {
    for (double theta1 : {0.9, 0.5, 0.3, 0.1, 0.01, 1e-3}) {
        const UniformErrorModel model(theta1);
        const double integral = oracles::adaptive_simpson(
            [&](double y) { return inverse_pdf(y, model); }, theta1, 1.0, 1e-10);
        CHECK(std::abs(integral - 1.0) < 1e-9);
    }
}

TEST_CASE("closed-form moments at theta1 = 0.1") {
    const MomentSet m = closed_form_moments(UniformErrorModel(0.1));
    CHECK(m.mean_x == 0.55);
    CHECK(m.var_x == 0.0675);
    CHECK(std::abs(m.mean_y - 0.2558428) < 1e-6);
    CHECK(std::abs(m.var_y - 0.0345445) < 1e-6);
    CHECK(std::abs(m.cov_xy - (-0.0407135)) < 1e-6);
    CHECK(std::abs(m.corr_xy - (-0.843136)) < 1e-6);
}

TEST_CASE("closed-form correlation at theta1 = 0.01") {
    const MomentSet m = closed_form_moments(UniformErrorModel(0.01));
    CHECK(std::abs(m.corr_xy - (-0.5334)) < 2e-4);
}

TEST_CASE("variance collapses as theta1 approaches 1") {
    CHECK(closed_form_moments(UniformErrorModel(0.999999)).var_x < 1e-12);
}

TEST_CASE("closed-form cov equals theta1 - mean_x*mean_y") {
    for (double theta1 : {0.5, 0.2, 0.1, 0.05, 0.01, 1e-4}) {
        const MomentSet m = closed_form_moments(UniformErrorModel(theta1));
        CHECK(std::abs(m.cov_xy - (theta1 - m.mean_x * m.mean_y)) < 1e-12);
    }
}

TEST_CASE("closed-form moments match quadrature of the densities") {
    for (double theta1 : {0.3, 0.1, 0.05}) {
        const UniformErrorModel model(theta1);
        const MomentSet m = closed_form_moments(model);
        const double px = 1.0 / (1.0 - theta1);

        const double mean_x = oracles::adaptive_simpson(
            [&](double x) { return x * px; }, theta1, 1.0);
        const double ex2 = oracles::adaptive_simpson(
            [&](double x) { return x * x * px; }, theta1, 1.0);
        const double mean_y = oracles::adaptive_simpson(
            [&](double x) { return theta1 / x * px; }, theta1, 1.0);
        const double ey2 = oracles::adaptive_simpson(
            [&](double x) { return (theta1 / x) * (theta1 / x) * px; }, theta1, 1.0);
        const double exy = oracles::adaptive_simpson(
            [&](double x) { return x * (theta1 / x) * px; }, theta1, 1.0);

        CHECK(std::abs(m.mean_x - mean_x) < 1e-9);
        CHECK(std::abs(m.var_x - (ex2 - mean_x * mean_x)) < 1e-9);
        CHECK(std::abs(m.mean_y - mean_y) < 1e-9);
        CHECK(std::abs(m.var_y - (ey2 - mean_y * mean_y)) < 1e-9);
        CHECK(std::abs(m.cov_xy - (exy - mean_x * mean_y)) < 1e-9);
    }
}

TEST_CASE("moment set invariants across a theta1 sweep") {
    for (double theta1 = 0.02; theta1 < 1.0; theta1 += 0.02) {
        const MomentSet m = closed_form_moments(UniformErrorModel(theta1));
        CHECK(m.var_x >= 0.0);
        CHECK(m.var_y >= 0.0);
        CHECK(std::abs(m.corr_xy) <= 1.0 + 1e-9);
        CHECK(m.corr_xy == m.cov_xy / std::sqrt(m.var_x * m.var_y));
    }
}

TEST_CASE("monte_carlo_moments basics") {
    const UniformErrorModel model(0.1);

    SUBCASE("n below 2 is rejected") {
        CHECK_THROWS_AS(monte_carlo_moments(model, 1, 1), std::invalid_argument);
        CHECK_THROWS_AS(monte_carlo_moments(model, 0, 1), std::invalid_argument);
    }

    SUBCASE("n = 2 stays finite; support excludes zero") {
        const MomentSet m = monte_carlo_moments(model, 2, 99);
        CHECK(std::isfinite(m.mean_x));
        CHECK(std::isfinite(m.var_y));
        CHECK(m.mean_x > 0.1);
        CHECK(m.mean_x < 1.0);
    }

    SUBCASE("deterministic given (n, seed)") {
        const MomentSet a = monte_carlo_moments(model, 5000, 1234);
        const MomentSet b = monte_carlo_moments(model, 5000, 1234);
        CHECK(a.mean_x == b.mean_x);
        CHECK(a.var_x == b.var_x);
        CHECK(a.cov_xy == b.cov_xy);
        CHECK(a.corr_xy == b.corr_xy);
        const MomentSet c = monte_carlo_moments(model, 5000, 1235);
        CHECK(a.mean_x != c.mean_x);
    }
}

TEST_CASE("sample mean of x*y equals theta1 up to rounding") {
    // x*y is identically theta1, so the sample mean matches to a few ulps
    // for every draw count.
    for (double theta1 : {0.5, 0.1, 0.01}) {
        for (std::uint64_t n : {2ULL, 100ULL, 10000ULL}) {
            Xoshiro256pp rng(substream(42, n));
            double sum = 0.0;
            for (std::uint64_t i = 0; i < n; ++i) {
                const double x = rng.uniform(theta1, 1.0);
                sum += x * (theta1 / x);
            }
            CHECK(std::abs(sum / static_cast<double>(n) - theta1) < 1e-13 * theta1 + 1e-16);
        }
    }
}

TEST_CASE("Monte Carlo matches closed forms within 1% at n = 10^6") {
    for (double theta1 : {0.2, 0.1, 0.05, 0.01}) {
        const UniformErrorModel model(theta1);
        const MomentSet exact = closed_form_moments(model);
        const MomentSet mc = monte_carlo_moments(model, 1000000, 20260809);
        const auto rel = [](double got, double want) {
            return std::abs(got - want) / std::abs(want);
        };
        CHECK(rel(mc.mean_x, exact.mean_x) < 0.01);
        CHECK(rel(mc.var_x, exact.var_x) < 0.01);
        CHECK(rel(mc.mean_y, exact.mean_y) < 0.01);
        CHECK(rel(mc.var_y, exact.var_y) < 0.01);
        CHECK(rel(mc.cov_xy, exact.cov_xy) < 0.01);
        CHECK(rel(mc.corr_xy, exact.corr_xy) < 0.01);
    }
}

TEST_CASE("Monte Carlo cross-check at n = 10^7 for theta1 = 0.1") {
    const UniformErrorModel model(0.1);
    const MomentSet exact = closed_form_moments(model);
    const MomentSet mc = monte_carlo_moments(model, 10000000, 7);
    CHECK(std::abs(mc.corr_xy - exact.corr_xy) < 3e-3);
    CHECK(std::abs(mc.cov_xy - exact.cov_xy) < 3e-4);
}

TEST_CASE("asymptotic correlation formula") {
    CHECK(std::abs(asymptotic_corr(UniformErrorModel(1e-6)) - (-0.023928)) < 2e-6);
    // theta1 -> 0 drives the limit expression to 0
    CHECK(std::abs(asymptotic_corr(UniformErrorModel(1e-12))) <
          std::abs(asymptotic_corr(UniformErrorModel(1e-6))));
    CHECK(std::abs(asymptotic_corr(UniformErrorModel(1e-15))) < 1e-4);
}

TEST_CASE("exact over asymptotic correlation ratio at theta1 = 1e-12") {
    const UniformErrorModel model(1e-12);
    const double ratio = closed_form_moments(model).corr_xy / asymptotic_corr(model);
    CHECK(ratio > 0.92);
    CHECK(ratio < 0.94);
    CHECK(std::abs(ratio - 0.9276) < 2e-4);
}

TEST_CASE("|exact corr| strictly decreases along theta1 = 10^-k") {
    double prev = 1.0;
    for (int k = 1; k <= 6; ++k) {
        const double corr =
            closed_form_moments(UniformErrorModel(std::pow(10.0, -k))).corr_xy;
        CHECK(std::abs(corr) < prev);
        prev = std::abs(corr);
    }
    CHECK(prev < 0.022);  // |corr(1e-6)|
}

TEST_CASE("corr_scan rows and serialization") {
    SUBCASE("five-point grid decreases in magnitude") {
        const std::vector<double> grid{0.1, 0.01, 1e-3, 1e-4, 1e-6};
        const auto rows = corr_scan(grid, 10000, 5);
        REQUIRE(rows.size() == 5);
        const double expected[] = {-0.843, -0.533, -0.277, -0.125, -0.0205};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(rows[i].theta1 == grid[i]);
            CHECK(std::abs(rows[i].exact_corr - expected[i]) < 1e-3);
            if (i > 0) CHECK(std::abs(rows[i].exact_corr) < std::abs(rows[i - 1].exact_corr));
        }
    }

    SUBCASE("singleton grid") {
        const auto rows = corr_scan(std::vector<double>{0.5}, 1000, 5);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].theta1 == 0.5);
    }

    SUBCASE("empty grid is rejected") {
        CHECK_THROWS_AS(corr_scan(std::vector<double>{}, 1000, 5), std::invalid_argument);
    }

    SUBCASE("csv header and determinism") {
        const auto rows = corr_scan(std::vector<double>{0.1, 0.01}, 2000, 11);
        std::ostringstream a, b;
        write_corr_scan_csv(a, rows);
        write_corr_scan_csv(b, corr_scan(std::vector<double>{0.1, 0.01}, 2000, 11));
        CHECK(a.str() == b.str());
        CHECK(a.str().substr(0, a.str().find('\n')) ==
              "theta1,exact_corr,asymptotic_corr,mc_corr,mc_n,seed");
    }
}

TEST_CASE("pearson_corr") {
    std::vector<double> x;
    Xoshiro256pp rng(555);
    for (int i = 0; i < 1000; ++i) x.push_back(rng.uniform(-3.0, 7.0));

    SUBCASE("identical arrays correlate to exactly 1") {
        const std::vector<double> y = x;
        CHECK(pearson_corr(x, y) == 1.0);
    }

    SUBCASE("negated arrays correlate to exactly -1") {
        std::vector<double> y;
        for (double v : x) y.push_back(-v);
        CHECK(pearson_corr(x, y) == -1.0);
    }
}

TEST_CASE("pearson_corr degenerate cases") {
    const std::vector<double> flat(10, 2.5);
    std::vector<double> x;
    Xoshiro256pp rng(556);
    for (int i = 0; i < 10; ++i) x.push_back(rng.uniform01());
    CHECK(std::isnan(pearson_corr(flat, x)));
    const std::vector<double> one{1.0};
    CHECK(std::isnan(pearson_corr(one, one)));
    CHECK_THROWS_AS(pearson_corr(x, one), std::invalid_argument);
}
