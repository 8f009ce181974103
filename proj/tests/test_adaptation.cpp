#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "binid/adaptation.hpp"
#include "binid/normal.hpp"
#include "binid/rng.hpp"

using binid::AffineRegressorBuilder;
using binid::ControlDecision;
using binid::SplitMix64;
using binid::TrackingMetrics;
using binid::Vec;

TEST_CASE("predictor is the inner product plus the conditional mean", "[adaptation]")
{
    CHECK(binid::predict({1.0, -1.0}, {1.0, 2.0}, 0.0) == Catch::Approx(-1.0));
    CHECK(binid::predict({0.0, 0.0}, {3.0, 7.0}, 0.25) == Catch::Approx(0.25));
    CHECK(binid::predict({1.0, 1.0}, {1.0, 0.0}, 0.0) == Catch::Approx(1.0));
    CHECK_THROWS_AS(binid::predict({1.0}, {1.0, 2.0}, 0.0), binid::DimensionMismatch);
}

TEST_CASE("regret is the squared prediction gap", "[adaptation]")
{
    CHECK(binid::regret({0.7, -0.2}, {0.7, -0.2}, {1.0, 5.0}) == 0.0);
    // error vector (−0.5, 0.5) is orthogonal to (1, 1)
    CHECK(binid::regret({0.5, -0.5}, {1.0, -1.0}, {1.0, 1.0}) == Catch::Approx(0.0).margin(1e-15));
    CHECK(binid::regret({0.5, -0.5}, {1.0, -1.0}, {1.0, 0.0}) == Catch::Approx(0.25));
    CHECK_THROWS_AS(binid::regret({1.0}, {1.0, 2.0}, {1.0, 0.0}), binid::DimensionMismatch);
}

TEST_CASE("certainty-equivalence input", "[adaptation]")
{
    const AffineRegressorBuilder builder({1.0, 0.0}, {0.0, 1.0});
    const ControlDecision d1 = binid::control_input({1.0, 1.0}, builder, 1.0, 0.0, 0.3);
    CHECK(d1.u == Catch::Approx(0.0));
    CHECK_FALSE(d1.clamped);

    const ControlDecision d2 = binid::control_input({0.5, 0.8}, builder, 1.0, 0.0, 0.3);
    CHECK(d2.u == Catch::Approx(0.625));
    CHECK_FALSE(d2.clamped);

    const ControlDecision d3 = binid::control_input({0.5, 0.0}, builder, 1.0, 0.0, 0.3);
    CHECK(d3.clamped);
    CHECK(d3.u == Catch::Approx((1.0 - 0.5) / 0.3)); // sign(0) := +1

    const ControlDecision d4 = binid::control_input({0.5, -0.1}, builder, 1.0, 0.0, 0.3);
    CHECK(d4.clamped);
    CHECK(d4.u == Catch::Approx((1.0 - 0.5) / -0.3));
}

TEST_CASE("unclamped control tracks the reference exactly", "[adaptation]")
{
    const AffineRegressorBuilder builder({1.0, 0.0}, {0.0, 1.0});
    SplitMix64 rng(8);
    for (int i = 0; i < 300; ++i) {
        const Vec theta_hat = {4.0 * rng.uniform01() - 2.0,
                               (rng.uniform01() < 0.5 ? -1.0 : 1.0) * (0.3 + rng.uniform01())};
        const double y_star = 4.0 * rng.uniform01() - 2.0;
        const double mean = rng.uniform01() - 0.5;
        const ControlDecision d = binid::control_input(theta_hat, builder, y_star, mean, 0.3);
        REQUIRE_FALSE(d.clamped);
        const double yhat = binid::predict(theta_hat, builder.phi(d.u), mean);
        REQUIRE(std::abs(yhat - y_star) <= 1e-12);
    }
}

TEST_CASE("per-step tracking-error decomposition", "[adaptation]")
{
    // with u chosen by the controller, y - y* = phi'(theta - theta_hat) + xi
    const AffineRegressorBuilder builder({1.0, 0.0}, {0.0, 1.0});
    SplitMix64 rng(9);
    for (int i = 0; i < 300; ++i) {
        const Vec theta = {rng.uniform01(), 0.3 + rng.uniform01()};
        const Vec theta_hat = {rng.uniform01(), 0.3 + rng.uniform01()};
        const double mean = 0.2 * (rng.uniform01() - 0.5);
        const double v = binid::normal_quantile(rng.uniform01()) + mean;
        const double y_star = 1.0;
        const ControlDecision d = binid::control_input(theta_hat, builder, y_star, mean, 0.3);
        REQUIRE_FALSE(d.clamped);
        const Vec phi = builder.phi(d.u);
        const double y = binid::dot(phi, theta) + v;
        const double xi = v - mean;
        const double r = binid::regret(theta, theta_hat, phi);
        const double gap = binid::dot(phi, binid::sub(theta, theta_hat));
        const double lhs = (y - y_star) * (y - y_star);
        const double rhs = r + xi * xi + 2.0 * gap * xi;
        REQUIRE(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("a box lower bound at the gain floor never clamps", "[adaptation]")
{
    const AffineRegressorBuilder builder({1.0, 0.0}, {0.0, 1.0});
    SplitMix64 rng(10);
    for (int i = 0; i < 200; ++i) {
        // gain coordinate confined to [0.3, 2] as in the tracking experiment box
        const Vec theta_hat = {4.0 * rng.uniform01() - 2.0, 0.3 + 1.7 * rng.uniform01()};
        const ControlDecision d = binid::control_input(theta_hat, builder, 1.0, 0.0, 0.3);
        REQUIRE_FALSE(d.clamped);
    }
}

TEST_CASE("tracking metrics accumulate J, G and L", "[adaptation]")
{
    TrackingMetrics perfect;
    for (long k = 1; k <= 10; ++k)
        perfect.update(k, 1.0, 1.0, 1.0, 0.0, 0.0);
    CHECK(perfect.j().value() == 0.0);
    CHECK(perfect.g().value() == 0.0);

    TrackingMetrics single;
    single.update(1, 3.0, 1.0, 1.0, 0.0, 0.0);
    CHECK(single.j().value() == Catch::Approx(4.0));
    CHECK_FALSE(single.g().has_value());
    CHECK_FALSE(single.l().has_value());

    TrackingMetrics m;
    m.update(1, 2.0, 1.0, 1.0, 0.5, 0.1);
    m.update(2, 1.0, 1.0, 1.0, 0.25, 0.05);
    m.update(3, 0.0, 1.0, 1.0, 0.125, 0.025);
    CHECK(m.n() == 3);
    CHECK(m.j().value() == Catch::Approx(2.0 / 3.0));
    CHECK(m.regret_sum() == Catch::Approx(0.875));
    CHECK(m.g().value() ==
          Catch::Approx(0.025 * std::sqrt(3.0) / std::log(3.0)).margin(1e-15));
    CHECK(m.l().value() ==
          Catch::Approx(std::abs(2.0 / 3.0 - 1.0) * std::sqrt(3.0 / std::log(std::log(3.0))))
              .margin(1e-12));

    CHECK_THROWS_AS(m.update(5, 0.0, 0.0, 0.0, 0.0, 0.0), binid::InvalidConfig);
}

TEST_CASE("prediction-only metrics leave J and L undefined", "[adaptation]")
{
    TrackingMetrics m;
    for (long k = 1; k <= 5; ++k)
        m.update_prediction(k, 1.0, 0.1, 0.2);
    CHECK_FALSE(m.j().has_value());
    CHECK_FALSE(m.l().has_value());
    CHECK(m.g().has_value());
    CHECK(m.regret_sum() == Catch::Approx(0.5));
}

TEST_CASE("builder validates its shape", "[adaptation]")
{
    CHECK_THROWS_AS(AffineRegressorBuilder({1.0, 0.0}, {0.0}), binid::DimensionMismatch);
    CHECK_THROWS_AS(AffineRegressorBuilder({1.0, 0.0}, {0.0, 0.0}), binid::InvalidConfig);
    const AffineRegressorBuilder b({1.0, 0.0}, {0.0, 1.0});
    CHECK(b.phi(0.625) == Vec{1.0, 0.625});
}
