#include "lgspec/models.hpp"
#include "lgspec/resampling.hpp"
#include "lgspec/spectral.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace lgspec {
namespace {

double mean(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x)
        s += v;
    return s / static_cast<double>(x.size());
}

TEST(Rng, ReplicateStreamsReproducible)
{
    Rng a = replicate_rng(42, 3), b = replicate_rng(42, 3), c = replicate_rng(42, 4);
    const auto x = a(), y = b(), w = c();
    EXPECT_EQ(x, y);
    EXPECT_NE(x, w);
}

TEST(WhiteNoise, MomentsAndReproducibility)
{
    Rng a = replicate_rng(1, 0), b = replicate_rng(1, 0);
    const auto y = simulate_gaussian_wn(1974, a);
    EXPECT_EQ(y, simulate_gaussian_wn(1974, b));
    EXPECT_NEAR(mean(y.values()), 0.0, 0.07);
    EXPECT_NEAR(sample_autocorrelation(y.values(), 1)[0], 0.0, 0.07);
}

TEST(Ar1, LagOneCorrelation)
{
    Rng rng = replicate_rng(2, 0);
    const auto y = simulate_gaussian_ar1(0.5, 5000, rng);
    EXPECT_NEAR(sample_autocorrelation(y.values(), 1)[0], 0.5, 0.05);
    EXPECT_THROW(simulate_gaussian_ar1(1.0, 10, rng), UsageError);
}

TEST(Cosine, NoiselessStaysInUnitRange)
{
    Rng rng = replicate_rng(3, 0);
    const auto y = simulate_cosine({0.302, 0.0}, 500, rng);
    for (double v : y.values()) {
        EXPECT_LE(v, 1.0);
        EXPECT_GE(v, -1.0);
    }
}

TEST(Cosine, QuarterCycleWithZeroPhase)
{
    Rng rng = replicate_rng(3, 0);
    const auto y = simulate_cosine({0.25, 0.0}, 8, rng, 0.0);
    const double expected[] = {1, 0, -1, 0, 1, 0, -1, 0};
    for (std::size_t t = 0; t < 8; ++t)
        EXPECT_NEAR(y[t], expected[t], 1e-12);
}

TEST(Cosine, Validation)
{
    Rng rng = replicate_rng(3, 0);
    EXPECT_THROW(simulate_cosine({0.6, 1.0}, 10, rng), UsageError);
    EXPECT_THROW(simulate_cosine({0.3, -1.0}, 10, rng), UsageError);
}

TEST(Cosine, GlobalPeakNearFrequency)
{
    std::vector<double> peaks;
    const auto grid = FrequencyGrid::uniform();
    for (std::uint64_t r = 0; r < 20; ++r) {
        Rng rng = replicate_rng(4, r);
        const auto z = normalize(simulate_cosine({}, 1974, rng));
        const auto re = global_spectrum(z, {}, grid).real();
        peaks.push_back(grid[static_cast<std::size_t>(
            std::max_element(re.begin(), re.end()) - re.begin())]);
    }
    EXPECT_NEAR(oracle::median(peaks), 0.302, 0.02);
}

TEST(LocalTrig, SingleComponentIsACosine)
{
    LocalTrigModel m;
    m.levels = {0.5, -1.0};
    m.amplitudes = {2.0, 1.0};
    m.frequencies = {0.13, 0.4};
    m.probabilities = {1.0, 0.0};
    Rng rng = replicate_rng(5, 0);
    const auto y = simulate_local_trig(m, 300, rng);
    // c_t = (y_t - L) / A satisfies c_{t+1} + c_{t-1} = 2 cos(2 pi alpha) c_t
    const double k = 2.0 * std::cos(2.0 * std::numbers::pi * 0.13);
    for (std::size_t t = 1; t + 1 < y.size(); ++t) {
        const double prev = (y[t - 1] - 0.5) / 2.0, cur = (y[t] - 0.5) / 2.0,
                     next = (y[t + 1] - 0.5) / 2.0;
        EXPECT_NEAR(next + prev, k * cur, 1e-10);
        EXPECT_LE(std::abs(cur), 1.0 + 1e-12);
    }
}

TEST(LocalTrig, ValuesInsideComponentRanges)
{
    const auto m = LocalTrigModel::standard();
    Rng rng = replicate_rng(6, 0);
    const auto y = simulate_local_trig(m, 2000, rng);
    for (double v : y.values()) {
        bool inside = false;
        for (std::size_t i = 0; i < m.components(); ++i)
            inside |= std::abs(v - m.levels[i]) <= m.max_amplitude(i) + 1e-12;
        EXPECT_TRUE(inside) << v;
    }
}

TEST(LocalTrig, QuantilesNearLevels)
{
    Rng rng = replicate_rng(7, 0);
    const auto y = simulate_local_trig(LocalTrigModel::standard(), 1974, rng);
    std::vector<double> v(y.values().begin(), y.values().end());
    EXPECT_NEAR(quantile_type7(v, 0.1), -1.0, 0.4);
    EXPECT_NEAR(quantile_type7(v, 0.5), 0.0, 0.2);
    EXPECT_NEAR(quantile_type7(v, 0.9), 1.0, 0.4);
}

TEST(LocalTrig, Validation)
{
    auto m = LocalTrigModel::standard();
    m.probabilities = {0.05, 0.28, 0.33, 0.33};
    EXPECT_THROW(m.validate(), UsageError);
    m = LocalTrigModel::standard();
    m.frequencies.pop_back();
    EXPECT_THROW(m.validate(), UsageError);
    EXPECT_NO_THROW(LocalTrigModel::standard().validate());
}

TEST(ApArch, NoDynamicsIsScaledNoise)
{
    ApArchModel m;
    m.alpha0 = 0.25;
    m.delta = 1.5;
    Rng a = replicate_rng(8, 0), b = replicate_rng(8, 0);
    const auto y = simulate_aparch(m, 50, a, 10);
    std::normal_distribution<double> g;
    std::vector<double> e(60);
    for (auto& v : e)
        v = g(b);
    const double scale = std::pow(0.25, 1.0 / 1.5);
    for (std::size_t t = 0; t < 50; ++t)
        EXPECT_NEAR(y[t], scale * e[t + 10], 1e-14);
}

TEST(ApArch, ConditionalPowerBoundedBelow)
{
    Rng rng = replicate_rng(9, 0);
    const auto m = ApArchModel::example();
    const auto path = simulate_aparch_path(m, 3000, rng);
    for (double s : path.s_delta)
        EXPECT_GE(s, m.alpha0);
}

TEST(ApArch, VolatilityClusters)
{
    std::vector<double> r1;
    for (std::uint64_t r = 0; r < 20; ++r) {
        Rng rng = replicate_rng(10, r);
        const auto y = simulate_aparch(ApArchModel::example(), 1974, rng);
        std::vector<double> a;
        for (double v : y.values())
            a.push_back(std::abs(v));
        r1.push_back(sample_autocorrelation(a, 1)[0]);
    }
    EXPECT_GT(oracle::median(r1), 0.05);
}

TEST(ApArch, ConstraintsChecked)
{
    auto m = ApArchModel::example();
    m.alpha0 = 0.0;
    EXPECT_THROW(m.validate(), UsageError);
    m = ApArchModel::example();
    m.gamma[0] = 1.0;
    EXPECT_THROW(m.validate(), UsageError);
    m = ApArchModel::example();
    m.delta = 0.0;
    EXPECT_THROW(m.validate(), UsageError);
    m = ApArchModel::example();
    m.beta[1] = -0.1;
    EXPECT_THROW(m.validate(), UsageError);
    m = ApArchModel::example();
    m.gamma.pop_back();
    EXPECT_THROW(m.validate(), UsageError);
}

} // namespace
} // namespace lgspec
