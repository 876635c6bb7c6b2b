#include "lgspec/resampling.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

namespace lgspec {
namespace {

Series ramp(std::size_t n)
{
    std::vector<double> v(n);
    std::iota(v.begin(), v.end(), 1.0);
    return Series{v};
}

PipelineParams small_params()
{
    PipelineParams p;
    p.points = {{-1.0, -1.0}, {0.0, 0.0}, {1.0, -1.0}};
    p.bandwidth = Bandwidth(0.5);
    p.max_lag = 4;
    p.grid = FrequencyGrid::uniform(33);
    return p;
}

SimulationSource wn_source(std::size_t n)
{
    return {[n](Rng& rng) { return simulate_gaussian_wn(n, rng); }, "wn"};
}

TEST(Quantile, Type7)
{
    const std::vector<double> x{4, 1, 3, 2};
    EXPECT_EQ(quantile_type7(x, 0.0), 1.0);
    EXPECT_EQ(quantile_type7(x, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile_type7(x, 0.5), 2.5);
    // numpy.quantile([1,2,3,4], 0.05) = 1.15
    EXPECT_NEAR(quantile_type7(x, 0.05), 1.15, 1e-15);
    EXPECT_THROW(quantile_type7({}, 0.5), UsageError);
}

TEST(BlockBootstrap, FullBlockFromZeroIsIdentity)
{
    const auto s = ramp(20);
    const std::vector<std::size_t> starts{0};
    EXPECT_EQ(block_bootstrap_resample(s, 20, starts), s);
}

TEST(BlockBootstrap, WrapsAround)
{
    const auto s = ramp(5);
    const std::vector<std::size_t> starts{3, 4};
    const auto r = block_bootstrap_resample(s, 3, starts);
    const std::vector<double> expected{4, 5, 1, 5, 1};
    EXPECT_TRUE(std::ranges::equal(r.values(), expected));
}

TEST(BlockBootstrap, LengthAndMembership)
{
    const auto s = ramp(101);
    Rng rng = replicate_rng(1, 0);
    for (std::size_t L : {1u, 7u, 50u, 100u, 101u}) {
        const auto r = block_bootstrap_resample(s, L, rng);
        EXPECT_EQ(r.size(), 101u);
        for (double v : r.values())
            EXPECT_TRUE(v >= 1.0 && v <= 101.0 && v == std::floor(v));
    }
}

TEST(BlockBootstrap, BlockLengthOutOfRange)
{
    const auto s = ramp(10);
    Rng rng = replicate_rng(1, 0);
    EXPECT_THROW(block_bootstrap_resample(s, 0, rng), UsageError);
    EXPECT_THROW(block_bootstrap_resample(s, 11, rng), UsageError);
}

TEST(BandSpec, Validation)
{
    BandSpec s;
    EXPECT_NO_THROW(s.validate());
    s.replicates = 1;
    EXPECT_THROW(s.validate(), UsageError);
    s = {};
    s.lower_q = 0.96;
    EXPECT_THROW(s.validate(), UsageError);
}

TEST(Ensemble, IdenticalReplicatesCollapseBand)
{
    Rng fixed = replicate_rng(99, 0);
    const Series y = simulate_gaussian_wn(300, fixed);
    const SimulationSource same{[y](Rng&) { return y; }, "fixed"};
    BandSpec spec;
    spec.replicates = 2;
    const auto bands = ensemble_band(same, small_params(), 4, spec, 1);
    for (const auto& b : bands.local_re) {
        EXPECT_EQ(b.lower, b.median);
        EXPECT_EQ(b.median, b.upper);
    }
    EXPECT_EQ(bands.global.lower, bands.global.upper);
}

TEST(Ensemble, DeterministicAcrossThreadCounts)
{
    BandSpec spec;
    spec.replicates = 8;
    spec.seed = 2024;
    const auto a = ensemble_band(wn_source(300), small_params(), 3, spec, 1);
    const auto b = ensemble_band(wn_source(300), small_params(), 3, spec, 4);
    for (std::size_t p = 0; p < 3; ++p) {
        EXPECT_EQ(a.local_re[p].lower, b.local_re[p].lower);
        EXPECT_EQ(a.local_re[p].median, b.local_re[p].median);
        EXPECT_EQ(a.local_re[p].upper, b.local_re[p].upper);
    }
    EXPECT_EQ(a.local_im[2]->median, b.local_im[2]->median);
    EXPECT_EQ(a.global.median, b.global.median);

    spec.seed = 2025;
    const auto c = ensemble_band(wn_source(300), small_params(), 3, spec, 4);
    EXPECT_NE(a.local_re[1].median, c.local_re[1].median);
}

TEST(Ensemble, BandsOrderedAndShaped)
{
    BandSpec spec;
    spec.replicates = 10;
    const auto bands = ensemble_band(wn_source(400), small_params(), 4, spec);
    ASSERT_EQ(bands.local_re.size(), 3u);
    EXPECT_FALSE(bands.local_im[0].has_value());
    EXPECT_FALSE(bands.local_im[1].has_value());
    ASSERT_TRUE(bands.local_im[2].has_value());
    EXPECT_EQ(bands.local_im[2]->part, SpectrumPart::im);
    EXPECT_EQ(bands.global.source, "global");
    for (const auto& b : bands.local_re) {
        EXPECT_EQ(b.source, "local");
        EXPECT_EQ(b.m, 4u);
        for (std::size_t i = 0; i < b.grid.size(); ++i) {
            EXPECT_LE(b.lower[i], b.median[i]);
            EXPECT_LE(b.median[i], b.upper[i]);
        }
    }
}

TEST(Ensemble, SmallerTruncationReusesFits)
{
    BandSpec spec;
    spec.replicates = 4;
    const auto params = small_params();
    const auto e = run_ensemble(wn_source(300), params, spec);
    const auto full = e.local_spectra(2, 4);
    const auto two = e.local_spectra(2, 2);
    for (std::size_t r = 0; r < 4; ++r) {
        const auto direct = local_spectrum(e.local(r)[2].truncated(2),
                                           {params.window, 2}, params.grid);
        EXPECT_EQ(two[r].values, direct.values);
    }
    EXPECT_NE(full[0].values, two[0].values);
    EXPECT_THROW(ensemble_band(wn_source(300), params, 5, spec), UsageError);
}

TEST(Ensemble, BootstrapSource)
{
    Rng rng = replicate_rng(5, 0);
    const BootstrapSource src{simulate_gaussian_ar1(0.4, 500, rng), "boot"};
    BandSpec spec;
    spec.replicates = 6;
    spec.block_length = 50;
    const auto bands = ensemble_band(src, small_params(), 4, spec);
    EXPECT_EQ(bands.global.grid.size(), 33u);
    spec.block_length = 501;
    EXPECT_THROW(ensemble_band(src, small_params(), 4, spec), UsageError);
}

TEST(Ensemble, AllReplicatesFailingIsNumericalError)
{
    // a tiny kernel far in the tail sees no data at all
    PipelineParams p = small_params();
    p.points = {{6.0, 6.0}};
    p.bandwidth = Bandwidth(0.01);
    BandSpec spec;
    spec.replicates = 3;
    EXPECT_THROW(run_ensemble(wn_source(200), p, spec), NumericalError);
}

TEST(Ensemble, NoPointsRejected)
{
    PipelineParams p = small_params();
    p.points.clear();
    EXPECT_THROW(run_ensemble(wn_source(200), p, BandSpec{}), UsageError);
}

} // namespace
} // namespace lgspec
