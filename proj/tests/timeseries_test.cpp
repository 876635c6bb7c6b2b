#include "lgspec/timeseries.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

namespace lgspec {
namespace {

std::vector<double> random_distinct(std::mt19937_64& rng, std::size_t n)
{
    std::normal_distribution<double> dist;
    std::vector<double> v(n);
    for (auto& x : v)
        x = dist(rng) * 3.0 + 1.0;
    return v;
}

TEST(Series, RejectsShortOrNonFinite)
{
    EXPECT_THROW(Series({1.0}), DataError);
    EXPECT_THROW(Series({1.0, std::nan("")}), DataError);
    EXPECT_THROW(Series({1.0, std::numeric_limits<double>::infinity()}), DataError);
    EXPECT_NO_THROW(Series({1.0, 2.0}));
}

TEST(LoadCsv, PlainColumn)
{
    std::istringstream in("1.0\n2.0\n3.0");
    const auto s = parse_csv(in, std::size_t{0});
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0], 1.0);
    EXPECT_EQ(s[1], 2.0);
    EXPECT_EQ(s[2], 3.0);
}

TEST(LoadCsv, ErrorNamesRow)
{
    std::istringstream in("1.0\nabc\n3.0\n");
    try {
        parse_csv(in, std::size_t{0});
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
    }
}

TEST(LoadCsv, HeaderAndNamedColumn)
{
    std::istringstream in("t,value\n1,0.5\n2,-1.5\n3,2\n");
    const auto s = parse_csv(in, std::string("value"));
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[1], -1.5);

    std::istringstream missing("t,value\n1,0.5\n2,\n");
    EXPECT_THROW(parse_csv(missing, std::string("value")), DataError);

    std::istringstream bad_name("t,value\n1,0.5\n2,1\n");
    EXPECT_THROW(parse_csv(bad_name, std::string("nope")), DataError);
}

TEST(LoadCsv, TooFewRows)
{
    std::istringstream in("x\n1.0\n");
    EXPECT_THROW(parse_csv(in, std::size_t{0}), DataError);
}

TEST(LoadCsv, DmbpSizedFile)
{
    std::ostringstream out;
    out << "y\n";
    for (int i = 0; i < 1974; ++i)
        out << (i % 17) * 0.25 - 2.0 << '\n';
    std::istringstream in(out.str());
    EXPECT_EQ(parse_csv(in, std::size_t{0}).size(), 1974u);
}

TEST(Normalize, SmallExample)
{
    const auto z = normalize(Series({3.2, -1.0, 0.5}));
    ASSERT_EQ(z.size(), 3u);
    // Phi^{-1}(0.75) from scipy.stats.norm.ppf
    EXPECT_NEAR(z[0], 0.6744897501960817, 1e-14);
    EXPECT_NEAR(z[1], -0.6744897501960817, 1e-14);
    EXPECT_EQ(z[2], 0.0);
}

TEST(Normalize, TiesGetAverageRank)
{
    const auto ranks = average_ranks(std::vector<double>{2.0, 1.0, 2.0, 3.0});
    EXPECT_EQ(ranks, (std::vector<double>{2.5, 1.0, 2.5, 4.0}));
    const auto z = normalize(Series({2.0, 1.0, 2.0, 3.0}));
    EXPECT_EQ(z[0], z[2]);
    EXPECT_EQ(z[0], 0.0); // rank 2.5 of n+1 = 5
}

TEST(Normalize, DmbpLengthQuantiles)
{
    std::mt19937_64 rng(7);
    auto v = random_distinct(rng, 1974);
    auto z = normalize(Series(v));
    std::vector<double> sorted(z.values().begin(), z.values().end());
    std::sort(sorted.begin(), sorted.end());
    auto q = [&](double p) {
        const double pos = p * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        return sorted[lo] + (pos - lo) * (sorted[lo + 1] - sorted[lo]);
    };
    EXPECT_NEAR(q(0.1), -1.28, 0.01);
    EXPECT_NEAR(q(0.5), 0.0, 1e-12);
    EXPECT_NEAR(q(0.9), 1.28, 0.01);
}

TEST(NormalizeProperty, SortedValuesAreQuantileSet)
{
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 2 + rng() % 300;
        const auto z = normalize(Series(random_distinct(rng, n)));
        std::vector<double> sorted(z.values().begin(), z.values().end());
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < n; ++i)
            EXPECT_NEAR(sorted[i], normal_quantile((i + 1.0) / (n + 1.0)), 1e-12);
    }
}

TEST(NormalizeProperty, IdempotentAndMonotoneInvariant)
{
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 2 + rng() % 500;
        const auto v = random_distinct(rng, n);
        const auto z = normalize(Series(v));

        std::vector<double> zz(z.values().begin(), z.values().end());
        const auto z2 = normalize(Series(zz));
        for (std::size_t i = 0; i < n; ++i)
            EXPECT_NEAR(z2[i], z[i], 1e-12);

        std::vector<double> g(n);
        std::transform(v.begin(), v.end(), g.begin(),
                       [](double x) { return std::exp(0.3 * x) + x * x * x; });
        const auto zg = normalize(Series(g));
        for (std::size_t i = 0; i < n; ++i)
            EXPECT_EQ(zg[i], z[i]);
    }
}

TEST(NormalizeProperty, TailSymmetry)
{
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 2 + rng() % 2000;
        const auto z = normalize(Series(random_distinct(rng, n)));
        std::vector<double> sorted(z.values().begin(), z.values().end());
        std::sort(sorted.begin(), sorted.end());
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(sorted[i], -sorted[n - 1 - i], 1e-12);
            sum += sorted[i];
        }
        EXPECT_NEAR(sum, 0.0, 1e-9);
    }
}

TEST(NormalizeProperty, DigestTracksSource)
{
    const Series a({1.0, 2.0, 3.0});
    const Series b({1.0, 2.0, 3.5});
    EXPECT_EQ(normalize(a).source_hash(), content_digest(a.values()));
    EXPECT_NE(normalize(a).source_hash(), normalize(b).source_hash());
    EXPECT_EQ(digest_hex(0x1234abcdULL), "000000001234abcd");
}

TEST(LagPairs, SmallExample)
{
    const std::vector<double> z{1.0, 2.0, 3.0};
    const auto p = lag_pairs(z, 1);
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p.pairs[0], (Pair{2.0, 1.0}));
    EXPECT_EQ(p.pairs[1], (Pair{3.0, 2.0}));
    EXPECT_EQ(lag_pairs(z, 2).size(), 1u);
    EXPECT_THROW(lag_pairs(z, 0), UsageError);
    EXPECT_THROW(lag_pairs(z, 3), UsageError);
}

TEST(LagPairs, CountConservation)
{
    std::mt19937_64 rng(5);
    const auto z = normalize(Series(random_distinct(rng, 1974)));
    EXPECT_EQ(lag_pairs(z, 200).size(), 1774u);
    for (std::size_t h : {1u, 2u, 17u, 1000u, 1973u})
        EXPECT_EQ(lag_pairs(z, h).size() + h, z.size());
}

TEST(StripSquare, AllAtCentre)
{
    const std::vector<double> z{0.0, 0.0, 0.0};
    const auto c = strip_and_square_counts(z, {0.0, 0.0}, Bandwidth{0.5, 0.5}, 1);
    EXPECT_EQ(c.strip, 3u);
    EXPECT_EQ(c.square, 2u);
    EXPECT_THROW(strip_and_square_counts(z, {0.0, 1.0}, Bandwidth{0.5, 0.5}, 1), UsageError);
}

TEST(StripSquare, StripCountsFixedByLength)
{
    // Any series of length 1974 without ties normalizes onto the same set,
    // so the strip counts are series-independent.
    std::mt19937_64 rng(99);
    for (int rep = 0; rep < 3; ++rep) {
        const auto z = normalize(Series(random_distinct(rng, 1974)));
        const Bandwidth b{0.5, 0.5};
        EXPECT_EQ(strip_and_square_counts(z, {0.0, 0.0}, b, 1).strip, 756u);
        EXPECT_EQ(strip_and_square_counts(z, {-1.28, -1.28}, b, 1).strip, 355u);
        EXPECT_EQ(strip_and_square_counts(z, {1.28, 1.28}, b, 1).strip, 355u);
    }
}

TEST(StripSquare, MonotoneInBandwidth)
{
    std::mt19937_64 rng(3);
    const auto z = normalize(Series(random_distinct(rng, 500)));
    for (double v : {-1.28, 0.0, 1.28}) {
        const auto small = strip_and_square_counts(z, {v, v}, Bandwidth{0.5}, 3);
        const auto big = strip_and_square_counts(z, {v, v}, Bandwidth{1.0}, 3);
        EXPECT_LE(small.strip, big.strip);
        EXPECT_LE(small.square, big.square);
    }
}

TEST(Bandwidth, RuleOfThumb)
{
    const auto b = rule_of_thumb_bandwidth(1974);
    EXPECT_NEAR(b.b1(), 0.494, 1e-3);
    EXPECT_EQ(b.b1(), b.b2());
    EXPECT_THROW(Bandwidth(0.0, 1.0), UsageError);
}

} // namespace
} // namespace lgspec
