#pragma once

#include "lgspec/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace lgspec {

/// Raw univariate observations y_1..y_n. At least two values, all finite.
class Series {
public:
    Series() = default;

    explicit Series(std::vector<double> values) : values_(std::move(values))
    {
        if (values_.size() < 2)
            throw DataError("series needs at least 2 observations, got " +
                            std::to_string(values_.size()));
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (!std::isfinite(values_[i]))
                throw DataError("series value at position " + std::to_string(i + 1) +
                                " is not finite");
    }

    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    friend bool operator==(const Series&, const Series&) = default;

private:
    std::vector<double> values_;
};

/// 64-bit FNV-1a over the IEEE bit patterns of the values.
inline std::uint64_t content_digest(std::span<const double> values)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : values) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

inline std::string digest_hex(std::uint64_t digest)
{
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[digest & 0xF];
        digest >>= 4;
    }
    return out;
}

/// Pseudo-normalised observations z_t together with the digest of the
/// series they were computed from.
class NormalizedSeries {
public:
    NormalizedSeries() = default;
    NormalizedSeries(std::vector<double> values, std::uint64_t source_hash)
        : values_(std::move(values)), source_hash_(source_hash)
    {
        for (double v : values_)
            if (!std::isfinite(v))
                throw NumericalError("normalized value is not finite");
    }

    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::uint64_t source_hash() const { return source_hash_; }

private:
    std::vector<double> values_;
    std::uint64_t source_hash_ = 0;
};

/// Evaluation point v = (v1, v2) for pairs (z_{t+h}, z_t).
struct LocalPoint {
    double v1 = 0.0;
    double v2 = 0.0;

    bool is_diagonal() const { return v1 == v2; }
    LocalPoint reflected() const { return {v2, v1}; }

    friend bool operator==(const LocalPoint&, const LocalPoint&) = default;
};

class Bandwidth {
public:
    Bandwidth() = default;
    Bandwidth(double b1, double b2) : b1_(b1), b2_(b2)
    {
        if (!(b1 > 0.0) || !(b2 > 0.0) || !std::isfinite(b1) || !std::isfinite(b2))
            throw UsageError("bandwidth components must be finite and > 0");
    }
    explicit Bandwidth(double b) : Bandwidth(b, b) {}

    double b1() const { return b1_; }
    double b2() const { return b2_; }

    friend bool operator==(const Bandwidth&, const Bandwidth&) = default;

private:
    double b1_ = 0.5;
    double b2_ = 0.5;
};

/// Rule of thumb b = 1.75 n^{-1/6}, used for both axes.
inline Bandwidth rule_of_thumb_bandwidth(std::size_t n)
{
    const double b = 1.75 * std::pow(static_cast<double>(n), -1.0 / 6.0);
    return Bandwidth{b, b};
}

using Pair = std::array<double, 2>;

/// Lag h pairs (z_{t+h}, z_t), t ascending.
struct LaggedPairs {
    std::size_t h = 1;
    std::vector<Pair> pairs;

    std::size_t size() const { return pairs.size(); }
};

/// Column selector for CSV ingestion: header name or 0-based index.
using ColumnRef = std::variant<std::string, std::size_t>;

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"'))
        s.remove_prefix(1);
    while (!s.empty() &&
           (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view s, double& out)
{
    s = trim(s);
    if (s.empty())
        return false;
    if (s.front() == '+')
        s.remove_prefix(1);
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end && std::isfinite(out);
}

} // namespace detail

/// Reads one column of a comma-separated stream. A first row whose selected
/// field is not numeric is treated as a header; selecting by name requires it.
inline Series parse_csv(std::istream& in, const ColumnRef& column)
{
    std::vector<double> values;
    std::string line;
    std::size_t row = 0;
    std::size_t col = 0;
    bool first = true;

    if (const auto* idx = std::get_if<std::size_t>(&column))
        col = *idx;

    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty())
            continue;
        const auto fields = detail::split_csv_line(line);

        if (first) {
            first = false;
            if (const auto* name = std::get_if<std::string>(&column)) {
                const auto it = std::find_if(fields.begin(), fields.end(), [&](auto f) {
                    return detail::trim(f) == *name;
                });
                if (it == fields.end())
                    throw DataError("column '" + *name + "' not found in header (row " +
                                    std::to_string(row) + ")");
                col = static_cast<std::size_t>(it - fields.begin());
                continue;
            }
            double probe = 0.0;
            if (col < fields.size() && !detail::parse_double(fields[col], probe)) {
                // header row; only acceptable if it has no numeric content in the column
                continue;
            }
        }

        if (col >= fields.size())
            throw DataError("row " + std::to_string(row) + ": column " + std::to_string(col + 1) +
                            " missing");
        double v = 0.0;
        if (!detail::parse_double(fields[col], v))
            throw DataError("row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                            ": cannot parse '" + std::string(detail::trim(fields[col])) +
                            "' as a finite real");
        values.push_back(v);
    }
    if (values.size() < 2)
        throw DataError("need at least 2 observations, found " + std::to_string(values.size()));
    return Series{std::move(values)};
}

inline Series load_csv(const std::string& path, const ColumnRef& column)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path + "'");
    return parse_csv(in, column);
}

inline void write_series_csv(std::ostream& out, std::span<const double> values,
                             std::string_view column_name = "y")
{
    out << "t," << column_name << '\n';
    char buf[64];
    for (std::size_t t = 0; t < values.size(); ++t) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), values[t]);
        out << (t + 1) << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf))
            << '\n';
    }
}

/// Average ranks (1-based) of the values in ascending order.
inline std::vector<double> average_ranks(std::span<const double> values)
{
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]])
            ++j;
        // tied block occupies positions i..j-1, i.e. ranks i+1..j
        const double rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            ranks[order[k]] = rank;
        i = j;
    }
    return ranks;
}

inline double normal_quantile(double p)
{
    return boost::math::quantile(boost::math::normal_distribution<double>{}, p);
}

inline double normal_cdf(double x)
{
    return boost::math::cdf(boost::math::normal_distribution<double>{}, x);
}

/// z_t = Phi^{-1}(rank_t / (n+1)). Upper-half ranks are mapped through the
/// mirrored rank so the output set is exactly symmetric about zero.
inline NormalizedSeries normalize(const Series& s)
{
    const auto ranks = average_ranks(s.values());
    const double denom = static_cast<double>(s.size() + 1);
    std::vector<double> z(s.size());
    for (std::size_t t = 0; t < z.size(); ++t) {
        const double r = ranks[t];
        const double mirrored = denom - r;
        if (r > mirrored)
            z[t] = -normal_quantile(mirrored / denom);
        else if (r < mirrored)
            z[t] = normal_quantile(r / denom);
        else
            z[t] = 0.0;
    }
    return NormalizedSeries{std::move(z), content_digest(s.values())};
}

/// Pairs (z_{t+h}, z_t) for t = 1..n-h. Valid lags are 1..n-1.
inline LaggedPairs lag_pairs(std::span<const double> z, std::size_t h)
{
    if (h < 1 || h + 1 > z.size())
        throw UsageError("lag " + std::to_string(h) + " outside 1.." +
                         std::to_string(z.size() - 1));
    LaggedPairs out;
    out.h = h;
    out.pairs.reserve(z.size() - h);
    for (std::size_t t = 0; t + h < z.size(); ++t)
        out.pairs.push_back({z[t + h], z[t]});
    return out;
}

inline LaggedPairs lag_pairs(const NormalizedSeries& z, std::size_t h)
{
    return lag_pairs(z.values(), h);
}

struct StripSquareCounts {
    std::size_t strip = 0;
    std::size_t square = 0;

    friend bool operator==(const StripSquareCounts&, const StripSquareCounts&) = default;
};

/// Effective-sample diagnostics at a diagonal point: observations inside the
/// level strip and lag-h pairs inside the 2b1 x 2b2 square centred at v.
inline StripSquareCounts strip_and_square_counts(std::span<const double> z, const LocalPoint& v,
                                                 const Bandwidth& b, std::size_t h)
{
    if (!v.is_diagonal())
        throw UsageError("strip/square counts are defined for diagonal points only");
    if (h < 1 || h + 1 > z.size())
        throw UsageError("lag " + std::to_string(h) + " outside 1.." +
                         std::to_string(z.size() - 1));
    StripSquareCounts c;
    for (double x : z)
        if (std::abs(x - v.v1) <= b.b2())
            ++c.strip;
    for (std::size_t t = 0; t + h < z.size(); ++t)
        if (std::abs(z[t + h] - v.v1) <= b.b1() && std::abs(z[t] - v.v2) <= b.b2())
            ++c.square;
    return c;
}

inline StripSquareCounts strip_and_square_counts(const NormalizedSeries& z, const LocalPoint& v,
                                                 const Bandwidth& b, std::size_t h)
{
    return strip_and_square_counts(z.values(), v, b, h);
}

} // namespace lgspec
