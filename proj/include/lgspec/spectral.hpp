#pragma once

#include "lgspec/lag_structure.hpp"
#include "lgspec/timeseries.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lgspec {

enum class WindowKind { tukey_hanning, uniform };

inline std::string_view to_string(WindowKind k)
{
    return k == WindowKind::tukey_hanning ? "tukey-hanning" : "uniform";
}

inline WindowKind window_kind_from_string(std::string_view s)
{
    if (s == "tukey-hanning" || s == "tukey_hanning")
        return WindowKind::tukey_hanning;
    if (s == "uniform")
        return WindowKind::uniform;
    throw UsageError("unknown lag window '" + std::string(s) + "'");
}

struct LagWindow {
    WindowKind kind = WindowKind::tukey_hanning;
    std::size_t m = 10;
};

/// lambda(h | m); symmetric in h and zero beyond the truncation point.
inline double lag_window_value(const LagWindow& w, long h)
{
    const auto lag = static_cast<std::size_t>(h < 0 ? -h : h);
    if (lag > w.m)
        return 0.0;
    if (lag == 0)
        return 1.0;
    switch (w.kind) {
    case WindowKind::tukey_hanning:
        return 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(lag) /
                                     static_cast<double>(w.m)));
    case WindowKind::uniform:
        return 1.0;
    }
    return 0.0;
}

class FrequencyGrid {
public:
    FrequencyGrid() = default;
    explicit FrequencyGrid(std::vector<double> omegas) : omegas_(std::move(omegas))
    {
        if (omegas_.empty())
            throw UsageError("frequency grid is empty");
        for (std::size_t i = 0; i < omegas_.size(); ++i) {
            if (!(omegas_[i] >= 0.0 && omegas_[i] <= 0.5))
                throw UsageError("frequency outside [0, 1/2]");
            if (i > 0 && !(omegas_[i] > omegas_[i - 1]))
                throw UsageError("frequency grid must be strictly increasing");
        }
    }

    /// `points` equispaced frequencies from 0 to 1/2 inclusive.
    static FrequencyGrid uniform(std::size_t points = 257)
    {
        if (points < 2)
            throw UsageError("uniform grid needs at least 2 points");
        std::vector<double> w(points);
        for (std::size_t i = 0; i < points; ++i)
            w[i] = 0.5 * static_cast<double>(i) / static_cast<double>(points - 1);
        return FrequencyGrid{std::move(w)};
    }

    std::span<const double> omegas() const { return omegas_; }
    std::size_t size() const { return omegas_.size(); }
    double operator[](std::size_t i) const { return omegas_[i]; }

private:
    std::vector<double> omegas_;
};

struct SpectrumMeta {
    LocalPoint point;
    std::size_t m = 0;
    Bandwidth bandwidth;
    WindowKind window = WindowKind::tukey_hanning;
    std::string source = "local";
};

struct SpectrumEstimate {
    FrequencyGrid grid;
    std::vector<std::complex<double>> values;
    SpectrumMeta meta;

    std::vector<double> real() const
    {
        std::vector<double> out(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            out[i] = values[i].real();
        return out;
    }

    std::vector<double> imag() const
    {
        std::vector<double> out(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            out[i] = values[i].imag();
        return out;
    }
};

namespace detail {

// 1 + sum_h lambda(h) [ rho_refl(h) e^{+2 pi i w h} + rho(h) e^{-2 pi i w h} ]
inline std::vector<std::complex<double>> synthesize(std::span<const double> rho,
                                                    std::span<const double> rho_reflected,
                                                    bool real_valued, const LagWindow& w,
                                                    const FrequencyGrid& grid)
{
    std::vector<double> lambda(w.m + 1);
    for (std::size_t h = 1; h <= w.m; ++h)
        lambda[h] = lag_window_value(w, static_cast<long>(h));

    std::vector<std::complex<double>> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double re = 1.0, im = 0.0;
        for (std::size_t h = 1; h <= w.m; ++h) {
            const double angle = 2.0 * std::numbers::pi * grid[k] * static_cast<double>(h);
            if (real_valued) {
                re += 2.0 * lambda[h] * rho[h - 1] * std::cos(angle);
            } else {
                re += lambda[h] * (rho[h - 1] + rho_reflected[h - 1]) * std::cos(angle);
                im += lambda[h] * (rho_reflected[h - 1] - rho[h - 1]) * std::sin(angle);
            }
        }
        out[k] = {re, im};
    }
    return out;
}

} // namespace detail

/// m-truncated local Gaussian spectral density at set.point. Real-valued
/// (exactly zero imaginary part) on the diagonal, complex otherwise.
/// Negative values are returned as computed.
inline SpectrumEstimate local_spectrum(const LocalAutocorrSet& set, const LagWindow& w,
                                       const FrequencyGrid& grid)
{
    if (w.m > set.max_lag)
        throw UsageError("truncation " + std::to_string(w.m) + " exceeds the " +
                         std::to_string(set.max_lag) + " estimated lags");
    SpectrumEstimate s;
    s.grid = grid;
    s.values = detail::synthesize(set.rho_at_v, set.rho_at_v_reflected,
                                  set.point.is_diagonal(), w, grid);
    s.meta = {set.point, w.m, set.bandwidth, w.kind, "local"};
    return s;
}

/// Sample autocorrelations r(1..max_lag), divisor n.
inline std::vector<double> sample_autocorrelation(std::span<const double> z, std::size_t max_lag)
{
    const std::size_t n = z.size();
    if (max_lag + 1 > n)
        throw UsageError("max lag " + std::to_string(max_lag) + " too large for n = " +
                         std::to_string(n));
    double mean = 0.0;
    for (double x : z)
        mean += x;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double x : z)
        c0 += (x - mean) * (x - mean);
    std::vector<double> r(max_lag, 0.0);
    if (c0 == 0.0)
        return r;
    for (std::size_t h = 1; h <= max_lag; ++h) {
        double c = 0.0;
        for (std::size_t t = 0; t + h < n; ++t)
            c += (z[t + h] - mean) * (z[t] - mean);
        r[h - 1] = c / c0;
    }
    return r;
}

/// Ordinary m-truncated spectrum from given autocorrelations r(1..).
inline SpectrumEstimate global_spectrum_from_acf(std::span<const double> acf, const LagWindow& w,
                                                 const FrequencyGrid& grid)
{
    if (w.m > acf.size())
        throw UsageError("truncation " + std::to_string(w.m) + " exceeds the " +
                         std::to_string(acf.size()) + " available autocorrelations");
    SpectrumEstimate s;
    s.grid = grid;
    s.values = detail::synthesize(acf, acf, true, w, grid);
    s.meta.m = w.m;
    s.meta.window = w.kind;
    s.meta.source = "global";
    return s;
}

inline SpectrumEstimate global_spectrum(std::span<const double> z, const LagWindow& w,
                                        const FrequencyGrid& grid)
{
    if (w.m + 2 > z.size())
        throw UsageError("truncation " + std::to_string(w.m) + " too large for n = " +
                         std::to_string(z.size()));
    return global_spectrum_from_acf(sample_autocorrelation(z, w.m), w, grid);
}

inline SpectrumEstimate global_spectrum(const NormalizedSeries& z, const LagWindow& w,
                                        const FrequencyGrid& grid)
{
    return global_spectrum(z.values(), w, grid);
}

/// f at the reflected point is the complex conjugate of f at v.
inline SpectrumEstimate conjugate_reflect(const SpectrumEstimate& s)
{
    SpectrumEstimate out = s;
    for (auto& v : out.values)
        v = {v.real(), v.imag() == 0.0 ? 0.0 : -v.imag()};
    out.meta.point = s.meta.point.reflected();
    return out;
}

} // namespace lgspec
