#pragma once

#include "lgspec/local_gaussian.hpp"
#include "lgspec/parallel.hpp"
#include "lgspec/timeseries.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lgspec {

struct AutocorrOptions {
    FitOptions fit;
    // Initialise lag h+1 from the estimate at lag h. Off: lags are fitted
    // independently (cold start) and may run in parallel.
    bool warm_start = true;
    unsigned threads = 1;
    // Optional per-lag bandwidths (index h-1); the common bandwidth otherwise.
    std::vector<Bandwidth> per_lag_bandwidth;
};

/// Local Gaussian autocorrelations at v and at its reflection for lags 1..m.
/// rho(0) = 1 is implied and not stored.
struct LocalAutocorrSet {
    LocalPoint point;
    Bandwidth bandwidth;
    std::size_t max_lag = 0;
    std::vector<double> rho_at_v;
    std::vector<double> rho_at_v_reflected;
    std::vector<bool> converged_v;
    std::vector<bool> converged_reflected;
    std::vector<int> iterations_v;
    std::vector<int> iterations_reflected;

    std::size_t failures() const
    {
        std::size_t n = 0;
        for (std::size_t i = 0; i < max_lag; ++i)
            n += !converged_v[i] + (point.is_diagonal() ? 0 : !converged_reflected[i]);
        return n;
    }

    bool all_converged() const { return failures() == 0; }

    /// Restriction to lags 1..m.
    LocalAutocorrSet truncated(std::size_t m) const
    {
        if (m > max_lag)
            throw UsageError("cannot truncate to " + std::to_string(m) + " lags, only " +
                             std::to_string(max_lag) + " available");
        LocalAutocorrSet out = *this;
        out.max_lag = m;
        out.rho_at_v.resize(m);
        out.rho_at_v_reflected.resize(m);
        out.converged_v.resize(m);
        out.converged_reflected.resize(m);
        out.iterations_v.resize(m);
        out.iterations_reflected.resize(m);
        return out;
    }
};

namespace detail {

inline std::vector<LocalFit> fit_lags(std::span<const double> z, const LocalPoint& v,
                                      const Bandwidth& b, std::size_t m,
                                      const AutocorrOptions& opts)
{
    auto bandwidth_for = [&](std::size_t h) {
        return h <= opts.per_lag_bandwidth.size() ? opts.per_lag_bandwidth[h - 1] : b;
    };
    std::vector<LocalFit> fits(m);
    if (opts.warm_start) {
        std::optional<LocalParams> init;
        for (std::size_t h = 1; h <= m; ++h) {
            fits[h - 1] = fit_local(lag_pairs(z, h), v, KernelSpec{bandwidth_for(h)}, init,
                                    opts.fit);
            init = fits[h - 1].converged ? std::optional(fits[h - 1].theta) : std::nullopt;
        }
    } else {
        parallel_for(
            m,
            [&](std::size_t i) {
                const std::size_t h = i + 1;
                fits[i] = fit_local(lag_pairs(z, h), v, KernelSpec{bandwidth_for(h)},
                                    std::nullopt, opts.fit);
            },
            opts.threads);
    }
    return fits;
}

} // namespace detail

inline LocalAutocorrSet estimate_autocorrs(std::span<const double> z, const LocalPoint& v,
                                           const Bandwidth& b, std::size_t m,
                                           const AutocorrOptions& opts = {})
{
    if (m < 1 || m + 2 > z.size())
        throw UsageError("max lag " + std::to_string(m) + " outside 1.." +
                         std::to_string(z.size() - 2));
    LocalAutocorrSet set;
    set.point = v;
    set.bandwidth = b;
    set.max_lag = m;

    const auto fits = detail::fit_lags(z, v, b, m, opts);
    for (const auto& f : fits) {
        set.rho_at_v.push_back(f.theta.rho);
        set.converged_v.push_back(f.converged);
        set.iterations_v.push_back(f.iterations);
    }
    if (v.is_diagonal()) {
        set.rho_at_v_reflected = set.rho_at_v;
        set.converged_reflected = set.converged_v;
        set.iterations_reflected.assign(m, 0);
    } else {
        for (const auto& f : detail::fit_lags(z, v.reflected(), b, m, opts)) {
            set.rho_at_v_reflected.push_back(f.theta.rho);
            set.converged_reflected.push_back(f.converged);
            set.iterations_reflected.push_back(f.iterations);
        }
    }
    return set;
}

inline LocalAutocorrSet estimate_autocorrs(const NormalizedSeries& z, const LocalPoint& v,
                                           const Bandwidth& b, std::size_t m,
                                           const AutocorrOptions& opts = {})
{
    return estimate_autocorrs(z.values(), v, b, m, opts);
}

/// rho_v(h) for h > 0, rho_{v reflected}(|h|) for h < 0, and 1 at h = 0.
inline double folded_autocorr(const LocalAutocorrSet& set, long h)
{
    const auto lag = static_cast<std::size_t>(h < 0 ? -h : h);
    if (lag > set.max_lag)
        throw UsageError("lag " + std::to_string(h) + " beyond max lag " +
                         std::to_string(set.max_lag));
    if (h == 0)
        return 1.0;
    return h > 0 ? set.rho_at_v[lag - 1] : set.rho_at_v_reflected[lag - 1];
}

} // namespace lgspec
