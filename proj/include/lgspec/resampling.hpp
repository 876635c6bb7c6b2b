#pragma once

#include "lgspec/lag_structure.hpp"
#include "lgspec/models.hpp"
#include "lgspec/parallel.hpp"
#include "lgspec/spectral.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lgspec {

struct BandSpec {
    std::size_t replicates = 100;
    double lower_q = 0.05;
    double upper_q = 0.95;
    std::uint64_t seed = 1;
    std::size_t block_length = 100; // bootstrap only

    void validate() const
    {
        if (replicates < 2)
            throw UsageError("band needs at least 2 replicates");
        if (!(lower_q > 0.0 && lower_q < upper_q && upper_q < 1.0))
            throw UsageError("band quantiles must satisfy 0 < lower < upper < 1");
    }
};

enum class SpectrumPart { re, im };

inline std::string_view to_string(SpectrumPart p) { return p == SpectrumPart::re ? "re" : "im"; }

struct ConfidenceBand {
    FrequencyGrid grid;
    std::vector<double> lower;
    std::vector<double> median;
    std::vector<double> upper;
    SpectrumPart part = SpectrumPart::re;
    LocalPoint point;
    std::size_t m = 0;
    std::string source; // "local" or "global"
};

/// Linear interpolation between order statistics (R's default, type 7).
inline double quantile_sorted(std::span<const double> values, double q)
{
    if (values.empty())
        throw UsageError("quantile of empty sample");
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

inline double quantile_type7(std::vector<double> values, double q)
{
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, q);
}

/// Per-frequency quantiles of a set of replicate curves.
inline ConfidenceBand band_from_replicates(const FrequencyGrid& grid,
                                           const std::vector<std::vector<double>>& curves,
                                           double lower_q, double upper_q)
{
    ConfidenceBand band;
    band.grid = grid;
    const std::size_t k = grid.size();
    band.lower.resize(k);
    band.median.resize(k);
    band.upper.resize(k);
    std::vector<double> column(curves.size());
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t r = 0; r < curves.size(); ++r)
            column[r] = curves[r][i];
        std::sort(column.begin(), column.end());
        band.lower[i] = quantile_sorted(column, lower_q);
        band.median[i] = quantile_sorted(column, 0.5);
        band.upper[i] = quantile_sorted(column, upper_q);
    }
    return band;
}

/// Circular block bootstrap from given block starts (0-based).
inline Series block_bootstrap_resample(const Series& source, std::size_t block_length,
                                       std::span<const std::size_t> starts)
{
    const std::size_t n = source.size();
    if (block_length < 1 || block_length > n)
        throw UsageError("block length " + std::to_string(block_length) + " outside 1.." +
                         std::to_string(n));
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t start : starts) {
        for (std::size_t j = 0; j < block_length && out.size() < n; ++j)
            out.push_back(source[(start + j) % n]);
    }
    if (out.size() != n)
        throw UsageError("not enough blocks to cover the series");
    return Series{std::move(out)};
}

/// ceil(n / L) uniformly drawn wrapped blocks of the raw series, truncated to n.
inline Series block_bootstrap_resample(const Series& source, std::size_t block_length, Rng& rng)
{
    const std::size_t n = source.size();
    if (block_length < 1 || block_length > n)
        throw UsageError("block length " + std::to_string(block_length) + " outside 1.." +
                         std::to_string(n));
    const std::size_t blocks = (n + block_length - 1) / block_length;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> starts(blocks);
    for (auto& s : starts)
        s = pick(rng);
    return block_bootstrap_resample(source, block_length, starts);
}

/// Fresh replicates from a known model.
struct SimulationSource {
    std::function<Series(Rng&)> simulate;
    std::string label = "simulation";
};

/// Block-bootstrap replicates of an observed series.
struct BootstrapSource {
    Series data;
    std::string label = "bootstrap";
};

using ReplicateSource = std::variant<SimulationSource, BootstrapSource>;

struct PipelineParams {
    std::vector<LocalPoint> points;
    Bandwidth bandwidth{0.5, 0.5};
    std::size_t max_lag = 10;
    WindowKind window = WindowKind::tukey_hanning;
    FrequencyGrid grid = FrequencyGrid::uniform();
    AutocorrOptions autocorr;
};

/// Replicate-level estimates, kept so bands for any m <= max_lag can be
/// synthesised without refitting.
class Ensemble {
public:
    Ensemble(PipelineParams params, BandSpec spec) : params_(std::move(params)), spec_(spec) {}

    const PipelineParams& params() const { return params_; }
    const BandSpec& spec() const { return spec_; }
    std::size_t replicates() const { return local_.size(); }

    /// Autocorrelation sets of replicate r, one per point.
    const std::vector<LocalAutocorrSet>& local(std::size_t r) const { return local_[r]; }
    const std::vector<double>& global_acf(std::size_t r) const { return global_[r]; }

    /// Non-converged fits per point, summed over replicates and lags.
    std::vector<std::size_t> failure_counts() const
    {
        std::vector<std::size_t> counts(params_.points.size(), 0);
        for (const auto& rep : local_)
            for (std::size_t p = 0; p < rep.size(); ++p)
                counts[p] += rep[p].failures();
        return counts;
    }

    std::vector<SpectrumEstimate> local_spectra(std::size_t point, std::size_t m) const
    {
        const LagWindow w{params_.window, m};
        std::vector<SpectrumEstimate> out;
        out.reserve(local_.size());
        for (const auto& rep : local_)
            out.push_back(local_spectrum(rep[point], w, params_.grid));
        return out;
    }

    ConfidenceBand local_band(std::size_t point, std::size_t m,
                              SpectrumPart part = SpectrumPart::re) const
    {
        std::vector<std::vector<double>> curves;
        for (const auto& s : local_spectra(point, m))
            curves.push_back(part == SpectrumPart::re ? s.real() : s.imag());
        auto band = band_from_replicates(params_.grid, curves, spec_.lower_q, spec_.upper_q);
        band.part = part;
        band.point = params_.points[point];
        band.m = m;
        band.source = "local";
        return band;
    }

    ConfidenceBand global_band(std::size_t m) const
    {
        const LagWindow w{params_.window, m};
        std::vector<std::vector<double>> curves;
        for (const auto& acf : global_)
            curves.push_back(global_spectrum_from_acf(acf, w, params_.grid).real());
        auto band = band_from_replicates(params_.grid, curves, spec_.lower_q, spec_.upper_q);
        band.m = m;
        band.source = "global";
        return band;
    }

private:
    friend Ensemble run_ensemble_impl(const ReplicateSource&, const PipelineParams&,
                                      const BandSpec&, unsigned);

    PipelineParams params_;
    BandSpec spec_;
    std::vector<std::vector<LocalAutocorrSet>> local_;
    std::vector<std::vector<double>> global_;
};

inline Ensemble run_ensemble_impl(const ReplicateSource& source, const PipelineParams& params,
                                  const BandSpec& spec, unsigned threads)
{
    spec.validate();
    if (params.points.empty())
        throw UsageError("no evaluation points given");
    if (const auto* boot = std::get_if<BootstrapSource>(&source)) {
        if (spec.block_length < 1 || spec.block_length > boot->data.size())
            throw UsageError("block length " + std::to_string(spec.block_length) +
                             " outside 1.." + std::to_string(boot->data.size()));
    }

    Ensemble e(params, spec);
    e.local_.resize(spec.replicates);
    e.global_.resize(spec.replicates);

    AutocorrOptions autocorr = params.autocorr;
    autocorr.threads = 1; // parallelism lives at the replicate level

    parallel_for(
        spec.replicates,
        [&](std::size_t r) {
            Rng rng = replicate_rng(spec.seed, r);
            const Series series = std::visit(
                [&](const auto& src) -> Series {
                    using T = std::decay_t<decltype(src)>;
                    if constexpr (std::is_same_v<T, SimulationSource>)
                        return src.simulate(rng);
                    else
                        return block_bootstrap_resample(src.data, spec.block_length, rng);
                },
                source);
            const NormalizedSeries z = normalize(series);
            auto& sets = e.local_[r];
            sets.reserve(params.points.size());
            for (const auto& v : params.points)
                sets.push_back(estimate_autocorrs(z, v, params.bandwidth, params.max_lag, autocorr));
            e.global_[r] = sample_autocorrelation(z.values(), params.max_lag);
        },
        threads);

    // a cell nobody could fit carries no information at all
    for (std::size_t p = 0; p < params.points.size(); ++p) {
        for (std::size_t h = 1; h <= params.max_lag; ++h) {
            bool any_v = false, any_reflected = false;
            for (const auto& rep : e.local_) {
                any_v |= rep[p].converged_v[h - 1];
                any_reflected |= rep[p].converged_reflected[h - 1];
            }
            if (!any_v || !any_reflected) {
                const auto& v = params.points[p];
                throw NumericalError("every replicate failed to converge at point (" +
                                     std::to_string(v.v1) + ", " + std::to_string(v.v2) +
                                     "), lag " + std::to_string(h) +
                                     (any_v ? " (reflected point)" : ""));
            }
        }
    }
    return e;
}

inline Ensemble run_ensemble(const ReplicateSource& source, const PipelineParams& params,
                             const BandSpec& spec, unsigned threads = 0)
{
    return run_ensemble_impl(source, params, spec, threads);
}

/// Bands at one truncation level: per point the real (and, off the
/// diagonal, imaginary) part, plus the ordinary spectrum.
struct EnsembleBands {
    std::vector<ConfidenceBand> local_re;
    std::vector<std::optional<ConfidenceBand>> local_im;
    ConfidenceBand global;
    std::vector<std::size_t> failures;
};

inline EnsembleBands ensemble_band(const ReplicateSource& source, const PipelineParams& params,
                                   std::size_t m, const BandSpec& spec, unsigned threads = 0)
{
    if (m > params.max_lag)
        throw UsageError("truncation beyond max lag");
    const Ensemble e = run_ensemble(source, params, spec, threads);
    EnsembleBands out;
    for (std::size_t p = 0; p < params.points.size(); ++p) {
        out.local_re.push_back(e.local_band(p, m, SpectrumPart::re));
        if (params.points[p].is_diagonal())
            out.local_im.emplace_back(std::nullopt);
        else
            out.local_im.emplace_back(e.local_band(p, m, SpectrumPart::im));
    }
    out.global = e.global_band(m);
    out.failures = e.failure_counts();
    return out;
}

} // namespace lgspec
