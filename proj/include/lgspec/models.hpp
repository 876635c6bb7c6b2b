#pragma once

#include "lgspec/error.hpp"
#include "lgspec/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lgspec {

using Rng = std::mt19937_64;

/// Independent generator for replicate `index` derived from a master seed.
inline Rng replicate_rng(std::uint64_t seed, std::uint64_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32), 0x6c677370u};
    return Rng(seq);
}

inline Series simulate_gaussian_wn(std::size_t n, Rng& rng)
{
    std::normal_distribution<double> g;
    std::vector<double> y(n);
    for (auto& v : y)
        v = g(rng);
    return Series{std::move(y)};
}

/// Gaussian AR(1) y_t = phi y_{t-1} + e_t started from its stationary law.
inline Series simulate_gaussian_ar1(double phi, std::size_t n, Rng& rng)
{
    if (!(std::abs(phi) < 1.0))
        throw UsageError("AR(1) coefficient must satisfy |phi| < 1");
    std::normal_distribution<double> g;
    std::vector<double> y(n);
    y[0] = g(rng) / std::sqrt(1.0 - phi * phi);
    for (std::size_t t = 1; t < n; ++t)
        y[t] = phi * y[t - 1] + g(rng);
    return Series{std::move(y)};
}

struct CosineModel {
    double alpha = 0.302;
    double sigma = 0.75;

    void validate() const
    {
        if (!(alpha > 0.0 && alpha < 0.5))
            throw UsageError("cosine frequency must lie in (0, 1/2)");
        if (!(sigma >= 0.0))
            throw UsageError("cosine noise sd must be >= 0");
    }
};

/// y_t = cos(2 pi alpha t + phi) + w_t for t = 0..n-1, phi ~ U(0, 2 pi)
/// unless given.
inline Series simulate_cosine(const CosineModel& model, std::size_t n, Rng& rng,
                              std::optional<double> phase = std::nullopt)
{
    model.validate();
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    const double phi = phase ? *phase : u(rng);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> y(n);
    for (std::size_t t = 0; t < n; ++t) {
        y[t] = std::cos(2.0 * std::numbers::pi * model.alpha * static_cast<double>(t) + phi);
        if (model.sigma > 0.0)
            y[t] += model.sigma * noise(rng);
    }
    return Series{std::move(y)};
}

/// Mixture of local cosines C_i(t) = L_i + A_i(t) cos(2 pi alpha_i t + phi_i),
/// one component selected per t with probabilities p.
struct LocalTrigModel {
    std::vector<double> levels;
    std::vector<double> amplitudes;
    std::vector<double> amplitudes_alt; // empty: constant amplitudes
    std::vector<double> frequencies;
    std::vector<double> probabilities;

    std::size_t components() const { return levels.size(); }

    double max_amplitude(std::size_t i) const
    {
        return amplitudes_alt.empty() ? std::abs(amplitudes[i])
                                      : std::max(std::abs(amplitudes[i]),
                                                 std::abs(amplitudes_alt[i]));
    }

    void validate() const
    {
        const std::size_t r = levels.size();
        if (r < 1)
            throw UsageError("local trigonometric model needs at least one component");
        if (amplitudes.size() != r || frequencies.size() != r || probabilities.size() != r ||
            (!amplitudes_alt.empty() && amplitudes_alt.size() != r))
            throw UsageError("local trigonometric model: parameter lists differ in length");
        double total = 0.0;
        for (double p : probabilities) {
            if (!(p >= 0.0))
                throw UsageError("local trigonometric model: negative probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw UsageError("local trigonometric model: probabilities sum to " +
                             std::to_string(total));
    }

    /// Four-component configuration whose 10/50/90% pseudo-normal quantiles
    /// sit near the levels -1, 0, 1. The published probabilities
    /// (0.05, 0.28, 0.33, 0.33) are rounded; they are rescaled to sum to one.
    static LocalTrigModel standard()
    {
        LocalTrigModel m;
        m.levels = {-2.0, -1.0, 0.0, 1.0};
        m.amplitudes = {1.0, 0.5, 0.3, 0.5};
        m.amplitudes_alt = {0.5, 0.2, 0.2, 0.6};
        m.frequencies = {0.267, 0.091, 0.431, 0.270};
        m.probabilities = {0.05, 0.28, 0.33, 0.33};
        const double total = std::accumulate(m.probabilities.begin(), m.probabilities.end(), 0.0);
        for (auto& p : m.probabilities)
            p /= total;
        return m;
    }
};

inline Series simulate_local_trig(const LocalTrigModel& model, std::size_t n, Rng& rng)
{
    model.validate();
    const std::size_t r = model.components();
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
    std::vector<double> phases(r);
    for (auto& p : phases)
        p = phase_dist(rng);

    std::discrete_distribution<std::size_t> pick(model.probabilities.begin(),
                                                 model.probabilities.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> y(n);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t i = pick(rng);
        double amp = model.amplitudes[i];
        if (!model.amplitudes_alt.empty()) {
            const double lo = std::min(model.amplitudes[i], model.amplitudes_alt[i]);
            const double hi = std::max(model.amplitudes[i], model.amplitudes_alt[i]);
            amp = lo + (hi - lo) * unit(rng);
        }
        y[t] = model.levels[i] +
               amp * std::cos(2.0 * std::numbers::pi * model.frequencies[i] *
                                  static_cast<double>(t) +
                              phases[i]);
    }
    return Series{std::move(y)};
}

/// Asymmetric power ARCH:
///   eps_t = s_t e_t,  e_t ~ N(0, 1)
///   s_t^delta = alpha0 + sum_i alpha_i (|eps_{t-i}| - gamma_i eps_{t-i})^delta
///                      + sum_j beta_j s_{t-j}^delta
struct ApArchModel {
    double alpha0 = 0.0;
    std::vector<double> alpha; // order p, paired with gamma
    std::vector<double> gamma;
    std::vector<double> beta; // order q
    double delta = 2.0;

    void validate() const
    {
        if (!(alpha0 > 0.0))
            throw UsageError("apARCH: alpha0 must be > 0");
        if (alpha.size() != gamma.size())
            throw UsageError("apARCH: alpha and gamma must have the same order");
        for (double a : alpha)
            if (!(a >= 0.0))
                throw UsageError("apARCH: alpha_i must be >= 0");
        for (double g : gamma)
            if (!(g > -1.0 && g < 1.0))
                throw UsageError("apARCH: gamma_i must lie in (-1, 1)");
        for (double b : beta)
            if (!(b >= 0.0))
                throw UsageError("apARCH: beta_j must be >= 0");
        if (!(delta > 0.0) || !std::isfinite(delta))
            throw UsageError("apARCH: delta must be > 0");
    }

    /// Order (2, 3) configuration with persistence and leverage of the size
    /// typically fitted to daily exchange-rate returns.
    static ApArchModel example()
    {
        ApArchModel m;
        m.alpha0 = 0.01;
        m.alpha = {0.06, 0.03};
        m.gamma = {0.10, 0.05};
        m.beta = {0.40, 0.30, 0.20};
        m.delta = 1.4;
        return m;
    }
};

/// Simulated returns together with s_t^delta for the kept samples.
struct ApArchPath {
    Series eps;
    std::vector<double> s_delta;
};

inline ApArchPath simulate_aparch_path(const ApArchModel& model, std::size_t n, Rng& rng,
                                       std::size_t burn_in = 1000)
{
    model.validate();
    const std::size_t p = model.alpha.size();
    const std::size_t q = model.beta.size();
    const double beta_sum = std::accumulate(model.beta.begin(), model.beta.end(), 0.0);
    const double s_init = beta_sum < 1.0 ? model.alpha0 / (1.0 - beta_sum) : model.alpha0;
    const std::size_t lead = std::max(p, q);
    const std::size_t total = lead + burn_in + n;
    std::vector<double> eps(total, 0.0);
    std::vector<double> s_delta(total, s_init);
    std::normal_distribution<double> g;
    for (std::size_t t = lead; t < total; ++t) {
        double sd = model.alpha0;
        for (std::size_t i = 1; i <= p; ++i) {
            const double e = eps[t - i];
            sd += model.alpha[i - 1] * std::pow(std::abs(e) - model.gamma[i - 1] * e, model.delta);
        }
        for (std::size_t j = 1; j <= q; ++j)
            sd += model.beta[j - 1] * s_delta[t - j];
        s_delta[t] = sd;
        eps[t] = std::pow(sd, 1.0 / model.delta) * g(rng);
    }
    return {Series{std::vector<double>(eps.end() - static_cast<long>(n), eps.end())},
            std::vector<double>(s_delta.end() - static_cast<long>(n), s_delta.end())};
}

/// Initialised at s^delta = alpha0 / (1 - sum beta) (alpha0 when the betas
/// sum to >= 1) with zero pre-sample returns; the first burn_in samples are
/// dropped.
inline Series simulate_aparch(const ApArchModel& model, std::size_t n, Rng& rng,
                              std::size_t burn_in = 1000)
{
    return simulate_aparch_path(model, n, rng, burn_in).eps;
}

} // namespace lgspec
