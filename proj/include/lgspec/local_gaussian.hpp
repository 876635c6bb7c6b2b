#pragma once

#include "lgspec/error.hpp"
#include "lgspec/timeseries.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lgspec {

using Vector5 = Eigen::Matrix<double, 5, 1>;
using Matrix5 = Eigen::Matrix<double, 5, 5>;

/// Parameters of the approximating bivariate Gaussian, ordered
/// (mu1, mu2, sigma1, sigma2, rho) in every 5-vector this header produces.
struct LocalParams {
    double mu1 = 0.0;
    double mu2 = 0.0;
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    double rho = 0.0;

    bool valid() const
    {
        return std::isfinite(mu1) && std::isfinite(mu2) && sigma1 > 0.0 && sigma2 > 0.0 &&
               std::isfinite(sigma1) && std::isfinite(sigma2) && rho > -1.0 && rho < 1.0;
    }

    Vector5 as_vector() const
    {
        Vector5 v;
        v << mu1, mu2, sigma1, sigma2, rho;
        return v;
    }

    static LocalParams from_vector(const Vector5& v) { return {v[0], v[1], v[2], v[3], v[4]}; }

    /// Relabels the two coordinates; rho is unchanged.
    LocalParams swapped() const { return {mu2, mu1, sigma2, sigma1, rho}; }

    friend bool operator==(const LocalParams&, const LocalParams&) = default;
};

/// Product of two normal kernels with scales b1, b2 (the only supported kind).
struct KernelSpec {
    Bandwidth b;
};

struct FitOptions {
    double tolerance = 1e-6;
    int max_iterations = 500;
    bool record_trace = false;
};

struct LocalFit {
    LocalParams theta;
    LocalPoint point;
    std::size_t lag = 0;
    Bandwidth bandwidth;
    bool converged = false;
    int iterations = 0;
    double neg_penalty = 0.0; // final L_n
    double gradient_norm = 0.0; // max-norm of dL_n/dtheta at theta
    std::string diagnostic;
    std::vector<double> trace; // L_n at accepted iterates, when requested
};

inline double kernel_weight(const Pair& w, const LocalPoint& v, const Bandwidth& b)
{
    const double u1 = (w[0] - v.v1) / b.b1();
    const double u2 = (w[1] - v.v2) / b.b2();
    return std::exp(-0.5 * (u1 * u1 + u2 * u2)) / (2.0 * std::numbers::pi * b.b1() * b.b2());
}

inline double log_psi(const Pair& w, const LocalParams& th)
{
    const double x = (w[0] - th.mu1) / th.sigma1;
    const double y = (w[1] - th.mu2) / th.sigma2;
    const double d = 1.0 - th.rho * th.rho;
    const double quad = (x * x + y * y) - 2.0 * th.rho * x * y;
    return -std::log(2.0 * std::numbers::pi) - std::log(th.sigma1) - std::log(th.sigma2) -
           0.5 * std::log(d) - quad / (2.0 * d);
}

inline double psi(const Pair& w, const LocalParams& th) { return std::exp(log_psi(w, th)); }

/// Gradient of log psi(w; theta) with respect to theta.
inline Vector5 score(const Pair& w, const LocalParams& th)
{
    const double x = (w[0] - th.mu1) / th.sigma1;
    const double y = (w[1] - th.mu2) / th.sigma2;
    const double r = th.rho;
    const double d = 1.0 - r * r;
    const double quad = (x * x + y * y) - 2.0 * r * x * y;
    Vector5 u;
    u[0] = (x - r * y) / (th.sigma1 * d);
    u[1] = (y - r * x) / (th.sigma2 * d);
    u[2] = -1.0 / th.sigma1 + (x * x - r * x * y) / (th.sigma1 * d);
    u[3] = -1.0 / th.sigma2 + (y * y - r * x * y) / (th.sigma2 * d);
    u[4] = r / d + x * y / d - r * quad / (d * d);
    return u;
}

/// First and second moments of a bivariate distribution.
struct Moments2 {
    double m1 = 0.0;
    double m2 = 0.0;
    double c11 = 0.0;
    double c22 = 0.0;
    double c12 = 0.0;
};

namespace detail {

// log psi and its score are quadratic in w, so their expectations under any
// distribution depend only on its first two moments.
struct StandardizedMoments {
    double ex, ey, exx, eyy, exy;
};

inline StandardizedMoments standardize(const Moments2& m, const LocalParams& th)
{
    StandardizedMoments s;
    s.ex = (m.m1 - th.mu1) / th.sigma1;
    s.ey = (m.m2 - th.mu2) / th.sigma2;
    s.exx = s.ex * s.ex + m.c11 / (th.sigma1 * th.sigma1);
    s.eyy = s.ey * s.ey + m.c22 / (th.sigma2 * th.sigma2);
    s.exy = s.ex * s.ey + m.c12 / (th.sigma1 * th.sigma2);
    return s;
}

} // namespace detail

inline double expected_log_psi(const Moments2& m, const LocalParams& th)
{
    const auto s = detail::standardize(m, th);
    const double d = 1.0 - th.rho * th.rho;
    const double quad = (s.exx + s.eyy) - 2.0 * th.rho * s.exy;
    return -std::log(2.0 * std::numbers::pi) - std::log(th.sigma1) - std::log(th.sigma2) -
           0.5 * std::log(d) - quad / (2.0 * d);
}

inline Vector5 expected_score(const Moments2& m, const LocalParams& th)
{
    const auto s = detail::standardize(m, th);
    const double r = th.rho;
    const double d = 1.0 - r * r;
    const double quad = (s.exx + s.eyy) - 2.0 * r * s.exy;
    Vector5 u;
    u[0] = (s.ex - r * s.ey) / (th.sigma1 * d);
    u[1] = (s.ey - r * s.ex) / (th.sigma2 * d);
    u[2] = -1.0 / th.sigma1 + (s.exx - r * s.exy) / (th.sigma1 * d);
    u[3] = -1.0 / th.sigma2 + (s.eyy - r * s.exy) / (th.sigma2 * d);
    u[4] = r / d + s.exy / d - r * quad / (d * d);
    return u;
}

/// K_b(w - v) psi(w; theta) = mass * N(w; mean, cov). mass is the value of
/// N(v; mu, Sigma + diag(b1^2, b2^2)).
struct KernelProduct {
    double mass = 0.0;
    Moments2 moments;
};

inline KernelProduct kernel_product(const LocalPoint& v, const KernelSpec& k,
                                    const LocalParams& th)
{
    const double s11 = th.sigma1 * th.sigma1;
    const double s22 = th.sigma2 * th.sigma2;
    const double s12 = th.rho * th.sigma1 * th.sigma2;
    const double a11 = s11 + k.b.b1() * k.b.b1();
    const double a22 = s22 + k.b.b2() * k.b.b2();
    const double a12 = s12;
    const double det = a11 * a22 - a12 * a12;

    const double d1 = v.v1 - th.mu1;
    const double d2 = v.v2 - th.mu2;
    // A^{-1} d
    const double q1 = (a22 * d1 - a12 * d2) / det;
    const double q2 = (a11 * d2 - a12 * d1) / det;
    const double quad = d1 * q1 + d2 * q2;

    KernelProduct out;
    out.mass = std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * std::sqrt(det));

    // mean = mu + Sigma A^{-1} d ; cov = (B^{-1} + Sigma^{-1})^{-1} = B A^{-1} Sigma
    out.moments.m1 = th.mu1 + s11 * q1 + s12 * q2;
    out.moments.m2 = th.mu2 + s12 * q1 + s22 * q2;
    const double i11 = a22 / det;
    const double i22 = a11 / det;
    const double i12 = -a12 / det;
    const double bb1 = k.b.b1() * k.b.b1();
    const double bb2 = k.b.b2() * k.b.b2();
    out.moments.c11 = bb1 * (i11 * s11 + i12 * s12);
    out.moments.c22 = bb2 * (i12 * s12 + i22 * s22);
    out.moments.c12 = 0.5 * (bb1 * (i11 * s12 + i12 * s22) + bb2 * (i12 * s11 + i22 * s12));
    return out;
}

/// Integral of K_b(w - v) psi(w; theta) over the plane.
inline double kernel_psi_integral(const LocalPoint& v, const KernelSpec& k, const LocalParams& th)
{
    return kernel_product(v, k, th).mass;
}

/// Integral of K_b(w - v) u(w; theta) psi(w; theta) over the plane.
inline Vector5 kernel_score_psi_integral(const LocalPoint& v, const KernelSpec& k,
                                         const LocalParams& th)
{
    const auto kp = kernel_product(v, k, th);
    if (kp.mass == 0.0)
        return Vector5::Zero();
    return kp.mass * expected_score(kp.moments, th);
}

inline double local_loglik(const LaggedPairs& pairs, const LocalPoint& v, const KernelSpec& k,
                           const LocalParams& th)
{
    if (pairs.pairs.empty())
        throw UsageError("local likelihood needs at least one pair");
    double sum = 0.0;
    for (const auto& w : pairs.pairs)
        sum += kernel_weight(w, v, k.b) * log_psi(w, th);
    return sum / static_cast<double>(pairs.size()) - kernel_psi_integral(v, k, th);
}

inline Vector5 local_loglik_grad(const LaggedPairs& pairs, const LocalPoint& v,
                                 const KernelSpec& k, const LocalParams& th)
{
    if (pairs.pairs.empty())
        throw UsageError("local likelihood needs at least one pair");
    Vector5 sum = Vector5::Zero();
    for (const auto& w : pairs.pairs)
        sum += kernel_weight(w, v, k.b) * score(w, th);
    return sum / static_cast<double>(pairs.size()) - kernel_score_psi_integral(v, k, th);
}

/// L_n compressed to the kernel-weighted moments of the pairs. Exact: the
/// sample term is a quadratic form in w, so evaluation no longer touches
/// the pairs.
class LocalObjective {
public:
    LocalObjective(const LaggedPairs& pairs, const LocalPoint& v, const KernelSpec& k)
        : point_(v), kernel_(k)
    {
        if (pairs.pairs.empty())
            throw UsageError("local likelihood needs at least one pair");
        double sw = 0.0, s1 = 0.0, s2 = 0.0;
        std::vector<double> weights(pairs.size());
        for (std::size_t t = 0; t < pairs.size(); ++t) {
            const auto& w = pairs.pairs[t];
            weights[t] = kernel_weight(w, v, k.b);
            sw += weights[t];
            s1 += weights[t] * w[0];
            s2 += weights[t] * w[1];
        }
        mass_ = sw / static_cast<double>(pairs.size());
        if (sw > 0.0) {
            moments_.m1 = s1 / sw;
            moments_.m2 = s2 / sw;
            double c11 = 0.0, c22 = 0.0, c12 = 0.0;
            for (std::size_t t = 0; t < pairs.size(); ++t) {
                const double d1 = pairs.pairs[t][0] - moments_.m1;
                const double d2 = pairs.pairs[t][1] - moments_.m2;
                c11 += weights[t] * d1 * d1;
                c22 += weights[t] * d2 * d2;
                c12 += weights[t] * d1 * d2;
            }
            moments_.c11 = c11 / sw;
            moments_.c22 = c22 / sw;
            moments_.c12 = c12 / sw;
        }
    }

    double value(const LocalParams& th) const
    {
        const double sample = mass_ > 0.0 ? mass_ * expected_log_psi(moments_, th) : 0.0;
        return sample - kernel_psi_integral(point_, kernel_, th);
    }

    Vector5 gradient(const LocalParams& th) const
    {
        Vector5 g = -kernel_score_psi_integral(point_, kernel_, th);
        if (mass_ > 0.0)
            g += mass_ * expected_score(moments_, th);
        return g;
    }

    /// n^{-1} sum_t K_b(w_t - v)
    double mass() const { return mass_; }
    const Moments2& weighted_moments() const { return moments_; }

    double weighted_correlation() const
    {
        const double den = std::sqrt(moments_.c11 * moments_.c22);
        if (!(den > 0.0))
            return 0.0;
        return moments_.c12 / den;
    }

private:
    LocalPoint point_;
    KernelSpec kernel_;
    double mass_ = 0.0;
    Moments2 moments_;
};

namespace detail {

// Unconstrained coordinates (mu1, mu2, log sigma1, log sigma2, atanh rho).
inline Vector5 to_unconstrained(const LocalParams& th)
{
    Vector5 e;
    e << th.mu1, th.mu2, std::log(th.sigma1), std::log(th.sigma2), std::atanh(th.rho);
    return e;
}

inline LocalParams from_unconstrained(const Vector5& e)
{
    return {e[0], e[1], std::exp(e[2]), std::exp(e[3]), std::tanh(e[4])};
}

inline Vector5 chain_to_unconstrained(const Vector5& grad_theta, const LocalParams& th)
{
    Vector5 g = grad_theta;
    g[2] *= th.sigma1;
    g[3] *= th.sigma2;
    g[4] *= 1.0 - th.rho * th.rho;
    return g;
}

inline bool all_pairs_identical(const LaggedPairs& pairs)
{
    const auto& first = pairs.pairs.front();
    return std::all_of(pairs.pairs.begin(), pairs.pairs.end(),
                       [&](const Pair& w) { return w == first; });
}

} // namespace detail

/// Default starting point (0, 0, 1, 1, r_w) with r_w the kernel-weighted
/// correlation of the pairs at v.
inline LocalParams default_init(const LocalObjective& objective)
{
    return {0.0, 0.0, 1.0, 1.0, std::clamp(objective.weighted_correlation(), -0.95, 0.95)};
}

/// Maximises L_n by BFGS in unconstrained coordinates with an Armijo
/// backtracking line search. Never throws on numerical trouble: the fit
/// comes back with converged = false and a diagnostic instead.
inline LocalFit fit_local(const LaggedPairs& pairs, const LocalPoint& v, const KernelSpec& k,
                          std::optional<LocalParams> init = std::nullopt,
                          const FitOptions& opts = {})
{
    LocalFit fit;
    fit.point = v;
    fit.lag = pairs.h;
    fit.bandwidth = k.b;

    const LocalObjective objective(pairs, v, k);

    LocalParams theta = init && init->valid() ? *init : default_init(objective);
    fit.theta = theta;

    if (detail::all_pairs_identical(pairs)) {
        fit.neg_penalty = objective.value(theta);
        fit.diagnostic = "all pairs identical: likelihood unbounded in sigma";
        return fit;
    }
    if (!(objective.mass() > 0.0)) {
        fit.neg_penalty = objective.value(theta);
        fit.diagnostic = "no kernel mass at point";
        return fit;
    }

    // minimise f = -L_n over eta
    Vector5 eta = detail::to_unconstrained(theta);
    double f = -objective.value(theta);
    Vector5 grad_theta = objective.gradient(theta);
    Vector5 g = -detail::chain_to_unconstrained(grad_theta, theta);
    Matrix5 inv_hessian = Matrix5::Identity();
    bool fresh_hessian = true;

    if (!std::isfinite(f) || !grad_theta.allFinite()) {
        fit.neg_penalty = -f;
        fit.diagnostic = "non-finite likelihood at initial point";
        return fit;
    }
    if (opts.record_trace)
        fit.trace.push_back(-f);

    constexpr double armijo = 1e-4;
    constexpr double max_step = 2.0;
    // L_n scales with the kernel mass; iterate to a tolerance relative to it.
    // The reported convergence contract stays the absolute tolerance.
    const double stop_tolerance = opts.tolerance * std::min(1.0, objective.mass());

    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        if (grad_theta.lpNorm<Eigen::Infinity>() <= stop_tolerance) {
            fit.converged = true;
            break;
        }

        Vector5 direction = -inv_hessian * g;
        double slope = g.dot(direction);
        if (!(slope < 0.0)) {
            inv_hessian.setIdentity();
            fresh_hessian = true;
            direction = -g;
            slope = g.dot(direction);
        }
        const double dmax = direction.lpNorm<Eigen::Infinity>();
        if (dmax > max_step) {
            direction *= max_step / dmax;
            slope *= max_step / dmax;
        }

        double step = 1.0;
        bool accepted = false;
        Vector5 eta_new;
        LocalParams theta_new;
        double f_new = 0.0;
        for (int ls = 0; ls < 60; ++ls) {
            eta_new = eta + step * direction;
            theta_new = detail::from_unconstrained(eta_new);
            if (theta_new.valid()) {
                f_new = -objective.value(theta_new);
                if (std::isfinite(f_new) && f_new <= f + armijo * step * slope) {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }

        if (!accepted) {
            if (!fresh_hessian) {
                inv_hessian.setIdentity();
                fresh_hessian = true;
                continue;
            }
            // no representable improvement left: accept if already within tolerance
            if (grad_theta.lpNorm<Eigen::Infinity>() <= opts.tolerance)
                fit.converged = true;
            else
                fit.diagnostic = "line search failed to improve the likelihood";
            break;
        }

        const Vector5 grad_theta_new = objective.gradient(theta_new);
        const Vector5 g_new = -detail::chain_to_unconstrained(grad_theta_new, theta_new);
        if (!grad_theta_new.allFinite()) {
            fit.diagnostic = "non-finite gradient";
            break;
        }

        const Vector5 s = eta_new - eta;
        const Vector5 y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (fresh_hessian)
                inv_hessian *= sy / y.dot(y);
            const double rho_k = 1.0 / sy;
            const Matrix5 left = Matrix5::Identity() - rho_k * s * y.transpose();
            inv_hessian = left * inv_hessian * left.transpose() + rho_k * s * s.transpose();
            fresh_hessian = false;
        }

        eta = eta_new;
        theta = theta_new;
        f = f_new;
        g = g_new;
        grad_theta = grad_theta_new;
        if (opts.record_trace)
            fit.trace.push_back(-f);
    }

    if (!fit.converged && fit.diagnostic.empty()) {
        if (grad_theta.lpNorm<Eigen::Infinity>() <= opts.tolerance)
            fit.converged = true;
        else
            fit.diagnostic = "iteration limit reached";
    }

    fit.theta = theta;
    fit.iterations = iter;
    fit.neg_penalty = -f;
    fit.gradient_norm = grad_theta.lpNorm<Eigen::Infinity>();
    return fit;
}

} // namespace lgspec
