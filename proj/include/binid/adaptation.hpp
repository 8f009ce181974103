#ifndef BINID_ADAPTATION_HPP
#define BINID_ADAPTATION_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>

#include "binid/errors.hpp"
#include "binid/linalg.hpp"

namespace binid {

/// Regressor affine in the scalar input: phi(u) = g + h * u.
struct AffineRegressorBuilder {
    Vec g;
    Vec h;

    AffineRegressorBuilder(Vec g_in, Vec h_in) : g(std::move(g_in)), h(std::move(h_in))
    {
        if (g.size() != h.size() || g.empty())
            throw DimensionMismatch("AffineRegressorBuilder: g/h size mismatch");
        if (norm2(h) == 0.0)
            throw InvalidConfig("AffineRegressorBuilder: h must be nonzero");
    }

    Vec phi(double u) const { return add_scaled(g, u, h); }
};

/// One-step-ahead output prediction from the current estimate:
/// y_hat = theta_hat' phi + E(v_next | past).
inline double predict(const Vec& theta_hat, const Vec& phi, double mean_next)
{
    return dot(theta_hat, phi) + mean_next;
}

/// Squared gap between the best predictor and the adaptive one,
/// (theta - theta_hat)' phi squared. Simulation-side: needs the true theta.
inline double regret(const Vec& theta_true, const Vec& theta_hat, const Vec& phi)
{
    const double d = dot(sub(theta_true, theta_hat), phi);
    return d * d;
}

struct ControlDecision {
    double u;
    bool clamped;
};

/// Certainty-equivalence input: choose u so the predicted output equals the
/// reference, theta_hat' phi(u) + mean_next = y_star. A denominator smaller
/// than gain_floor is replaced by sign(den) * gain_floor (sign(0) := +1) and
/// flagged instead of failing.
inline ControlDecision control_input(const Vec& theta_hat, const AffineRegressorBuilder& builder,
                                     double y_star, double mean_next, double gain_floor)
{
    if (theta_hat.size() != builder.g.size())
        throw DimensionMismatch("control_input: estimate dimension mismatch");
    if (!(gain_floor > 0.0))
        throw InvalidConfig("control_input: gain_floor must be positive");
    double den = dot(theta_hat, builder.h);
    bool clamped = false;
    if (std::abs(den) < gain_floor) {
        den = (den >= 0.0) ? gain_floor : -gain_floor;
        clamped = true;
    }
    return {(y_star - mean_next - dot(theta_hat, builder.g)) / den, clamped};
}

inline double g_statistic(double theta_err_sq, long n)
{
    return theta_err_sq * std::sqrt(static_cast<double>(n)) / std::log(static_cast<double>(n));
}

inline double l_statistic(double j, double mean_sigma_sq, long n)
{
    return std::abs(j - mean_sigma_sq) *
           std::sqrt(static_cast<double>(n) / std::log(std::log(static_cast<double>(n))));
}

/// Running tracking/prediction statistics. J_n is the mean squared tracking
/// error over the first n steps; L_n and G_n carry the rate scalings and are
/// defined only for n >= 3 (log and log log must be positive).
class TrackingMetrics {
public:
    /// Record step k (1-based, must be called in order). theta_err_sq is
    /// ||theta - theta_hat_k||^2 for the estimate after k steps.
    void update(long k, double y, double y_star, double sigma_sq_k, double r_k,
                double theta_err_sq)
    {
        if (k != n_ + 1)
            throw InvalidConfig("TrackingMetrics::update: steps must be recorded in order");
        n_ = k;
        const double err = y - y_star;
        sq_err_sum_ += err * err;
        sigma_sq_sum_ += sigma_sq_k;
        regret_sum_ += r_k;
        theta_err_sq_ = theta_err_sq;
        tracking_ = true;
    }

    /// Prediction-only runs (no reference signal): J_n and L_n stay undefined.
    void update_prediction(long k, double sigma_sq_k, double r_k, double theta_err_sq)
    {
        if (k != n_ + 1)
            throw InvalidConfig("TrackingMetrics::update_prediction: steps must be in order");
        n_ = k;
        sigma_sq_sum_ += sigma_sq_k;
        regret_sum_ += r_k;
        theta_err_sq_ = theta_err_sq;
    }

    long n() const { return n_; }
    double regret_sum() const { return regret_sum_; }
    double theta_err_sq() const { return theta_err_sq_; }
    double mean_sigma_sq() const { return n_ > 0 ? sigma_sq_sum_ / static_cast<double>(n_) : 0.0; }

    std::optional<double> j() const
    {
        if (!tracking_ || n_ < 1)
            return std::nullopt;
        return sq_err_sum_ / static_cast<double>(n_);
    }

    std::optional<double> g() const
    {
        if (n_ < 3)
            return std::nullopt;
        return g_statistic(theta_err_sq_, n_);
    }

    std::optional<double> l() const
    {
        if (!tracking_ || n_ < 3)
            return std::nullopt;
        return l_statistic(*j(), mean_sigma_sq(), n_);
    }

private:
    long n_ = 0;
    bool tracking_ = false;
    double sq_err_sum_ = 0.0;
    double sigma_sq_sum_ = 0.0;
    double regret_sum_ = 0.0;
    double theta_err_sq_ = 0.0;
};

} // namespace binid

#endif // BINID_ADAPTATION_HPP
