#ifndef BINID_ESTIMATOR_HPP
#define BINID_ESTIMATOR_HPP

#include <cmath>
#include <cstdint>
#include <utility>

#include "binid/errors.hpp"
#include "binid/geometry.hpp"
#include "binid/linalg.hpp"
#include "binid/noise.hpp"

namespace binid {

/// Configuration of the projected quasi-Newton estimator.
struct EstimatorConfig {
    ConvexBox domain;        // parameter set D
    double regressor_bound;  // M, sup ||phi||; enters only the beta schedule
    double threshold_bound;  // C, sup |c_k|
    NoiseModel noise;
    double beta0;  // in (0, min(1, inf density at radius L*M + C))
    Mat p0;        // symmetric positive definite
    Vec theta0;    // initial estimate, must lie in the domain
};

/// Per-step outputs: the innovation, the scalar gain, and the iterate before
/// and after projection.
struct StepOutcome {
    double e;              // innovation, in [s-1, s]
    double a;              // gain scalar, in (0, 1]
    Vec theta_pre;         // pre-projection iterate
    Vec theta_hat;         // post-projection estimate
    double predicted_prob; // model probability of s = 1 before the update
};

/// Recursive identification from binary observations: one step consumes
/// (phi_k, c_k, s_{k+1}) and updates (theta_hat, P, P^{-1}, beta).
///
/// Update order per step k:
///   a_k     = 1 / (1 + beta_k^2 phi' P_k phi)
///   e_{k+1} = s - 1 + F_{k+1}(c - phi' theta_k)
///   P_{k+1} = P_k - beta_k^2 a_k (P_k phi)(P_k phi)'       (then symmetrized)
///   P_{k+1}^{-1} = P_k^{-1} + beta_k^2 phi phi'            (exact recursion)
///   theta_{k+1}  = Pi_{P_{k+1}^{-1}} { theta_k + a_k beta_k P_k phi e_{k+1} }
///   beta_{k+1}   = min(beta_k, inf_{|x| <= LM+C} f_{k+2}(x))
///
/// The inverse is maintained by its own recursion rather than by inverting P,
/// so mutual consistency of the two is a real check on the downdate; it is
/// re-measured every 1000 steps (see max_inverse_drift()).
class Estimator {
public:
    explicit Estimator(EstimatorConfig cfg)
        : domain_(std::move(cfg.domain)),
          noise_(std::move(cfg.noise)),
          regressor_bound_(cfg.regressor_bound),
          threshold_bound_(cfg.threshold_bound),
          theta_(std::move(cfg.theta0)),
          p_(std::move(cfg.p0)),
          beta_(cfg.beta0)
    {
        const std::size_t p = domain_.dim();
        if (theta_.size() != p || p_.rows() != p || p_.cols() != p)
            throw InvalidConfig("Estimator: dimension mismatch between domain, theta0 and P0");
        if (!all_finite(theta_) || !p_.finite())
            throw InvalidConfig("Estimator: non-finite initial values");
        if (!domain_.contains(theta_))
            throw InvalidConfig("Estimator: theta0 lies outside the parameter set");
        if (!(regressor_bound_ > 0.0) || !std::isfinite(regressor_bound_))
            throw InvalidConfig("Estimator: regressor bound M must be positive");
        if (!(threshold_bound_ >= 0.0) || !std::isfinite(threshold_bound_))
            throw InvalidConfig("Estimator: threshold bound C must be nonnegative");
        if (p_.asymmetry() > 1e-12 * std::max(1.0, p_.max_abs()))
            throw InvalidConfig("Estimator: P0 is not symmetric");
        if (sym_eigenvalues(p_).front() <= 0.0)
            throw InvalidConfig("Estimator: P0 is not positive definite");

        radius_ = domain_.norm_bound() * regressor_bound_ + threshold_bound_;
        if (!std::isfinite(radius_))
            throw InvalidConfig("Estimator: schedule radius L*M + C is not finite");
        const double bound = std::min(1.0, noise_.inf_density(1, radius_));
        if (!(beta_ > 0.0) || !(beta_ < bound))
            throw InvalidConfig("Estimator: beta0 = " + std::to_string(beta_) +
                                " outside the admissible interval (0, " + std::to_string(bound) +
                                ")");
        p_inv_ = invert_dense(p_);
        p_inv_.symmetrize();
    }

    StepOutcome step(const Vec& phi, double c, bool s)
    {
        if (phi.size() != domain_.dim())
            throw DimensionMismatch("Estimator::step: regressor dimension mismatch");
        if (!all_finite(phi) || !std::isfinite(c))
            throw NonFiniteInput("Estimator::step: non-finite regressor or threshold");

        // Assumption bounds are audited, not enforced: with unbounded inputs
        // they hold only almost surely, and they enter the algorithm through
        // the beta schedule alone.
        if (norm2(phi) > regressor_bound_)
            ++regressor_violations_;
        if (std::abs(c) > threshold_bound_)
            ++threshold_violations_;

        const Vec p_phi = p_.mul(phi);
        const double quad = std::max(dot(phi, p_phi), 0.0);
        const double beta_sq = beta_ * beta_;
        const double a = 1.0 / (1.0 + beta_sq * quad);

        const double cdf_val = noise_.cdf(k_ + 1, c - dot(phi, theta_));
        const double e = (s ? 1.0 : 0.0) - 1.0 + cdf_val;

        p_.add_outer(-beta_sq * a, p_phi);
        p_.symmetrize();
        p_inv_.add_outer(beta_sq, phi);

        Vec theta_pre = add_scaled(theta_, a * beta_ * e, p_phi);
        if (domain_.contains(theta_pre)) {
            theta_ = theta_pre;
        } else {
            theta_ = project(WeightedMetric(p_inv_), domain_, theta_pre);
        }

        beta_ = std::min(beta_, noise_.inf_density(k_ + 2, radius_));
        ++k_;

        if (k_ % 1000 == 0)
            max_inverse_drift_ = std::max(max_inverse_drift_, inverse_drift());

        return StepOutcome{e, a, std::move(theta_pre), theta_, 1.0 - cdf_val};
    }

    const Vec& estimate() const { return theta_; }
    const Mat& covariance() const { return p_; }
    const Mat& covariance_inverse() const { return p_inv_; }
    const ConvexBox& domain() const { return domain_; }
    double beta() const { return beta_; }
    double gamma() const { return 1.0 / beta_; }
    long step_count() const { return k_; }
    double schedule_radius() const { return radius_; }

    std::uint64_t regressor_bound_violations() const { return regressor_violations_; }
    std::uint64_t threshold_bound_violations() const { return threshold_violations_; }

    /// ||P P^{-1} - I||_max, freshly computed.
    double inverse_drift() const
    {
        Mat prod = p_.mul(p_inv_);
        for (std::size_t i = 0; i < prod.rows(); ++i)
            prod(i, i) -= 1.0;
        return prod.max_abs();
    }

    /// Worst drift seen at the periodic (every 1000 steps) checks.
    double max_inverse_drift() const { return max_inverse_drift_; }

private:
    ConvexBox domain_;
    NoiseModel noise_;
    double regressor_bound_;
    double threshold_bound_;
    double radius_ = 0.0;

    Vec theta_;
    Mat p_;
    Mat p_inv_;
    double beta_;
    long k_ = 0;

    std::uint64_t regressor_violations_ = 0;
    std::uint64_t threshold_violations_ = 0;
    double max_inverse_drift_ = 0.0;
};

} // namespace binid

#endif // BINID_ESTIMATOR_HPP
