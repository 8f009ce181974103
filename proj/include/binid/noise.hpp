#ifndef BINID_NOISE_HPP
#define BINID_NOISE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "binid/errors.hpp"
#include "binid/normal.hpp"
#include "binid/rng.hpp"

namespace binid {

/// Conditional distribution of the observation noise at time index k >= 1.
///
/// Only time-indexed (deterministic-schedule) conditional laws are supported;
/// laws depending on the whole past sigma-algebra are out of scope. Values are
/// immutable after construction and safe to share across replications; the
/// sampler takes the generator as an explicit argument.
class NoiseModel {
public:
    using SigmaFn = std::function<double(long)>;
    using CdfFn = std::function<double(long, double)>;
    using PdfFn = std::function<double(long, double)>;
    using MomentFn = std::function<double(long)>;
    using SamplerFn = std::function<double(long, SplitMix64&)>;

    static NoiseModel gaussian_constant(double sigma)
    {
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw InvalidConfig("NoiseModel: sigma must be a positive real");
        NoiseModel m;
        m.kind_ = Kind::Gaussian;
        m.sigma_fn_ = [sigma](long) { return sigma; };
        return m;
    }

    static NoiseModel gaussian_schedule(SigmaFn sigma_fn)
    {
        if (!sigma_fn)
            throw InvalidConfig("NoiseModel: empty sigma schedule");
        NoiseModel m;
        m.kind_ = Kind::Gaussian;
        m.sigma_fn_ = std::move(sigma_fn);
        return m;
    }

    /// sigma_k = sigma * (max(log k, 1))^(-1/4); well-defined at k = 1 where
    /// log k would vanish.
    static NoiseModel gaussian_log_decay(double sigma = 1.0)
    {
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw InvalidConfig("NoiseModel: sigma must be a positive real");
        return gaussian_schedule([sigma](long k) {
            const double lk = std::max(std::log(static_cast<double>(k)), 1.0);
            return sigma * std::pow(lk, -0.25);
        });
    }

    static NoiseModel custom(CdfFn cdf, PdfFn pdf, MomentFn mean, MomentFn variance,
                             SamplerFn sampler)
    {
        if (!cdf || !pdf || !mean || !variance || !sampler)
            throw InvalidConfig("NoiseModel: custom family requires all five functions");
        NoiseModel m;
        m.kind_ = Kind::Custom;
        m.cdf_ = std::move(cdf);
        m.pdf_ = std::move(pdf);
        m.mean_ = std::move(mean);
        m.variance_ = std::move(variance);
        m.sampler_ = std::move(sampler);
        return m;
    }

    double cdf(long k, double x) const
    {
        check_index(k);
        if (kind_ == Kind::Gaussian)
            return normal_cdf(x / sigma_fn_(k));
        return cdf_(k, x);
    }

    double pdf(long k, double x) const
    {
        check_index(k);
        if (kind_ == Kind::Gaussian) {
            const double s = sigma_fn_(k);
            return normal_pdf(x / s) / s;
        }
        return pdf_(k, x);
    }

    /// inf over |x| <= radius of the conditional density. Gaussian families
    /// are symmetric unimodal, so the infimum sits at the endpoint; custom
    /// families are scanned on a uniform grid of 1e4 intervals including both
    /// endpoints.
    double inf_density(long k, double radius) const
    {
        check_index(k);
        if (!(radius >= 0.0) || !std::isfinite(radius))
            throw NonFiniteInput("inf_density: radius must be finite and nonnegative");
        double inf;
        if (kind_ == Kind::Gaussian) {
            inf = pdf(k, radius);
        } else {
            constexpr int grid = 10000;
            inf = pdf_(k, -radius);
            for (int i = 1; i <= grid; ++i) {
                const double x = -radius + (2.0 * radius * i) / grid;
                inf = std::min(inf, pdf_(k, x));
            }
        }
        if (!(inf > 0.0))
            throw NonpositiveDensity("inf_density: density infimum is nonpositive at index " +
                                     std::to_string(k));
        return inf;
    }

    double conditional_mean(long k) const
    {
        check_index(k);
        if (kind_ == Kind::Gaussian)
            return 0.0;
        return mean_(k);
    }

    double variance(long k) const
    {
        check_index(k);
        if (kind_ == Kind::Gaussian) {
            const double s = sigma_fn_(k);
            return s * s;
        }
        return variance_(k);
    }

    double sample(long k, SplitMix64& rng) const
    {
        check_index(k);
        if (kind_ == Kind::Gaussian)
            return sigma_fn_(k) * normal_quantile(rng.uniform01());
        return sampler_(k, rng);
    }

private:
    enum class Kind { Gaussian, Custom };

    NoiseModel() = default;

    static void check_index(long k)
    {
        if (k < 1)
            throw InvalidConfig("NoiseModel: time index must be >= 1");
    }

    Kind kind_ = Kind::Gaussian;
    SigmaFn sigma_fn_;
    CdfFn cdf_;
    PdfFn pdf_;
    MomentFn mean_;
    MomentFn variance_;
    SamplerFn sampler_;
};

} // namespace binid

#endif // BINID_NOISE_HPP
