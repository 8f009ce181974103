#ifndef BINID_SIM_HPP
#define BINID_SIM_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "binid/adaptation.hpp"
#include "binid/config.hpp"
#include "binid/errors.hpp"
#include "binid/estimator.hpp"
#include "binid/geometry.hpp"
#include "binid/linalg.hpp"
#include "binid/noise.hpp"
#include "binid/rng.hpp"

namespace binid {

/// The simulated truth: y_{k+1} = phi_k' theta + v_{k+1}, observed through
/// the 1-bit sensor s_{k+1} = I(y_{k+1} >= c_k).
struct Plant {
    Vec theta_true;
    NoiseModel noise;
    std::function<double(long)> threshold; // c_k

    double threshold_at(long k) const { return threshold ? threshold(k) : 0.0; }
};

struct PlantStep {
    double y;
    bool s;
    double v;
};

inline PlantStep step_plant(const Plant& plant, const Vec& phi, long k, SplitMix64& rng)
{
    const double v = plant.noise.sample(k + 1, rng);
    const double y = dot(phi, plant.theta_true) + v;
    const double c = plant.threshold_at(k);
    return {y, y >= c, v};
}

/// Regressor generators. The Gaussian kinds produce phi_k = (1, u_k) with
/// u_k ~ (k+1)^(-exponent) N(0,1) (time index 1-based); file streams carry
/// arbitrary p. The controller kind is driven by the closed loop, not here.
class ExcitationSource {
public:
    enum class Kind { DecayingGaussian, ConstantGaussian, FromController, FromFile };

    static ExcitationSource decaying_gaussian(double exponent)
    {
        ExcitationSource e;
        e.kind_ = Kind::DecayingGaussian;
        e.exponent_ = exponent;
        return e;
    }

    static ExcitationSource constant_gaussian()
    {
        ExcitationSource e;
        e.kind_ = Kind::ConstantGaussian;
        return e;
    }

    static ExcitationSource from_controller()
    {
        ExcitationSource e;
        e.kind_ = Kind::FromController;
        return e;
    }

    static ExcitationSource from_file(std::vector<Vec> rows)
    {
        if (rows.empty())
            throw InvalidConfig("ExcitationSource: empty regressor file");
        const std::size_t p = rows.front().size();
        for (const Vec& r : rows)
            if (r.size() != p)
                throw InvalidConfig("ExcitationSource: ragged regressor file");
        ExcitationSource e;
        e.kind_ = Kind::FromFile;
        e.rows_ = std::move(rows);
        return e;
    }

    Kind kind() const { return kind_; }
    double exponent() const { return exponent_; }
    std::size_t file_rows() const { return rows_.size(); }

    Vec make_phi(long k, SplitMix64& rng) const
    {
        switch (kind_) {
        case Kind::DecayingGaussian: {
            const double scale = std::pow(static_cast<double>(k + 1), -exponent_);
            return {1.0, scale * normal_quantile(rng.uniform01())};
        }
        case Kind::ConstantGaussian:
            return {1.0, normal_quantile(rng.uniform01())};
        case Kind::FromFile:
            if (static_cast<std::size_t>(k) >= rows_.size())
                throw IoError("ExcitationSource: regressor file shorter than the run");
            return rows_[static_cast<std::size_t>(k)];
        case Kind::FromController:
            break;
        }
        throw InvalidConfig("ExcitationSource: controller kind has no free-running stream");
    }

private:
    Kind kind_ = Kind::DecayingGaussian;
    double exponent_ = 0.25;
    std::vector<Vec> rows_;
};

/// Accumulates A_n = P_0^{-1} + sum_i phi_i phi_i' incrementally. This is the
/// unweighted excitation matrix of the diagnostics, not the estimator's
/// beta-weighted P^{-1}.
class ExcitationAccumulator {
public:
    explicit ExcitationAccumulator(Mat p0_inv) : a_(std::move(p0_inv)) { a_.symmetrize(); }

    void add(const Vec& phi) { a_.add_outer(1.0, phi); }
    const Mat& matrix() const { return a_; }

private:
    Mat a_;
};

struct ExcitationDiagnostics {
    double lambda_min;
    double lambda_max;
    double lai_wei; // log(lambda_max) / lambda_min
    double logdet;
};

inline ExcitationDiagnostics diagnostics(const Mat& a_n)
{
    const Vec ev = sym_eigenvalues(a_n);
    double logdet = 0.0;
    for (double v : ev) {
        if (!(v > 0.0))
            throw SingularMetric("diagnostics: excitation matrix not positive definite");
        logdet += std::log(v);
    }
    return {ev.front(), ev.back(), std::log(ev.back()) / ev.front(), logdet};
}

/// One trace row. theta is the estimate entering the step (the one the
/// innovation and the regret use); G_n at row k is scaled with n = k, while
/// J/L include the row itself (n = k+1). Diagnostics fields are present only
/// on rows where the eigensolve ran.
struct StepRecord {
    long k = 0;
    Vec phi;
    double c = 0.0;
    double y = 0.0;
    int s = 0;
    double v = 0.0; // latent noise; in-memory only, recoverable from y
    Vec theta;
    double e = 0.0;
    double a = 0.0;
    double beta = 0.0;
    double omega = 0.0;
    double regret = 0.0;
    double cum_regret = 0.0;
    std::optional<double> lambda_min;
    std::optional<double> lambda_max;
    std::optional<double> lai_wei;
    std::optional<double> g_n;
    std::optional<double> j_n;
    std::optional<double> l_n;
    int clamped = 0;
};

using RecordSink = std::function<void(const StepRecord&)>;

/// Per-seed stats captured at a checkpoint index n.
struct CheckpointRow {
    std::uint64_t seed = 0;
    long n = 0;
    double theta_err_sq = 0.0;
    std::optional<double> g_n;
    double cum_regret = 0.0;
    double regret_over_logn = 0.0;
    double avg_regret = 0.0;
    std::optional<double> j_n;
    std::optional<double> l_n;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double lai_wei = 0.0;
    std::uint64_t clamp_count = 0;
    double omega_mean = 0.0;
    std::uint64_t phi_bound_violations = 0;
};

struct ReplicationResult {
    std::uint64_t seed = 0;
    long n = 0;
    std::vector<CheckpointRow> checkpoints;
    Vec theta_final;
    double omega_mean = 0.0;
    std::uint64_t clamp_count = 0;
    std::uint64_t phi_bound_violations = 0;
};

/// Everything needed to run one experiment, assembled and cross-checked from
/// an ExperimentConfig. build_experiment is the single validation path shared
/// by `run` and `validate`.
struct BuiltExperiment {
    ExperimentConfig cfg;
    std::size_t p = 0;
    ConvexBox domain;
    NoiseModel noise;
    Mat p0;
    ExcitationSource excitation;
    std::vector<double> reference; // nonempty only when read from file
    double domain_norm_bound = 0.0;
    double schedule_radius = 0.0; // L*M + C
    double beta0_bound = 0.0;     // min(1, inf density at radius)
};

namespace detail {

inline std::vector<Vec> read_regressor_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open regressor file: " + path);
    std::vector<Vec> rows;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line.front() == '#')
            continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        Vec row;
        double x;
        while (ls >> x)
            row.push_back(x);
        if (!row.empty())
            rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<double> read_scalar_file(const std::string& path)
{
    std::vector<double> out;
    for (const Vec& row : read_regressor_file(path)) {
        if (row.size() != 1)
            throw ConfigError("reference file must hold one value per line: " + path);
        out.push_back(row[0]);
    }
    return out;
}

} // namespace detail

inline BuiltExperiment build_experiment(const ExperimentConfig& cfg)
{
    const std::size_t p = cfg.theta_true.size();
    if (p == 0)
        throw ConfigError("plant.theta must not be empty");
    if (cfg.domain_lo.size() != p || cfg.domain_hi.size() != p || cfg.theta0.size() != p)
        throw ConfigError("domain.lo, domain.hi and estimator.theta0 must match plant.theta's "
                          "dimension");

    ConvexBox domain(cfg.domain_lo, cfg.domain_hi);
    if (!domain.contains(cfg.theta_true))
        throw ConfigError("plant.theta lies outside the domain box");
    if (!domain.contains(cfg.theta0))
        throw ConfigError("estimator.theta0 lies outside the domain box");

    NoiseModel noise = [&] {
        if (cfg.noise_family == "gaussian-constant")
            return NoiseModel::gaussian_constant(cfg.noise_sigma);
        if (cfg.noise_family == "gaussian-logdecay")
            return NoiseModel::gaussian_log_decay(cfg.noise_sigma);
        throw ConfigError("noise.family must be \"gaussian-constant\" or \"gaussian-logdecay\"");
    }();

    Mat p0;
    if (cfg.p0_kind == "identity") {
        p0 = Mat::identity(p);
    } else if (cfg.p0_kind == "diag") {
        if (cfg.p0_diag.size() != p)
            throw ConfigError("estimator.p0 diagonal length must match the parameter dimension");
        for (double d : cfg.p0_diag)
            if (!(d > 0.0))
                throw ConfigError("estimator.p0 diagonal entries must be positive");
        p0 = Mat::diagonal(cfg.p0_diag);
    } else {
        throw ConfigError("estimator.p0 must be \"identity\" or a diagonal list");
    }

    ExcitationSource excitation = [&] {
        if (cfg.excitation_kind == "decaying-gaussian") {
            if (p != 2)
                throw ConfigError("excitation.kind decaying-gaussian requires dimension 2");
            return ExcitationSource::decaying_gaussian(cfg.excitation_exponent);
        }
        if (cfg.excitation_kind == "constant-gaussian") {
            if (p != 2)
                throw ConfigError("excitation.kind constant-gaussian requires dimension 2");
            return ExcitationSource::constant_gaussian();
        }
        if (cfg.excitation_kind == "controller") {
            if (p != 2)
                throw ConfigError("excitation.kind controller requires dimension 2");
            return ExcitationSource::from_controller();
        }
        if (cfg.excitation_kind == "file") {
            if (cfg.excitation_file.empty())
                throw ConfigError("excitation.kind file requires excitation.file");
            std::vector<Vec> rows = detail::read_regressor_file(cfg.excitation_file);
            if (rows.empty())
                throw ConfigError("excitation.file holds no regressors: " + cfg.excitation_file);
            if (rows.front().size() != p)
                throw ConfigError("excitation.file dimension does not match plant.theta");
            return ExcitationSource::from_file(std::move(rows));
        }
        throw ConfigError("excitation.kind must be decaying-gaussian, constant-gaussian, "
                          "controller or file");
    }();

    if (cfg.control_enabled && excitation.kind() != ExcitationSource::Kind::FromController)
        throw ConfigError("control.enabled requires excitation.kind = \"controller\"");
    if (!cfg.control_enabled && excitation.kind() == ExcitationSource::Kind::FromController)
        throw ConfigError("excitation.kind = \"controller\" requires control.enabled = true");

    if (cfg.n < 0)
        throw ConfigError("run.n must be nonnegative");
    if (cfg.seeds < 1)
        throw ConfigError("run.seeds must be at least 1");
    if (cfg.stride < 0)
        throw ConfigError("run.stride must be nonnegative");
    if (excitation.kind() == ExcitationSource::Kind::FromFile &&
        static_cast<long>(excitation.file_rows()) < cfg.n)
        throw ConfigError("excitation.file holds fewer rows than run.n");

    if (!(cfg.bound_m > 0.0))
        throw ConfigError("bounds.M must be positive");
    if (!(cfg.bound_c >= 0.0))
        throw ConfigError("bounds.C must be nonnegative");
    if (std::abs(cfg.threshold_c) > cfg.bound_c)
        throw ConfigError("threshold.c exceeds bounds.C");
    if (!(cfg.gain_floor > 0.0))
        throw ConfigError("control.gain_floor must be positive");

    std::vector<double> reference;
    if (cfg.control_enabled && !cfg.y_star_file.empty()) {
        reference = detail::read_scalar_file(cfg.y_star_file);
        if (static_cast<long>(reference.size()) < cfg.n)
            throw ConfigError("control.y_star_file holds fewer values than run.n");
    }

    const double l = domain.norm_bound();
    const double radius = l * cfg.bound_m + cfg.bound_c;
    const double bound = std::min(1.0, noise.inf_density(1, radius));
    if (!(cfg.beta0 > 0.0) || !(cfg.beta0 < bound))
        throw ConfigError("estimator.beta0 = " + detail::fmt_double(cfg.beta0) +
                          " outside the admissible interval (0, " + detail::fmt_double(bound) +
                          ") set by the density infimum over |x| <= L*M+C = " +
                          detail::fmt_double(radius));

    return BuiltExperiment{cfg,  p,     domain, noise, std::move(p0), std::move(excitation),
                           std::move(reference), l,    radius, bound};
}

namespace detail {

inline bool is_diag_index(long m)
{
    // 1-2-5 ladder: 1, 2, 5, 10, 20, 50, ...
    if (m < 1)
        return false;
    long base = 1;
    while (base <= m) {
        if (m == base || m == 2 * base || m == 5 * base)
            return true;
        base *= 10;
    }
    return false;
}

inline bool emit_row(long k, long n, long stride)
{
    if (k == n - 1)
        return true;
    if (stride > 0)
        return k % stride == 0;
    return k < 10000 || k % 10 == 0;
}

inline std::vector<long> checkpoint_indices(long n)
{
    std::vector<long> cps;
    for (long c : {100L, 1000L, 10000L, 100000L})
        if (c <= n)
            cps.push_back(c);
    if (n >= 1 && (cps.empty() || cps.back() != n))
        cps.push_back(n);
    std::sort(cps.begin(), cps.end());
    return cps;
}

} // namespace detail

/// Run one replication of the closed loop (excitation or controller -> plant
/// -> estimator -> metrics). Emits strided StepRecords through the sink and
/// captures checkpoint statistics.
inline ReplicationResult run_replication(const BuiltExperiment& ex, std::uint64_t seed,
                                         const RecordSink& sink = {})
{
    const ExperimentConfig& cfg = ex.cfg;
    const long n = cfg.n;

    Plant plant{cfg.theta_true, ex.noise, [c = cfg.threshold_c](long) { return c; }};
    Estimator estimator(EstimatorConfig{ex.domain, cfg.bound_m, cfg.bound_c, ex.noise, cfg.beta0,
                                        ex.p0, cfg.theta0});
    ExcitationAccumulator acc(invert_dense(ex.p0));
    TrackingMetrics metrics;

    // substream 1: excitation, substream 2: plant noise
    SplitMix64 rng_exc = SplitMix64::substream(seed, 1);
    SplitMix64 rng_noise = SplitMix64::substream(seed, 2);

    const bool control = cfg.control_enabled;
    std::optional<AffineRegressorBuilder> builder;
    if (control)
        builder.emplace(Vec{1.0, 0.0}, Vec{0.0, 1.0});

    const std::vector<long> cps = detail::checkpoint_indices(n);
    std::size_t next_cp = 0;

    ReplicationResult result;
    result.seed = seed;
    result.n = n;

    double cum_regret = 0.0;
    double omega_sum = 0.0;
    std::uint64_t clamp_count = 0;

    for (long k = 0; k < n; ++k) {
        // regressor for this step
        Vec phi;
        bool clamped = false;
        double y_star = cfg.y_star;
        if (control) {
            if (!ex.reference.empty())
                y_star = ex.reference[static_cast<std::size_t>(k)];
            const ControlDecision dec =
                control_input(estimator.estimate(), *builder, y_star,
                              ex.noise.conditional_mean(k + 1), cfg.gain_floor);
            clamped = dec.clamped;
            if (clamped)
                ++clamp_count;
            phi = builder->phi(dec.u);
        } else {
            phi = ex.excitation.make_phi(k, rng_exc);
        }

        const double c = plant.threshold_at(k);
        const PlantStep ps = step_plant(plant, phi, k, rng_noise);

        const Vec theta_in = estimator.estimate();
        const double beta_used = estimator.beta();
        const double r_k = regret(cfg.theta_true, theta_in, phi);
        cum_regret += r_k;
        const double omega =
            (ps.s ? 1.0 : 0.0) - 1.0 + ex.noise.cdf(k + 1, c - dot(phi, cfg.theta_true));
        omega_sum += omega;

        const StepOutcome out = estimator.step(phi, c, ps.s);

        const Vec err_after = sub(cfg.theta_true, estimator.estimate());
        const double theta_err_sq_after = dot(err_after, err_after);
        if (control)
            metrics.update(k + 1, ps.y, y_star, ex.noise.variance(k + 1), r_k,
                           theta_err_sq_after);
        else
            metrics.update_prediction(k + 1, ex.noise.variance(k + 1), r_k, theta_err_sq_after);

        acc.add(phi);

        const bool diag_row = detail::is_diag_index(k + 1) || k == n - 1;
        std::optional<ExcitationDiagnostics> diag;
        if (diag_row)
            diag = diagnostics(acc.matrix());

        if (sink && (diag_row || detail::emit_row(k, n, cfg.stride))) {
            StepRecord rec;
            rec.k = k;
            rec.phi = phi;
            rec.c = c;
            rec.y = ps.y;
            rec.s = ps.s ? 1 : 0;
            rec.v = ps.v;
            rec.theta = theta_in;
            rec.e = out.e;
            rec.a = out.a;
            rec.beta = beta_used;
            rec.omega = omega;
            rec.regret = r_k;
            rec.cum_regret = cum_regret;
            if (diag) {
                rec.lambda_min = diag->lambda_min;
                rec.lambda_max = diag->lambda_max;
                rec.lai_wei = diag->lai_wei;
            }
            if (k >= 3) {
                const Vec err_in = sub(cfg.theta_true, theta_in);
                rec.g_n = g_statistic(dot(err_in, err_in), k);
            }
            rec.j_n = metrics.j();
            rec.l_n = metrics.l();
            rec.clamped = clamped ? 1 : 0;
            sink(rec);
        }

        if (next_cp < cps.size() && k + 1 == cps[next_cp]) {
            const long m = k + 1;
            const ExcitationDiagnostics d = diag ? *diag : diagnostics(acc.matrix());
            CheckpointRow row;
            row.seed = seed;
            row.n = m;
            row.theta_err_sq = theta_err_sq_after;
            row.g_n = metrics.g();
            row.cum_regret = cum_regret;
            row.regret_over_logn = cum_regret / std::log(static_cast<double>(m));
            row.avg_regret = cum_regret / static_cast<double>(m);
            row.j_n = metrics.j();
            row.l_n = metrics.l();
            row.lambda_min = d.lambda_min;
            row.lambda_max = d.lambda_max;
            row.lai_wei = d.lai_wei;
            row.clamp_count = clamp_count;
            row.omega_mean = omega_sum / static_cast<double>(m);
            row.phi_bound_violations = estimator.regressor_bound_violations();
            result.checkpoints.push_back(row);
            ++next_cp;
        }
    }

    result.theta_final = estimator.estimate();
    result.omega_mean = n > 0 ? omega_sum / static_cast<double>(n) : 0.0;
    result.clamp_count = clamp_count;
    result.phi_bound_violations = estimator.regressor_bound_violations();
    return result;
}

namespace detail {

inline void csv_field(std::string& line, double v)
{
    line += fmt_double(v);
}

inline void csv_field(std::string& line, const std::optional<double>& v)
{
    if (v)
        line += fmt_double(*v);
}

} // namespace detail

/// Streams StepRecords to a trace CSV. Header and per-row layout are fixed:
/// floats carry 17 significant digits, undefined fields stay empty.
class TraceWriter {
public:
    TraceWriter(const std::filesystem::path& path, std::size_t p) : out_(path), p_(p)
    {
        if (!out_)
            throw IoError("cannot open trace file for writing: " + path.string());
        out_ << header(p) << "\n";
    }

    static std::string header(std::size_t p)
    {
        std::string h = "k";
        for (std::size_t i = 0; i < p; ++i)
            h += ",phi_" + std::to_string(i);
        h += ",c,y,s";
        for (std::size_t i = 0; i < p; ++i)
            h += ",theta_" + std::to_string(i);
        h += ",e,a,beta,omega,regret,cum_regret,lambda_min,lambda_max,lai_wei,G_n,J_n,L_n,clamped";
        return h;
    }

    void write(const StepRecord& rec)
    {
        std::string line = std::to_string(rec.k);
        for (std::size_t i = 0; i < p_; ++i) {
            line += ',';
            detail::csv_field(line, rec.phi[i]);
        }
        line += ',';
        detail::csv_field(line, rec.c);
        line += ',';
        detail::csv_field(line, rec.y);
        line += ',';
        line += std::to_string(rec.s);
        for (std::size_t i = 0; i < p_; ++i) {
            line += ',';
            detail::csv_field(line, rec.theta[i]);
        }
        line += ',';
        detail::csv_field(line, rec.e);
        line += ',';
        detail::csv_field(line, rec.a);
        line += ',';
        detail::csv_field(line, rec.beta);
        line += ',';
        detail::csv_field(line, rec.omega);
        line += ',';
        detail::csv_field(line, rec.regret);
        line += ',';
        detail::csv_field(line, rec.cum_regret);
        line += ',';
        detail::csv_field(line, rec.lambda_min);
        line += ',';
        detail::csv_field(line, rec.lambda_max);
        line += ',';
        detail::csv_field(line, rec.lai_wei);
        line += ',';
        detail::csv_field(line, rec.g_n);
        line += ',';
        detail::csv_field(line, rec.j_n);
        line += ',';
        detail::csv_field(line, rec.l_n);
        line += ',';
        line += std::to_string(rec.clamped);
        out_ << line << "\n";
    }

    void close() { out_.close(); }

private:
    std::ofstream out_;
    std::size_t p_;
};

struct ExperimentResult {
    std::filesystem::path out_dir;
    std::vector<ReplicationResult> replications; // ordered by seed
    std::vector<std::filesystem::path> trace_files;
};

namespace detail {

inline double quantile(std::vector<double> v, double q)
{
    std::sort(v.begin(), v.end());
    if (v.empty())
        return std::nan("");
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size())
        return v.back();
    const double frac = pos - static_cast<double>(i);
    return v[i] + frac * (v[i + 1] - v[i]);
}

} // namespace detail

/// Median / quartiles across seeds of one metric at one checkpoint.
struct SummaryStat {
    long n = 0;
    std::string metric;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

inline std::vector<SummaryStat> summarize(const std::vector<ReplicationResult>& reps)
{
    std::vector<SummaryStat> stats;
    if (reps.empty())
        return stats;
    const std::size_t ncp = reps.front().checkpoints.size();
    using Getter = std::function<std::optional<double>(const CheckpointRow&)>;
    const std::vector<std::pair<std::string, Getter>> metrics = {
        {"theta_err_sq", [](const CheckpointRow& r) { return std::optional<double>(r.theta_err_sq); }},
        {"G_n", [](const CheckpointRow& r) { return r.g_n; }},
        {"cum_regret", [](const CheckpointRow& r) { return std::optional<double>(r.cum_regret); }},
        {"regret_over_logn",
         [](const CheckpointRow& r) { return std::optional<double>(r.regret_over_logn); }},
        {"avg_regret", [](const CheckpointRow& r) { return std::optional<double>(r.avg_regret); }},
        {"J_n", [](const CheckpointRow& r) { return r.j_n; }},
        {"L_n", [](const CheckpointRow& r) { return r.l_n; }},
        {"lambda_min", [](const CheckpointRow& r) { return std::optional<double>(r.lambda_min); }},
        {"lambda_max", [](const CheckpointRow& r) { return std::optional<double>(r.lambda_max); }},
        {"lai_wei", [](const CheckpointRow& r) { return std::optional<double>(r.lai_wei); }},
        {"abs_j_minus_one",
         [](const CheckpointRow& r) {
             if (!r.j_n)
                 return std::optional<double>();
             return std::optional<double>(std::abs(*r.j_n - 1.0));
         }},
    };
    for (std::size_t c = 0; c < ncp; ++c) {
        for (const auto& [name, get] : metrics) {
            std::vector<double> vals;
            for (const ReplicationResult& rep : reps) {
                if (c >= rep.checkpoints.size())
                    continue;
                if (auto v = get(rep.checkpoints[c]))
                    vals.push_back(*v);
            }
            if (vals.empty())
                continue;
            SummaryStat st;
            st.n = reps.front().checkpoints[c].n;
            st.metric = name;
            st.median = detail::quantile(vals, 0.5);
            st.q25 = detail::quantile(vals, 0.25);
            st.q75 = detail::quantile(vals, 0.75);
            stats.push_back(st);
        }
    }
    return stats;
}

/// Median across seeds of a checkpoint metric; empty when the metric is
/// undefined at that index.
inline std::optional<double> median_metric(const std::vector<ReplicationResult>& reps, long n,
                                           const std::function<std::optional<double>(const CheckpointRow&)>& get)
{
    std::vector<double> vals;
    for (const ReplicationResult& rep : reps)
        for (const CheckpointRow& row : rep.checkpoints)
            if (row.n == n)
                if (auto v = get(row))
                    vals.push_back(*v);
    if (vals.empty())
        return std::nullopt;
    return detail::quantile(vals, 0.5);
}

namespace detail {

inline void write_summary_csv(const std::filesystem::path& path,
                              const std::vector<ReplicationResult>& reps)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write summary file: " + path.string());
    out << "seed,n,theta_err_sq,G_n,cum_regret,regret_over_logn,avg_regret,J_n,L_n,"
           "lambda_min,lambda_max,lai_wei,clamp_count,omega_mean,phi_bound_violations\n";
    for (const ReplicationResult& rep : reps) {
        for (const CheckpointRow& row : rep.checkpoints) {
            std::string line = std::to_string(row.seed) + "," + std::to_string(row.n);
            line += ',';
            csv_field(line, row.theta_err_sq);
            line += ',';
            csv_field(line, row.g_n);
            line += ',';
            csv_field(line, row.cum_regret);
            line += ',';
            csv_field(line, row.regret_over_logn);
            line += ',';
            csv_field(line, row.avg_regret);
            line += ',';
            csv_field(line, row.j_n);
            line += ',';
            csv_field(line, row.l_n);
            line += ',';
            csv_field(line, row.lambda_min);
            line += ',';
            csv_field(line, row.lambda_max);
            line += ',';
            csv_field(line, row.lai_wei);
            line += ',';
            line += std::to_string(row.clamp_count);
            line += ',';
            csv_field(line, row.omega_mean);
            line += ',';
            line += std::to_string(row.phi_bound_violations);
            out << line << "\n";
        }
    }
}

inline void write_summary_stats_csv(const std::filesystem::path& path,
                                    const std::vector<SummaryStat>& stats)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write summary stats file: " + path.string());
    out << "n,metric,median,q25,q75\n";
    for (const SummaryStat& st : stats) {
        std::string line = std::to_string(st.n) + "," + st.metric;
        line += ',';
        csv_field(line, st.median);
        line += ',';
        csv_field(line, st.q25);
        line += ',';
        csv_field(line, st.q75);
        out << line << "\n";
    }
}

} // namespace detail

/// Run all replications (seed_i = base_seed + i) concurrently, write per-seed
/// traces plus summary.csv / summary_stats.csv into out_dir, and return the
/// in-memory results ordered by seed.
inline ExperimentResult run_experiment(const BuiltExperiment& ex,
                                       const std::filesystem::path& out_dir)
{
    std::filesystem::create_directories(out_dir);

    const int nseeds = ex.cfg.seeds;
    std::vector<ReplicationResult> results(static_cast<std::size_t>(nseeds));
    std::vector<std::filesystem::path> traces(static_cast<std::size_t>(nseeds));
    std::vector<std::string> failures(static_cast<std::size_t>(nseeds));

    std::atomic<int> next{0};
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned nworkers = std::min<unsigned>(hw, static_cast<unsigned>(nseeds));

    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= nseeds)
                return;
            const std::uint64_t seed = ex.cfg.base_seed + static_cast<std::uint64_t>(i);
            const std::filesystem::path trace_path =
                out_dir / ("trace_seed" + std::to_string(seed) + ".csv");
            try {
                TraceWriter writer(trace_path, ex.p);
                ReplicationResult rep = run_replication(
                    ex, seed, [&writer](const StepRecord& rec) { writer.write(rec); });
                writer.close();
                results[static_cast<std::size_t>(i)] = std::move(rep);
                traces[static_cast<std::size_t>(i)] = trace_path;
            } catch (const std::exception& err) {
                failures[static_cast<std::size_t>(i)] = err.what();
            }
        }
    };

    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nworkers; ++w)
        pool.emplace_back(worker);
    for (std::thread& t : pool)
        t.join();

    for (const std::string& f : failures)
        if (!f.empty())
            throw Error("replication failed: " + f);

    detail::write_summary_csv(out_dir / "summary.csv", results);
    detail::write_summary_stats_csv(out_dir / "summary_stats.csv", summarize(results));

    ExperimentResult out;
    out.out_dir = out_dir;
    out.replications = std::move(results);
    out.trace_files = std::move(traces);
    return out;
}

} // namespace binid

#endif // BINID_SIM_HPP
