#ifndef BINID_GEOMETRY_HPP
#define BINID_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "binid/errors.hpp"
#include "binid/linalg.hpp"

namespace binid {

/// Axis-aligned box {lo <= x <= hi}, the parameter set the estimates are
/// projected into. General convex sets are a non-goal.
class ConvexBox {
public:
    ConvexBox(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi))
    {
        if (lo_.size() != hi_.size() || lo_.empty())
            throw DimensionMismatch("ConvexBox: lo/hi size mismatch");
        for (std::size_t i = 0; i < lo_.size(); ++i) {
            if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i]))
                throw NonFiniteInput("ConvexBox: bounds must be finite");
            if (!(lo_[i] < hi_[i]))
                throw InvalidConfig("ConvexBox: lo must be strictly below hi in every coordinate");
        }
    }

    std::size_t dim() const { return lo_.size(); }
    const Vec& lo() const { return lo_; }
    const Vec& hi() const { return hi_; }

    bool contains(const Vec& x, double tol = 0.0) const
    {
        if (x.size() != dim())
            throw DimensionMismatch("ConvexBox::contains: size mismatch");
        for (std::size_t i = 0; i < dim(); ++i)
            if (x[i] < lo_[i] - tol || x[i] > hi_[i] + tol)
                return false;
        return true;
    }

    Vec clamp(Vec x) const
    {
        if (x.size() != dim())
            throw DimensionMismatch("ConvexBox::clamp: size mismatch");
        for (std::size_t i = 0; i < dim(); ++i)
            x[i] = std::min(std::max(x[i], lo_[i]), hi_[i]);
        return x;
    }

    /// sup over the box of the Euclidean norm; attained at a corner, so it is
    /// sqrt(sum_i max(lo_i^2, hi_i^2)).
    double norm_bound() const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < dim(); ++i)
            s += std::max(lo_[i] * lo_[i], hi_[i] * hi_[i]);
        return std::sqrt(s);
    }

private:
    Vec lo_;
    Vec hi_;
};

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, iterated to
/// off-diagonal Frobenius norm <= 1e-12 * ||A||_F. Ascending order.
inline Vec sym_eigenvalues(const Mat& a)
{
    const std::size_t n = a.rows();
    if (a.cols() != n || n == 0)
        throw DimensionMismatch("sym_eigenvalues: matrix must be square");
    if (!a.finite())
        throw NonFiniteInput("sym_eigenvalues: non-finite entries");
    if (a.asymmetry() > 1e-9 * std::max(1.0, a.max_abs()))
        throw NotSymmetric("sym_eigenvalues: matrix is not symmetric");

    Mat w = a;
    w.symmetrize();
    if (n == 1)
        return {w(0, 0)};

    const double tol = 1e-12 * std::max(w.frobenius(), 1e-300);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                off += 2.0 * w(p, q) * w(p, q);
        if (std::sqrt(off) <= tol)
            break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = w(p, q);
                if (apq == 0.0)
                    continue;
                const double theta = (w(q, q) - w(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                const double app = w(p, p);
                const double aqq = w(q, q);
                w(p, p) = app - t * apq;
                w(q, q) = aqq + t * apq;
                w(p, q) = 0.0;
                w(q, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == p || r == q)
                        continue;
                    const double arp = w(r, p);
                    const double arq = w(r, q);
                    w(r, p) = arp - s * (arq + tau * arp);
                    w(p, r) = w(r, p);
                    w(r, q) = arq + s * (arp - tau * arq);
                    w(q, r) = w(r, q);
                }
            }
        }
    }

    Vec ev(n);
    for (std::size_t i = 0; i < n; ++i)
        ev[i] = w(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

inline std::pair<double, double> sym_eig_extremes(const Mat& a)
{
    const Vec ev = sym_eigenvalues(a);
    return {ev.front(), ev.back()};
}

/// log det of a symmetric positive-definite matrix as the sum of log
/// eigenvalues.
inline double sym_logdet(const Mat& a)
{
    double s = 0.0;
    for (double ev : sym_eigenvalues(a)) {
        if (!(ev > 0.0))
            throw SingularMetric("sym_logdet: nonpositive eigenvalue");
        s += std::log(ev);
    }
    return s;
}

/// Symmetric positive-definite weight matrix for the quadratic form
/// ||x||_Q = x^T Q x. Construction validates symmetry (<= 1e-12) and
/// positive-definiteness via the Jacobi eigensolver.
class WeightedMetric {
public:
    explicit WeightedMetric(Mat q) : q_(std::move(q))
    {
        if (q_.rows() != q_.cols() || q_.rows() == 0)
            throw DimensionMismatch("WeightedMetric: matrix must be square");
        if (!q_.finite())
            throw NonFiniteInput("WeightedMetric: non-finite entries");
        if (q_.asymmetry() > 1e-12 * std::max(1.0, q_.max_abs()))
            throw NotSymmetric("WeightedMetric: matrix is not symmetric");
        if (sym_eigenvalues(q_).front() <= 0.0)
            throw SingularMetric("WeightedMetric: matrix is not positive definite");
    }

    const Mat& matrix() const { return q_; }
    std::size_t dim() const { return q_.rows(); }

private:
    Mat q_;
};

/// The quadratic form x^T Q x (no square root is taken; this is the literal
/// weighted "norm" the projection minimizes).
inline double weighted_norm(const WeightedMetric& q, const Vec& x)
{
    if (x.size() != q.dim())
        throw DimensionMismatch("weighted_norm: size mismatch");
    return q.matrix().quad(x);
}

namespace detail {

inline double projection_objective(const Mat& q, const Vec& x, const Vec& w)
{
    Vec d = sub(w, x);
    return q.quad(d);
}

/// Gradient of (w - x)^T Q (w - x) with respect to w.
inline Vec projection_gradient(const Mat& q, const Vec& x, const Vec& w)
{
    Vec g = q.mul(sub(w, x));
    for (double& gi : g)
        gi *= 2.0;
    return g;
}

/// Max-norm KKT residual of the box-constrained projection at w.
inline double kkt_residual(const Mat& q, const ConvexBox& box, const Vec& x, const Vec& w)
{
    const Vec g = projection_gradient(q, x, w);
    double res = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        double r;
        if (w[i] <= box.lo()[i])
            r = std::max(0.0, -g[i]);
        else if (w[i] >= box.hi()[i])
            r = std::max(0.0, g[i]);
        else
            r = std::abs(g[i]);
        res = std::max(res, r);
    }
    return res;
}

inline bool lex_less(const Vec& a, const Vec& b)
{
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

} // namespace detail

/// Exact projection for p <= 3: enumerate the 3^p face assignments
/// (free / at-lo / at-hi per coordinate), solve each equality-constrained
/// subproblem, screen by feasibility and KKT sign conditions, and return the
/// smallest-objective survivor (lexicographic tie-break).
inline Vec project_active_set(const WeightedMetric& metric, const ConvexBox& box, const Vec& x)
{
    const Mat& q = metric.matrix();
    const std::size_t p = box.dim();
    const double gscale = std::max(1.0, q.max_abs() * (1.0 + norm2(x)));

    Vec best;
    double best_obj = 0.0;
    bool best_kkt = false;
    bool have_best = false;

    std::vector<int> state(p, 0); // 0 free, 1 at lo, 2 at hi
    const std::size_t total = [&] {
        std::size_t t = 1;
        for (std::size_t i = 0; i < p; ++i)
            t *= 3;
        return t;
    }();

    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        std::vector<std::size_t> free_idx;
        Vec w(p, 0.0);
        for (std::size_t i = 0; i < p; ++i) {
            state[i] = static_cast<int>(c % 3);
            c /= 3;
            if (state[i] == 1)
                w[i] = box.lo()[i];
            else if (state[i] == 2)
                w[i] = box.hi()[i];
            else
                free_idx.push_back(i);
        }

        if (!free_idx.empty()) {
            // stationarity of the free block, [Q (x - w)]_F = 0:
            //   Q_FF w_F = Q x|_F - Q_FB w_B
            const std::size_t f = free_idx.size();
            Mat qff(f, f);
            Vec rhs(f, 0.0);
            for (std::size_t a = 0; a < f; ++a) {
                const std::size_t i = free_idx[a];
                for (std::size_t b = 0; b < f; ++b)
                    qff(a, b) = q(i, free_idx[b]);
                double s = 0.0;
                for (std::size_t j = 0; j < p; ++j) {
                    s += q(i, j) * x[j];
                    if (state[j] != 0)
                        s -= q(i, j) * w[j];
                }
                rhs[a] = s;
            }
            Vec wf;
            try {
                wf = solve_dense(qff, rhs);
            } catch (const SingularMetric&) {
                continue; // degenerate free block; another assignment covers it
            }
            bool feasible = true;
            for (std::size_t a = 0; a < f; ++a) {
                const std::size_t i = free_idx[a];
                if (wf[a] < box.lo()[i] - 1e-9 || wf[a] > box.hi()[i] + 1e-9) {
                    feasible = false;
                    break;
                }
                w[i] = std::min(std::max(wf[a], box.lo()[i]), box.hi()[i]);
            }
            if (!feasible)
                continue;
        }

        // KKT screen: interior gradient ~ 0, bound gradients correctly signed
        const Vec g = detail::projection_gradient(q, x, w);
        bool kkt = true;
        for (std::size_t i = 0; i < p; ++i) {
            if (state[i] == 0 && std::abs(g[i]) > 1e-8 * gscale)
                kkt = false;
            else if (state[i] == 1 && g[i] < -1e-8 * gscale)
                kkt = false;
            else if (state[i] == 2 && g[i] > 1e-8 * gscale)
                kkt = false;
        }

        const double obj = detail::projection_objective(q, x, w);
        const bool better = !have_best || (kkt && !best_kkt) ||
                            (kkt == best_kkt &&
                             (obj < best_obj || (obj == best_obj && detail::lex_less(w, best))));
        if (better) {
            best = w;
            best_obj = obj;
            best_kkt = kkt;
            have_best = true;
        }
    }

    return best;
}

/// Projected-gradient fallback for p > 3: Armijo backtracking on the clamped
/// gradient step, run to KKT residual <= 1e-10 (relative to gradient scale)
/// or 1e5 iterations. The Armijo test uses the exact quadratic identity
/// f(w+d) - f(w) = g'd + d'Qd, which stays accurate when the decrease is far
/// below the rounding granularity of f itself.
inline Vec project_gradient(const WeightedMetric& metric, const ConvexBox& box, const Vec& x)
{
    const Mat& q = metric.matrix();
    const double gscale = std::max(1.0, q.max_abs() * (1.0 + norm2(x)));
    Vec w = box.clamp(x);
    double t = 1.0 / std::max(2.0 * q.frobenius(), 1e-300);

    for (int iter = 0; iter < 100000; ++iter) {
        if (detail::kkt_residual(q, box, x, w) <= 1e-10 * gscale)
            break;
        const Vec g = detail::projection_gradient(q, x, w);
        t *= 2.0;
        bool moved = false;
        for (int bt = 0; bt < 120; ++bt) {
            const Vec cand = box.clamp(add_scaled(w, -t, g));
            Vec d = sub(cand, w);
            const double step_sq = dot(d, d);
            if (step_sq == 0.0)
                break; // cannot move at any smaller t either: KKT point
            const double decrease = dot(g, d) + q.quad(d);
            if (decrease <= -1e-4 * step_sq / t) {
                w = cand;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved)
            break;
    }
    return w;
}

/// Projection of x onto the box in the metric Q: argmin over the box of
/// (x - w)^T Q (x - w). Interior points are fixed points; otherwise the exact
/// active-set enumeration handles p <= 3 and projected gradient the rest.
inline Vec project(const WeightedMetric& metric, const ConvexBox& box, const Vec& x)
{
    if (x.size() != box.dim() || metric.dim() != box.dim())
        throw DimensionMismatch("project: dimension mismatch");
    if (!all_finite(x))
        throw NonFiniteInput("project: point has non-finite entries");
    if (box.contains(x))
        return x;
    if (box.dim() <= 3)
        return project_active_set(metric, box, x);
    return project_gradient(metric, box, x);
}

} // namespace binid

#endif // BINID_GEOMETRY_HPP
