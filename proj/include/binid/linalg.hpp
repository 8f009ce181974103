#ifndef BINID_LINALG_HPP
#define BINID_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "binid/errors.hpp"

namespace binid {

using Vec = std::vector<double>;

inline bool all_finite(const Vec& v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline double dot(const Vec& a, const Vec& b)
{
    if (a.size() != b.size())
        throw DimensionMismatch("dot: vector sizes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a)
{
    return std::sqrt(dot(a, a));
}

inline Vec sub(const Vec& a, const Vec& b)
{
    if (a.size() != b.size())
        throw DimensionMismatch("sub: vector sizes differ");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        r[i] = a[i] - b[i];
    return r;
}

inline Vec add_scaled(const Vec& a, double c, const Vec& b)
{
    if (a.size() != b.size())
        throw DimensionMismatch("add_scaled: vector sizes differ");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        r[i] = a[i] + c * b[i];
    return r;
}

/// Small dense row-major matrix. Sized for estimator covariances (p <= 50),
/// not general linear algebra.
class Mat {
public:
    Mat() = default;

    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill)
    {
    }

    Mat(std::size_t rows, std::size_t cols, std::initializer_list<double> vals)
        : rows_(rows), cols_(cols), a_(vals)
    {
        if (a_.size() != rows * cols)
            throw DimensionMismatch("Mat: initializer size mismatch");
    }

    static Mat identity(std::size_t n)
    {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = 1.0;
        return m;
    }

    static Mat diagonal(const Vec& d)
    {
        Mat m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i)
            m(i, i) = d[i];
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    Vec mul(const Vec& x) const
    {
        if (x.size() != cols_)
            throw DimensionMismatch("Mat::mul: size mismatch");
        Vec y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols_; ++j)
                s += a_[i * cols_ + j] * x[j];
            y[i] = s;
        }
        return y;
    }

    Mat mul(const Mat& b) const
    {
        if (cols_ != b.rows_)
            throw DimensionMismatch("Mat::mul: shape mismatch");
        Mat c(rows_, b.cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = 0; k < cols_; ++k) {
                const double aik = a_[i * cols_ + k];
                if (aik == 0.0)
                    continue;
                for (std::size_t j = 0; j < b.cols_; ++j)
                    c(i, j) += aik * b(k, j);
            }
        return c;
    }

    /// x^T A x for square A.
    double quad(const Vec& x) const
    {
        if (rows_ != cols_ || x.size() != cols_)
            throw DimensionMismatch("Mat::quad: size mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) {
            double r = 0.0;
            for (std::size_t j = 0; j < cols_; ++j)
                r += a_[i * cols_ + j] * x[j];
            s += x[i] * r;
        }
        return s;
    }

    /// A += c * v v^T, keeping exact symmetry of the stored entries.
    void add_outer(double c, const Vec& v)
    {
        if (rows_ != cols_ || v.size() != rows_)
            throw DimensionMismatch("Mat::add_outer: size mismatch");
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i; j < cols_; ++j) {
                const double t = c * v[i] * v[j];
                a_[i * cols_ + j] += t;
                if (j != i)
                    a_[j * cols_ + i] = a_[i * cols_ + j];
            }
    }

    void symmetrize()
    {
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j) {
                const double m = 0.5 * (a_[i * cols_ + j] + a_[j * cols_ + i]);
                a_[i * cols_ + j] = m;
                a_[j * cols_ + i] = m;
            }
    }

    double max_abs() const
    {
        double m = 0.0;
        for (double x : a_)
            m = std::max(m, std::abs(x));
        return m;
    }

    double asymmetry() const
    {
        double m = 0.0;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j)
                m = std::max(m, std::abs(a_[i * cols_ + j] - a_[j * cols_ + i]));
        return m;
    }

    double frobenius() const
    {
        double s = 0.0;
        for (double x : a_)
            s += x * x;
        return std::sqrt(s);
    }

    bool finite() const
    {
        return std::all_of(a_.begin(), a_.end(), [](double x) { return std::isfinite(x); });
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> a_;
};

inline double max_abs_diff(const Mat& a, const Mat& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionMismatch("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

/// Solve A x = b by Gaussian elimination with partial pivoting (tiny systems).
inline Vec solve_dense(Mat a, Vec b)
{
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n)
        throw DimensionMismatch("solve_dense: shape mismatch");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col)))
                piv = r;
        if (a(piv, col) == 0.0)
            throw SingularMetric("solve_dense: singular system");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j)
                std::swap(a(col, j), a(piv, j));
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0)
                continue;
            for (std::size_t j = col; j < n; ++j)
                a(r, j) -= f * a(col, j);
            b[r] -= f * b[col];
        }
    }
    Vec x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j)
            s -= a(ii, j) * x[j];
        x[ii] = s / a(ii, ii);
    }
    return x;
}

/// Dense inverse via column-wise solves. Test/diagnostic use only.
inline Mat invert_dense(const Mat& a)
{
    const std::size_t n = a.rows();
    Mat inv(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        Vec e(n, 0.0);
        e[j] = 1.0;
        Vec col = solve_dense(a, e);
        for (std::size_t i = 0; i < n; ++i)
            inv(i, j) = col[i];
    }
    return inv;
}

} // namespace binid

#endif // BINID_LINALG_HPP
