#pragma once

// Independent oracles for the test suites. Everything here recomputes the
// quantity under test by a different route than the library (explicit loops,
// normal equations, finite differences) so the checks cannot share a bug
// with the production path.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

#include "tsdlab/matrix.hpp"
#include "tsdlab/spectral.hpp"

namespace oracles {

using tsdlab::Matrix;

// Triple-loop multiply, no BLAS/Eigen involvement.
inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int l = 0; l < a.cols(); ++l) {
            const double ail = a(i, l);
            for (int j = 0; j < b.cols(); ++j) out(i, j) += ail * b(l, j);
        }
    return out;
}

// Per-index change rates, scalar form: (u_i . dW v_i) / (sigma_i + eps).
inline std::vector<double> loop_change_rates(const tsdlab::SvdFactors& f, const Matrix& delta_w, double epsilon) {
    std::vector<double> out(f.k());
    for (int i = 0; i < f.k(); ++i) {
        double acc = 0.0;
        for (int r = 0; r < delta_w.rows(); ++r) {
            double row_dot = 0.0;
            for (int c = 0; c < delta_w.cols(); ++c) row_dot += delta_w(r, c) * f.vt(i, c);
            acc += f.u(r, i) * row_dot;
        }
        out[i] = acc / (f.sigma[i] + epsilon);
    }
    return out;
}

// Least squares via the normal equations: rows of x map to rows of y through
// w^T, so w = (solve(x^T x, x^T y))^T.
inline Matrix ols_weight(const Matrix& x, const Matrix& y) {
    Eigen::MatrixXd xe(x.rows(), x.cols()), ye(y.rows(), y.cols());
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) xe(i, j) = x(i, j);
    for (int i = 0; i < y.rows(); ++i)
        for (int j = 0; j < y.cols(); ++j) ye(i, j) = y(i, j);
    Eigen::MatrixXd wt = (xe.transpose() * xe).ldlt().solve(xe.transpose() * ye);
    Matrix w(static_cast<int>(wt.cols()), static_cast<int>(wt.rows()));
    for (int i = 0; i < w.rows(); ++i)
        for (int j = 0; j < w.cols(); ++j) w(i, j) = wt(j, i);
    return w;
}

// Central finite difference d loss / d p at the current value of *p.
inline double central_diff(double* p, const std::function<double()>& loss, double h = 1e-5) {
    const double saved = *p;
    *p = saved + h;
    const double up = loss();
    *p = saved - h;
    const double down = loss();
    *p = saved;
    return (up - down) / (2.0 * h);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

// |A intersect B| by exhaustive comparison.
inline int brute_intersection(const std::vector<int>& a, const std::vector<int>& b) {
    int count = 0;
    for (int x : a)
        for (int y : b)
            if (x == y) {
                ++count;
                break;
            }
    return count;
}

}  // namespace oracles
