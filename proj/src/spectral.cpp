#include "tsdlab/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace tsdlab {

namespace {

using EigenRowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Flip column j of m in place.
void negate_col(Matrix& m, int j) {
    for (int i = 0; i < m.rows(); ++i) m(i, j) = -m(i, j);
}

// Index of the largest-magnitude entry in column j (first on ties).
int argmax_abs_col(const Matrix& m, int j) {
    int arg = 0;
    double best = std::abs(m(0, j));
    for (int i = 1; i < m.rows(); ++i) {
        double v = std::abs(m(i, j));
        if (v > best) {
            best = v;
            arg = i;
        }
    }
    return arg;
}

}  // namespace

SvdFactors svd(const Matrix& w) {
    require_finite(w, "svd input");
    const int n = w.rows(), m = w.cols();
    const int k = std::min(n, m);

    Eigen::Map<const EigenRowMajor> wm(w.data().data(), n, m);
    Eigen::JacobiSVD<Eigen::MatrixXd> dec(wm, Eigen::ComputeThinU | Eigen::ComputeFullV);

    SvdFactors f;
    f.sigma.assign(dec.singularValues().data(), dec.singularValues().data() + k);
    f.u = Matrix(n, k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) f.u(i, j) = dec.matrixU()(i, j);
    f.v_full = Matrix(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) f.v_full(i, j) = dec.matrixV()(i, j);

    // Paired sign canonicalization; unpaired null-space columns of V get the
    // same rule on their own entries.
    for (int j = 0; j < k; ++j) {
        if (f.u(argmax_abs_col(f.u, j), j) < 0.0) {
            negate_col(f.u, j);
            negate_col(f.v_full, j);
        }
    }
    for (int j = k; j < m; ++j) {
        if (f.v_full(argmax_abs_col(f.v_full, j), j) < 0.0) negate_col(f.v_full, j);
    }

    f.vt = Matrix(k, m);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < m; ++j) f.vt(i, j) = f.v_full(j, i);
    return f;
}

ProjectionCoeffs project_global(const SvdFactors& f, const Matrix& a) {
    if (a.rows() != f.source_rows() || a.cols() != f.source_cols())
        throw ShapeMismatch("project_global: matrix is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                            ", factors are for " + std::to_string(f.source_rows()) + "x" +
                            std::to_string(f.source_cols()));
    return ProjectionCoeffs{matmul(matmul(transpose(f.u), a), f.v_full)};
}

ChangeRates change_rates(const SvdFactors& f, const Matrix& delta_w, double epsilon) {
    if (delta_w.rows() != f.source_rows() || delta_w.cols() != f.source_cols())
        throw ShapeMismatch("change_rates: delta is " + std::to_string(delta_w.rows()) + "x" +
                            std::to_string(delta_w.cols()) + ", factors are for " +
                            std::to_string(f.source_rows()) + "x" + std::to_string(f.source_cols()));
    if (!(epsilon > 0.0)) throw InvalidArgument("change_rates: epsilon must be positive");

    const int k = f.k();
    Matrix p = matmul(matmul(transpose(f.u), delta_w), transpose(f.vt));  // k x k

    ChangeRates cr;
    cr.epsilon = epsilon;
    cr.signed_.resize(k);
    cr.delta.resize(k);
    for (int i = 0; i < k; ++i) {
        cr.signed_[i] = p(i, i) / (f.sigma[i] + epsilon);
        cr.delta[i] = std::abs(cr.signed_[i]);
    }
    cr.ranking.resize(k);
    std::iota(cr.ranking.begin(), cr.ranking.end(), 0);
    std::stable_sort(cr.ranking.begin(), cr.ranking.end(),
                     [&](int a, int b) { return cr.delta[a] > cr.delta[b]; });
    return cr;
}

std::vector<int> top_k(const ChangeRates& cr, int k) {
    if (k < 1 || k > cr.k())
        throw InvalidArgument("top_k: k = " + std::to_string(k) + " out of range [1, " + std::to_string(cr.k()) + "]");
    return {cr.ranking.begin(), cr.ranking.begin() + k};
}

double scaled_rate(double delta) {
    if (delta < 0.0) throw InvalidArgument("scaled_rate: delta must be non-negative");
    return std::log1p(delta) / 3.0;
}

}  // namespace tsdlab
