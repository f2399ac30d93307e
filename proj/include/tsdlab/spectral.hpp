#pragma once

#include <vector>

#include "tsdlab/matrix.hpp"

namespace tsdlab {

// Regularizer added to sigma in change-rate denominators.
inline constexpr double kDefaultEpsilon = 1e-6;

// Thin SVD of a weight matrix W = U diag(sigma) V^T with k = min(n, m).
// Core basis i is u_i v_i^T; global basis (i, j) is u_i v_j^T. `v_full`
// carries the complete orthonormal right basis (m x m) so projections onto
// all global bases are available; its first k columns pair with `u`.
struct SvdFactors {
    Matrix u;                   // n x k, columns are left singular vectors
    std::vector<double> sigma;  // k non-negative values, non-increasing
    Matrix vt;                  // k x m, rows are right singular vectors
    Matrix v_full;              // m x m

    int k() const { return static_cast<int>(sigma.size()); }
    int source_rows() const { return u.rows(); }
    int source_cols() const { return vt.cols(); }
};

// Coordinates of a matrix on the global bases of another matrix:
// coeffs(i, j) = u_i^T A v_j.
struct ProjectionCoeffs {
    Matrix coeffs;  // k x m
};

// Per-core-direction change rates delta_i = |u_i^T dW v_i| / (sigma_i + eps).
struct ChangeRates {
    std::vector<double> delta;   // |delta_i|
    std::vector<double> signed_; // delta_i before the absolute value
    double epsilon = kDefaultEpsilon;
    std::vector<int> ranking;    // permutation ordering delta non-increasing,
                                 // ties broken by lower index

    int k() const { return static_cast<int>(delta.size()); }
};

// Thin SVD with deterministic signs: the largest-magnitude entry of each u_i
// is made positive (ties: first such entry), flipping the paired v_i.
SvdFactors svd(const Matrix& w);

ProjectionCoeffs project_global(const SvdFactors& f, const Matrix& a);

// Production path is the matrix form (rectangle diagonal of U^T dW V scaled
// by 1/(sigma+eps)); the per-index loop form lives in the tests as an oracle.
ChangeRates change_rates(const SvdFactors& f, const Matrix& delta_w, double epsilon = kDefaultEpsilon);

// First k entries of the ranking, highest change rate first.
std::vector<int> top_k(const ChangeRates& cr, int k);

// ln(delta + 1) / 3, the plot-data scaling for change-rate spectra.
double scaled_rate(double delta);

}  // namespace tsdlab
