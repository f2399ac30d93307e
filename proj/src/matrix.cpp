#include "tsdlab/matrix.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

namespace tsdlab {

namespace {

using EigenRowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenRowMajor>;
using MutMap = Eigen::Map<EigenRowMajor>;

ConstMap as_eigen(const Matrix& a) { return ConstMap(a.data().data(), a.rows(), a.cols()); }
MutMap as_eigen(Matrix& a) { return MutMap(a.data().data(), a.rows(), a.cols()); }

}  // namespace

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) throw InvalidArgument("Matrix dimensions must be positive");
    data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Matrix::Matrix(int rows, int cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows < 1 || cols < 1) throw InvalidArgument("Matrix dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(rows) * cols)
        throw InvalidArgument("Matrix data length " + std::to_string(data_.size()) + " != rows*cols");
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::gaussian(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& x : m.data()) x = rng.normal();
    return m;
}

std::vector<double> Matrix::row(int i) const {
    return {data_.begin() + static_cast<std::ptrdiff_t>(i) * cols_,
            data_.begin() + static_cast<std::ptrdiff_t>(i + 1) * cols_};
}

std::vector<double> Matrix::col(int j) const {
    std::vector<double> out(static_cast<std::size_t>(rows_));
    for (int i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
}

bool all_finite(const Matrix& a) {
    for (double x : a.data())
        if (!std::isfinite(x)) return false;
    return true;
}

void require_finite(const Matrix& a, const char* what) {
    if (!all_finite(a)) throw InvalidMatrix(std::string(what) + ": non-finite entries");
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeMismatch(std::string(what) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                            " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeMismatch("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " * " +
                            std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    Matrix out(a.rows(), b.cols());
    as_eigen(out).noalias() = as_eigen(a) * as_eigen(b);
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    axpy(out, 1.0, b);
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix out = a;
    axpy(out, -1.0, b);
    return out;
}

Matrix scale(const Matrix& a, double c) {
    Matrix out = a;
    for (double& x : out.data()) x *= c;
    return out;
}

void axpy(Matrix& a, double c, const Matrix& b) {
    require_same_shape(a, b, "axpy");
    auto pa = a.data();
    auto pb = b.data();
    for (std::size_t i = 0; i < pa.size(); ++i) pa[i] += c * pb[i];
}

void add_outer(Matrix& a, double c, std::span<const double> u, std::span<const double> v) {
    if (u.size() != static_cast<std::size_t>(a.rows()) || v.size() != static_cast<std::size_t>(a.cols()))
        throw ShapeMismatch("add_outer: vector lengths do not match matrix shape");
    for (int i = 0; i < a.rows(); ++i) {
        double cu = c * u[i];
        for (int j = 0; j < a.cols(); ++j) a(i, j) += cu * v[j];
    }
}

Matrix outer(std::span<const double> u, std::span<const double> v) {
    Matrix out(static_cast<int>(u.size()), static_cast<int>(v.size()));
    add_outer(out, 1.0, u, v);
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double frob_norm(const Matrix& a) {
    double s = 0.0;
    for (double x : a.data()) s += x * x;
    return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    auto pa = a.data();
    auto pb = b.data();
    for (std::size_t i = 0; i < pa.size(); ++i) m = std::max(m, std::abs(pa[i] - pb[i]));
    return m;
}

}  // namespace tsdlab
