#pragma once

#include <span>
#include <vector>

#include "tsdlab/errors.hpp"
#include "tsdlab/rng.hpp"

namespace tsdlab {

// Dense real matrix, row-major. The universal weight/activation carrier.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols);  // zero-filled
    Matrix(int rows, int cols, std::vector<double> data);

    static Matrix identity(int n);
    static Matrix gaussian(int rows, int cols, Rng& rng);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    long long size() const { return static_cast<long long>(rows_) * cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    std::vector<double> row(int i) const;
    std::vector<double> col(int j) const;

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

bool all_finite(const Matrix& a);
void require_finite(const Matrix& a, const char* what);
void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);

// a += c * b
void axpy(Matrix& a, double c, const Matrix& b);
// a += c * u v^T
void add_outer(Matrix& a, double c, std::span<const double> u, std::span<const double> v);
Matrix outer(std::span<const double> u, std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);

// Square root of the sum of squared entries.
double frob_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace tsdlab
