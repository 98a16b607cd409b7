#pragma once

#include <initializer_list>
#include <vector>

#include "mvcca/kernels.hpp"

namespace mvcca {

// Dense row-major matrix of doubles. Data matrices follow the features x
// samples convention (columns are samples).
class Matrix {
  public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(int i) { return data_.data() + static_cast<size_t>(i) * cols_; }
    const double* row(int i) const { return data_.data() + static_cast<size_t>(i) * cols_; }

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

    Matrix transposed() const;
    std::vector<double> col(int j) const;
    Matrix cols_subset(const std::vector<int>& idx) const;

    double frob_norm() const;
    double max_abs() const;
    bool all_finite() const;

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);

// Products through the kernels layer.
Matrix matmul(const Matrix& a, const Matrix& b);     // A * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // A^T * B
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // A * B^T

double trace(const Matrix& a);
double dot(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace mvcca
