#pragma once

#include <cstdint>
#include <vector>

#include "mvcca/matrix.hpp"

namespace mvcca {

// Dense order-k tensor, row-major over dims (last index fastest).
class DenseTensor {
  public:
    // Construction fails when the element count exceeds `cap` (default 1e8).
    static constexpr size_t kDefaultCap = 100000000;

    DenseTensor() = default;
    explicit DenseTensor(std::vector<int> dims, size_t cap = kDefaultCap);

    const std::vector<int>& dims() const { return dims_; }
    int order() const { return static_cast<int>(dims_.size()); }
    size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    double at(const std::vector<int>& idx) const;
    double& at(const std::vector<int>& idx);

  private:
    std::vector<int> dims_;
    std::vector<double> data_;
};

// Rank-m CP model: weights (sorted descending, nonnegative after the final
// sign fix) plus k factor matrices with unit-norm columns.
struct CpFactors {
    int m = 0;
    std::vector<double> weights;
    std::vector<Matrix> factors;  // factor r is d_r x m

    double weight_sum() const;
};

struct CpOptions {
    int max_iter = 200;
    double tol = 1e-8;
    uint64_t seed = 0;
    bool hosvd_init = false;
};

struct CpDiagnostics {
    std::vector<double> fits;  // per-iteration fit 1 - ||T - M^||/||T||
    int iterations = 0;
    bool converged = false;
    bool ridge_applied = false;
    double final_residual = 0.0;  // ||T - M^||_F
};

// C = sum_i v_1^i o ... o v_k^i over the columns of the given view matrices
// (view r is d_r x n).
DenseTensor outer_accumulate(const std::vector<Matrix>& views,
                             size_t cap = DenseTensor::kDefaultCap);

// T x_r U with U of shape p x dims[r].
DenseTensor mode_product(const DenseTensor& t, const Matrix& u, int mode);

// Mode-r matricization, d_r x prod_{s != r} d_s. Column ordering keeps the
// remaining modes in increasing order with the last one fastest, matching
// khatri_rao below so that unfold(cp, r) = U_r diag(w) (KR of others)^T.
Matrix unfold(const DenseTensor& t, int mode);

// Inverse of unfold for the same mode.
DenseTensor refold(const Matrix& m, const std::vector<int>& dims, int mode);

// Columnwise Kronecker product with the first matrix slowest.
Matrix khatri_rao(const std::vector<Matrix>& mats);

CpFactors cp_als(const DenseTensor& t, int m, const CpOptions& opts = {},
                 CpDiagnostics* diag = nullptr);

// CP-ALS on an implicit Kruskal-form tensor sum_i w_1^i o ... o w_k^i given by
// the columns of `views` (view r is d_r x n), without materializing it.
CpFactors cp_als_kruskal(const std::vector<Matrix>& views, int m,
                         const CpOptions& opts = {},
                         CpDiagnostics* diag = nullptr);

DenseTensor cp_reconstruct(const CpFactors& f,
                           size_t cap = DenseTensor::kDefaultCap);

double frob_norm(const DenseTensor& t);

}  // namespace mvcca
