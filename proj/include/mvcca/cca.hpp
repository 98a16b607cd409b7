#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mvcca/linalg.hpp"
#include "mvcca/matrix.hpp"
#include "mvcca/tensor.hpp"

namespace mvcca {

// Fitted linear model: per-view training means and projection matrices.
// TCCA fits additionally keep the CP factors and the per-view whiteners.
struct ProjectionModel {
    std::string method;
    double eps = 0.0;
    std::vector<std::vector<double>> means;  // per-view feature means
    std::vector<Matrix> projections;         // P_r, d_r x m
    double objective = 0.0;

    // TCCA extras
    CpFactors factors;
    std::vector<Matrix> whiteners;

    // MCCA diagnostics: top generalized eigenvalues
    std::vector<double> gen_eigenvalues;
};

struct GccaModel {
    double eps = 0.0;
    Matrix g;  // m x n common representation (training), rows orthonormal
    std::vector<std::vector<double>> means;
    std::vector<Matrix> projections;
    double objective = 0.0;
};

struct TccaOptions {
    CpOptions als;
    // Dense path materializes the whitened covariance tensor (the element cap
    // applies); the implicit path runs ALS on its rank-n Kruskal form. Auto
    // picks dense only for small tensors.
    enum class Path { Auto, Dense, Implicit } path = Path::Auto;
    size_t dense_threshold = 200000;
    size_t cap = DenseTensor::kDefaultCap;
};

ProjectionModel fit_cca2(const Matrix& x1, const Matrix& x2, int m, double eps);

ProjectionModel fit_mcca_sumcor(const std::vector<Matrix>& views, int m, double eps);

GccaModel fit_gcca(const std::vector<Matrix>& views, int m, double eps);

ProjectionModel fit_tcca(const std::vector<Matrix>& views, int m, double eps,
                         const TccaOptions& opts = {});

// Z_r = P_r^T (X_r - mean_r 1^T) for every view.
std::vector<Matrix> transform(const ProjectionModel& model,
                              const std::vector<Matrix>& views);
std::vector<Matrix> transform(const GccaModel& model,
                              const std::vector<Matrix>& views);
Matrix transform_view(const ProjectionModel& model, int r, const Matrix& x);

// High-order canonical correlation: rho_l = sum_i prod_r z_r^l(i).
std::pair<double, std::vector<double>> tcc_objective(const std::vector<Matrix>& z);

// sum_{r,s} tr(Z_r Z_s^T), including r == s.
double sumcor_objective(const std::vector<Matrix>& z);

}  // namespace mvcca
