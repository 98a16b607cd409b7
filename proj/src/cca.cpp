#include "mvcca/cca.hpp"

#include <lapacke.h>

#include <cmath>
#include <sstream>

#include "mvcca/errors.hpp"

namespace mvcca {

namespace {

// X = K^{-1} B with K symmetric positive definite.
Matrix spd_solve(const Matrix& k, const Matrix& b) {
    Matrix kw = k;
    Matrix x = b;
    const int info = LAPACKE_dposv(LAPACK_ROW_MAJOR, 'U', k.rows(), x.cols(),
                                   kw.data(), k.rows(), x.data(), x.cols());
    if (info != 0) throw NumericError("spd_solve: matrix not positive definite");
    return x;
}

Matrix take_cols(const Matrix& a, int m) {
    Matrix out(a.rows(), m);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < m; ++j) out(i, j) = a(i, j);
    return out;
}

void check_same_n(const std::vector<Matrix>& views, const char* who) {
    if (views.size() < 2) {
        std::ostringstream msg;
        msg << who << ": need at least 2 views";
        throw std::invalid_argument(msg.str());
    }
    for (const auto& v : views)
        if (v.cols() != views[0].cols()) {
            std::ostringstream msg;
            msg << who << ": views disagree on sample count";
            throw std::invalid_argument(msg.str());
        }
}

}  // namespace

ProjectionModel fit_cca2(const Matrix& x1, const Matrix& x2, int m, double eps) {
    if (x1.cols() != x2.cols())
        throw std::invalid_argument("fit_cca2: views disagree on sample count");
    if (m < 1 || m > std::min(x1.rows(), x2.rows()))
        throw std::invalid_argument("fit_cca2: m must be in [1, min(d1, d2)]");
    auto [c1, mean1] = center_columns(x1);
    auto [c2, mean2] = center_columns(x2);
    const Matrix w1 = inv_sqrt_sym(matmul_nt(c1, c1), eps);
    const Matrix w2 = inv_sqrt_sym(matmul_nt(c2, c2), eps);
    const Matrix t = matmul(w1, matmul(matmul_nt(c1, c2), w2));
    const Svd s = svd(t);
    ProjectionModel model;
    model.method = "cca2";
    model.eps = eps;
    model.means = {std::move(mean1), std::move(mean2)};
    model.projections = {matmul(w1, take_cols(s.u, m)), matmul(w2, take_cols(s.v, m))};
    for (int l = 0; l < m; ++l) model.objective += s.singular_values[l];
    return model;
}

ProjectionModel fit_mcca_sumcor(const std::vector<Matrix>& views, int m, double eps) {
    check_same_n(views, "fit_mcca_sumcor");
    const int k = static_cast<int>(views.size());
    std::vector<Matrix> centered(k), whiteners(k);
    std::vector<std::vector<double>> means(k);
    std::vector<int> offset(k + 1, 0);
    for (int r = 0; r < k; ++r) {
        auto [c, mu] = center_columns(views[r]);
        centered[r] = std::move(c);
        means[r] = std::move(mu);
        whiteners[r] = inv_sqrt_sym(matmul_nt(centered[r], centered[r]), eps);
        offset[r + 1] = offset[r] + views[r].rows();
    }
    const int d = offset[k];
    if (m < 1 || m > d)
        throw std::invalid_argument("fit_mcca_sumcor: m exceeds total dimension");

    // Block-whitened covariance matrix; Eq-(4)-style generalized eigenproblem
    // reduced to a standard symmetric one.
    Matrix a(d, d);
    for (int r = 0; r < k; ++r)
        for (int s = 0; s < k; ++s) {
            const Matrix block =
                matmul(whiteners[r], matmul(matmul_nt(centered[r], centered[s]), whiteners[s]));
            for (int i = 0; i < block.rows(); ++i)
                for (int j = 0; j < block.cols(); ++j)
                    a(offset[r] + i, offset[s] + j) = block(i, j);
        }
    const SymEig e = sym_eig(a);

    ProjectionModel model;
    model.method = "mcca";
    model.eps = eps;
    model.means = std::move(means);
    model.gen_eigenvalues.assign(e.eigenvalues.begin(), e.eigenvalues.begin() + m);
    model.projections.resize(k);
    for (int r = 0; r < k; ++r) {
        Matrix y(views[r].rows(), m);
        for (int i = 0; i < y.rows(); ++i)
            for (int l = 0; l < m; ++l) y(i, l) = e.eigenvectors(offset[r] + i, l);
        model.projections[r] = matmul(whiteners[r], y);
    }
    // Rescale so sum_r P_r^T C_rr P_r = I_m exactly (the eps ridge perturbs
    // the whitened coordinates slightly).
    Matrix constraint(m, m);
    for (int r = 0; r < k; ++r) {
        const Matrix zp = matmul_tn(model.projections[r],
                                    matmul(matmul_nt(centered[r], centered[r]),
                                           model.projections[r]));
        constraint += zp;
    }
    const Matrix fix = inv_sqrt_sym(constraint, 0.0);
    for (int r = 0; r < k; ++r)
        model.projections[r] = matmul(model.projections[r], fix);
    for (int l = 0; l < m; ++l) model.objective += e.eigenvalues[l];
    return model;
}

GccaModel fit_gcca(const std::vector<Matrix>& views, int m, double eps) {
    check_same_n(views, "fit_gcca");
    const int k = static_cast<int>(views.size());
    const int n = views[0].cols();
    if (n < m) throw std::invalid_argument("fit_gcca: need n >= m");

    std::vector<Matrix> centered(k), solved(k);
    GccaModel model;
    model.eps = eps;
    model.means.resize(k);
    Matrix q(n, n);
    for (int r = 0; r < k; ++r) {
        auto [c, mu] = center_columns(views[r]);
        centered[r] = std::move(c);
        model.means[r] = std::move(mu);
        Matrix key = matmul_nt(centered[r], centered[r]);
        for (int i = 0; i < key.rows(); ++i) key(i, i) += eps;
        solved[r] = spd_solve(key, centered[r]);  // (C_rr + eps I)^{-1} X_r
        q += matmul_tn(centered[r], solved[r]);
    }
    const SymEig e = sym_eig(q);
    model.g = Matrix(m, n);
    for (int l = 0; l < m; ++l) {
        model.objective += e.eigenvalues[l];
        for (int j = 0; j < n; ++j) model.g(l, j) = e.eigenvectors(j, l);
    }
    model.projections.resize(k);
    for (int r = 0; r < k; ++r)
        model.projections[r] = matmul_nt(solved[r], model.g);
    return model;
}

ProjectionModel fit_tcca(const std::vector<Matrix>& views, int m, double eps,
                         const TccaOptions& opts) {
    check_same_n(views, "fit_tcca");
    if (m < 1) throw std::invalid_argument("fit_tcca: m must be >= 1");
    const int k = static_cast<int>(views.size());

    size_t elems = 1;
    bool overflow = false;
    for (const auto& v : views) {
        elems *= static_cast<size_t>(v.rows());
        if (elems > opts.cap) overflow = true;
    }
    if (overflow) {
        std::ostringstream msg;
        msg << "fit_tcca: covariance tensor would need " << elems
            << " elements (cap " << opts.cap
            << "); reduce per-view dimensions with PCA preprocessing";
        throw DataError(msg.str());
    }

    ProjectionModel model;
    model.method = "tcca";
    model.eps = eps;
    model.means.resize(k);
    model.whiteners.resize(k);
    std::vector<Matrix> whitened(k);
    for (int r = 0; r < k; ++r) {
        auto [c, mu] = center_columns(views[r]);
        model.means[r] = std::move(mu);
        model.whiteners[r] = inv_sqrt_sym(matmul_nt(c, c), eps);
        whitened[r] = matmul(model.whiteners[r], c);
    }

    const bool dense = opts.path == TccaOptions::Path::Dense ||
                       (opts.path == TccaOptions::Path::Auto &&
                        elems <= opts.dense_threshold);
    if (dense) {
        const DenseTensor whitened_cov = outer_accumulate(whitened, opts.cap);
        model.factors = cp_als(whitened_cov, m, opts.als);
    } else {
        model.factors = cp_als_kruskal(whitened, m, opts.als);
    }
    model.projections.resize(k);
    for (int r = 0; r < k; ++r)
        model.projections[r] = matmul(model.whiteners[r], model.factors.factors[r]);
    model.objective = model.factors.weight_sum();
    return model;
}

Matrix transform_view(const ProjectionModel& model, int r, const Matrix& x) {
    if (r < 0 || r >= static_cast<int>(model.projections.size()))
        throw std::invalid_argument("transform_view: view index out of range");
    if (x.rows() != static_cast<int>(model.means[r].size()))
        throw std::invalid_argument("transform_view: feature dimension mismatch");
    Matrix centered = x;
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) centered(i, j) -= model.means[r][i];
    return matmul_tn(model.projections[r], centered);
}

std::vector<Matrix> transform(const ProjectionModel& model,
                              const std::vector<Matrix>& views) {
    if (views.size() != model.projections.size())
        throw std::invalid_argument("transform: view count mismatch");
    std::vector<Matrix> z;
    for (size_t r = 0; r < views.size(); ++r)
        z.push_back(transform_view(model, static_cast<int>(r), views[r]));
    return z;
}

std::vector<Matrix> transform(const GccaModel& model,
                              const std::vector<Matrix>& views) {
    if (views.size() != model.projections.size())
        throw std::invalid_argument("transform: view count mismatch");
    std::vector<Matrix> z;
    for (size_t r = 0; r < views.size(); ++r) {
        const Matrix& x = views[r];
        if (x.rows() != static_cast<int>(model.means[r].size()))
            throw std::invalid_argument("transform: feature dimension mismatch");
        Matrix centered = x;
        for (int i = 0; i < x.rows(); ++i)
            for (int j = 0; j < x.cols(); ++j) centered(i, j) -= model.means[r][i];
        z.push_back(matmul_tn(model.projections[r], centered));
    }
    return z;
}

std::pair<double, std::vector<double>> tcc_objective(const std::vector<Matrix>& z) {
    if (z.empty()) throw std::invalid_argument("tcc_objective: empty input");
    const int m = z[0].rows(), n = z[0].cols();
    for (const auto& zr : z)
        if (zr.rows() != m || zr.cols() != n)
            throw std::invalid_argument("tcc_objective: shape mismatch");
    std::vector<double> per(m, 0.0);
    for (int l = 0; l < m; ++l)
        for (int i = 0; i < n; ++i) {
            double p = 1.0;
            for (const auto& zr : z) p *= zr(l, i);
            per[l] += p;
        }
    double total = 0.0;
    for (double v : per) total += v;
    return {total, per};
}

double sumcor_objective(const std::vector<Matrix>& z) {
    if (z.empty()) throw std::invalid_argument("sumcor_objective: empty input");
    Matrix s = z[0];
    for (size_t r = 1; r < z.size(); ++r) {
        if (z[r].rows() != s.rows() || z[r].cols() != s.cols())
            throw std::invalid_argument("sumcor_objective: shape mismatch");
        s += z[r];
    }
    // sum_{r,s} tr(Z_r Z_s^T) = ||sum_r Z_r||_F^2
    const double nrm = s.frob_norm();
    return nrm * nrm;
}

}  // namespace mvcca
