#include "mvcca/linalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mvcca/errors.hpp"

namespace mvcca {

namespace {

// Flip each column so its largest-magnitude entry is positive; ties break to
// the lowest row index. Returns the flip signs for callers that must keep a
// paired factor consistent.
std::vector<double> fix_column_signs(Matrix& v) {
    std::vector<double> signs(v.cols(), 1.0);
    for (int j = 0; j < v.cols(); ++j) {
        int arg = 0;
        double best = 0.0;
        for (int i = 0; i < v.rows(); ++i) {
            const double a = std::fabs(v(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (v(arg, j) < 0.0) {
            signs[j] = -1.0;
            for (int i = 0; i < v.rows(); ++i) v(i, j) = -v(i, j);
        }
    }
    return signs;
}

}  // namespace

std::pair<Matrix, std::vector<double>> center_columns(const Matrix& x) {
    if (x.empty()) throw std::invalid_argument("center_columns: empty matrix");
    const int d = x.rows(), n = x.cols();
    std::vector<double> mean(d, 0.0);
    Matrix out(d, n);
    for (int i = 0; i < d; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += x(i, j);
        mean[i] = s / n;
        for (int j = 0; j < n; ++j) out(i, j) = x(i, j) - mean[i];
    }
    return {std::move(out), std::move(mean)};
}

SymEig sym_eig(const Matrix& s) {
    if (s.rows() != s.cols()) throw std::invalid_argument("sym_eig: matrix not square");
    const int n = s.rows();
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = 0.5 * (s(i, j) + s(j, i));
    std::vector<double> w(n);
    const int info = LAPACKE_dsyevd(LAPACK_ROW_MAJOR, 'V', 'U', n, a.data(), n, w.data());
    if (info != 0) {
        std::ostringstream msg;
        msg << "sym_eig: dsyevd failed to converge (info=" << info
            << ", max off-diagonal=" << s.max_abs() << ")";
        throw NumericError(msg.str());
    }
    // LAPACK returns ascending eigenvalues with eigenvectors in columns.
    SymEig out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
        out.eigenvalues[j] = w[n - 1 - j];
        for (int i = 0; i < n; ++i) out.eigenvectors(i, j) = a(i, n - 1 - j);
    }
    fix_column_signs(out.eigenvectors);
    return out;
}

Svd svd(const Matrix& a) {
    const int p = a.rows(), q = a.cols();
    const int r = std::min(p, q);
    Matrix work = a;
    Svd out;
    out.u = Matrix(p, r);
    out.v = Matrix(q, r);
    out.singular_values.resize(r);
    Matrix vt(r, q);
    const int info = LAPACKE_dgesdd(LAPACK_ROW_MAJOR, 'S', p, q, work.data(), q,
                                    out.singular_values.data(), out.u.data(), r,
                                    vt.data(), q);
    if (info != 0) {
        std::ostringstream msg;
        msg << "svd: dgesdd failed to converge (info=" << info << ")";
        throw NumericError(msg.str());
    }
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < r; ++j) out.v(i, j) = vt(j, i);
    const std::vector<double> signs = fix_column_signs(out.u);
    for (int j = 0; j < r; ++j)
        if (signs[j] < 0.0)
            for (int i = 0; i < q; ++i) out.v(i, j) = -out.v(i, j);
    return out;
}

Matrix inv_sqrt_sym(const Matrix& s, double eps) {
    const SymEig e = sym_eig(s);
    const int n = s.rows();
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) {
        const double mu = e.eigenvalues[i] + eps;
        if (mu <= 0.0) {
            std::ostringstream msg;
            msg << "inv_sqrt_sym: non-positive eigenvalue " << e.eigenvalues[i]
                << " after regularization eps=" << eps;
            throw NumericError(msg.str());
        }
        g[i] = 1.0 / std::sqrt(mu);
    }
    // V diag(g) V^T
    Matrix vg(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) vg(i, j) = e.eigenvectors(i, j) * g[j];
    return matmul_nt(vg, e.eigenvectors);
}

Matrix frechet_inv_sqrt(const Matrix& s, const Matrix& ds, double eps) {
    const int n = s.rows();
    if (ds.rows() != n || ds.cols() != n)
        throw std::invalid_argument("frechet_inv_sqrt: direction shape mismatch");
    const SymEig e = sym_eig(s);
    std::vector<double> mu(n);
    double mu_max = 0.0;
    for (int i = 0; i < n; ++i) {
        mu[i] = e.eigenvalues[i] + eps;
        if (mu[i] <= 0.0) {
            std::ostringstream msg;
            msg << "frechet_inv_sqrt: non-positive eigenvalue " << e.eigenvalues[i]
                << " after regularization eps=" << eps;
            throw NumericError(msg.str());
        }
        mu_max = std::max(mu_max, mu[i]);
    }
    Matrix dsym(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dsym(i, j) = 0.5 * (ds(i, j) + ds(j, i));
    // A = V^T dS V, then scale by the divided-difference kernel of x^{-1/2}.
    Matrix a = matmul_tn(e.eigenvectors, matmul(dsym, e.eigenvectors));
    const double tol = 1e-12 * mu_max;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double kij;
            if (std::fabs(mu[i] - mu[j]) < tol) {
                const double m = 0.5 * (mu[i] + mu[j]);
                kij = -0.5 * std::pow(m, -1.5);
            } else {
                kij = (1.0 / std::sqrt(mu[i]) - 1.0 / std::sqrt(mu[j])) / (mu[i] - mu[j]);
            }
            a(i, j) *= kij;
        }
    }
    return matmul(e.eigenvectors, matmul_nt(a, e.eigenvectors));
}

Matrix pca_fit(const Matrix& x, double energy, int max_dim) {
    if (energy <= 0.0 || energy > 1.0)
        throw std::invalid_argument("pca_fit: energy must be in (0, 1]");
    const int d = x.rows(), n = x.cols();
    std::vector<double> evals;
    Matrix dirs;  // d x r, columns are directions
    if (d <= n) {
        const SymEig e = sym_eig(matmul_nt(x, x));
        evals = e.eigenvalues;
        dirs = e.eigenvectors;
    } else {
        // Gram trick: eigenvectors of X^T X map to directions X v / sqrt(l).
        const SymEig e = sym_eig(matmul_tn(x, x));
        evals = e.eigenvalues;
        dirs = Matrix(d, n);
        Matrix xv = matmul(x, e.eigenvectors);
        for (int j = 0; j < n; ++j) {
            const double l = std::max(evals[j], 0.0);
            const double inv = l > 0.0 ? 1.0 / std::sqrt(l) : 0.0;
            for (int i = 0; i < d; ++i) dirs(i, j) = xv(i, j) * inv;
        }
    }
    double total = 0.0;
    for (double& l : evals) {
        l = std::max(l, 0.0);
        total += l;
    }
    if (total <= 0.0) throw NumericError("pca_fit: all-zero data");
    const int avail = static_cast<int>(evals.size());
    int q = 0;
    double cum = 0.0;
    while (q < avail && cum < energy * total - 1e-15 * total) {
        cum += evals[q];
        ++q;
    }
    if (max_dim >= 0) q = std::min(q, max_dim);
    q = std::max(q, 1);
    Matrix proj(q, d);
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < d; ++j) proj(i, j) = dirs(j, i);
    return proj;
}

}  // namespace mvcca
