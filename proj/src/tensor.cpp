#include "mvcca/tensor.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "mvcca/errors.hpp"
#include "mvcca/kernels.hpp"
#include "mvcca/linalg.hpp"

namespace mvcca {

DenseTensor::DenseTensor(std::vector<int> dims, size_t cap) : dims_(std::move(dims)) {
    size_t total = 1;
    for (int d : dims_) {
        if (d <= 0) throw std::invalid_argument("DenseTensor: non-positive dimension");
        total *= static_cast<size_t>(d);
        if (total > cap) {
            std::ostringstream msg;
            msg << "DenseTensor: element count exceeds cap (" << cap
                << " allowed); reduce dimensions, e.g. by PCA preprocessing";
            throw DataError(msg.str());
        }
    }
    data_.assign(total, 0.0);
}

namespace {
size_t linear_index(const std::vector<int>& dims, const std::vector<int>& idx) {
    size_t li = 0;
    for (size_t r = 0; r < dims.size(); ++r) li = li * dims[r] + idx[r];
    return li;
}
}  // namespace

double DenseTensor::at(const std::vector<int>& idx) const {
    return data_[linear_index(dims_, idx)];
}

double& DenseTensor::at(const std::vector<int>& idx) {
    return data_[linear_index(dims_, idx)];
}

double CpFactors::weight_sum() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

DenseTensor outer_accumulate(const std::vector<Matrix>& views, size_t cap) {
    const int k = static_cast<int>(views.size());
    if (k < 2) throw std::invalid_argument("outer_accumulate: need at least 2 views");
    const int n = views[0].cols();
    std::vector<int> dims(k);
    for (int r = 0; r < k; ++r) {
        if (views[r].cols() != n)
            throw std::invalid_argument("outer_accumulate: inconsistent sample counts");
        dims[r] = views[r].rows();
    }
    DenseTensor t(dims, cap);
    std::vector<std::vector<double>> cols(k);
    std::vector<const double*> ptrs(k);
    for (int i = 0; i < n; ++i) {
        for (int r = 0; r < k; ++r) {
            cols[r] = views[r].col(i);
            ptrs[r] = cols[r].data();
        }
        kernels::rank1_update(t.data(), dims, ptrs, 1.0, kernels::default_exec());
    }
    return t;
}

DenseTensor mode_product(const DenseTensor& t, const Matrix& u, int mode) {
    const auto& dims = t.dims();
    if (mode < 0 || mode >= t.order())
        throw std::invalid_argument("mode_product: mode out of range");
    if (u.cols() != dims[mode])
        throw std::invalid_argument("mode_product: matrix columns must match mode dimension");
    int lead = 1, trail = 1;
    for (int s = 0; s < mode; ++s) lead *= dims[s];
    for (int s = mode + 1; s < t.order(); ++s) trail *= dims[s];
    std::vector<int> odims = dims;
    odims[mode] = u.rows();
    DenseTensor out(odims);
    kernels::mode_product(t.data(), lead, dims[mode], trail, u.data(), u.rows(),
                          out.data(), kernels::default_exec());
    return out;
}

Matrix unfold(const DenseTensor& t, int mode) {
    const auto& dims = t.dims();
    if (mode < 0 || mode >= t.order())
        throw std::invalid_argument("unfold: mode out of range");
    size_t lead = 1, trail = 1;
    for (int s = 0; s < mode; ++s) lead *= static_cast<size_t>(dims[s]);
    for (int s = mode + 1; s < t.order(); ++s) trail *= static_cast<size_t>(dims[s]);
    const int d = dims[mode];
    Matrix out(d, static_cast<int>(lead * trail));
    const double* src = t.data();
    for (size_t le = 0; le < lead; ++le)
        for (int i = 0; i < d; ++i) {
            double* dst = out.row(i) + le * trail;
            const double* s0 = src + (le * d + static_cast<size_t>(i)) * trail;
            std::copy(s0, s0 + trail, dst);
        }
    return out;
}

DenseTensor refold(const Matrix& m, const std::vector<int>& dims, int mode) {
    DenseTensor t(dims);
    size_t lead = 1, trail = 1;
    for (int s = 0; s < mode; ++s) lead *= static_cast<size_t>(dims[s]);
    for (size_t s = mode + 1; s < dims.size(); ++s) trail *= static_cast<size_t>(dims[s]);
    const int d = dims[mode];
    for (size_t le = 0; le < lead; ++le)
        for (int i = 0; i < d; ++i) {
            const double* src = m.row(i) + le * trail;
            double* dst = t.data() + (le * d + static_cast<size_t>(i)) * trail;
            std::copy(src, src + trail, dst);
        }
    return t;
}

Matrix khatri_rao(const std::vector<Matrix>& mats) {
    if (mats.empty()) throw std::invalid_argument("khatri_rao: empty list");
    const int m = mats[0].cols();
    std::vector<const double*> ptrs;
    std::vector<int> dims;
    size_t total = 1;
    for (const auto& a : mats) {
        if (a.cols() != m) throw std::invalid_argument("khatri_rao: column count mismatch");
        ptrs.push_back(a.data());
        dims.push_back(a.rows());
        total *= static_cast<size_t>(a.rows());
    }
    Matrix out(static_cast<int>(total), m);
    kernels::khatri_rao(ptrs, dims, m, out.data(), kernels::default_exec());
    return out;
}

double frob_norm(const DenseTensor& t) {
    double s = 0.0;
    for (size_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
    return std::sqrt(s);
}

namespace {

Matrix gram(const Matrix& a) { return matmul_tn(a, a); }  // columns gram, m x m

void hadamard_into(Matrix& acc, const Matrix& b) {
    for (int i = 0; i < acc.rows(); ++i)
        for (int j = 0; j < acc.cols(); ++j) acc(i, j) *= b(i, j);
}

// Solve U = M G^{-1} with G symmetric positive (semi)definite m x m, adding a
// small ridge on failure.
Matrix solve_normal_eq(const Matrix& mtt, Matrix g, bool* ridge_applied) {
    const int m = g.rows();
    Matrix rhs = mtt.transposed();  // m x d
    Matrix gw = g;
    int info = LAPACKE_dposv(LAPACK_ROW_MAJOR, 'U', m, rhs.cols(), gw.data(), m,
                             rhs.data(), rhs.cols());
    if (info != 0) {
        double tr = trace(g);
        const double ridge = tr > 0.0 ? 1e-12 * tr : 1e-12;
        for (int i = 0; i < m; ++i) g(i, i) += ridge;
        rhs = mtt.transposed();
        gw = g;
        info = LAPACKE_dposv(LAPACK_ROW_MAJOR, 'U', m, rhs.cols(), gw.data(), m,
                             rhs.data(), rhs.cols());
        if (info != 0) throw NumericError("cp_als: singular normal equations");
        if (ridge_applied) *ridge_applied = true;
    }
    return rhs.transposed();
}

// Normalize the columns of a factor, returning the norms. Zero columns get a
// deterministic unit vector and weight 0.
std::vector<double> normalize_columns(Matrix& f) {
    std::vector<double> norms(f.cols(), 0.0);
    for (int l = 0; l < f.cols(); ++l) {
        double s = 0.0;
        for (int i = 0; i < f.rows(); ++i) s += f(i, l) * f(i, l);
        const double nrm = std::sqrt(s);
        norms[l] = nrm;
        if (nrm > 0.0) {
            for (int i = 0; i < f.rows(); ++i) f(i, l) /= nrm;
        } else {
            for (int i = 0; i < f.rows(); ++i) f(i, l) = 0.0;
            f(l % f.rows(), l) = 1.0;
        }
    }
    return norms;
}

// Shared ALS loop. Operand supplies dims, squared norm, MTTKRP and (for HOSVD
// init) the mode-wise unfolding gram.
template <class Operand>
CpFactors cp_als_core(const Operand& op, int m, const CpOptions& opts,
                      CpDiagnostics* diag) {
    if (m < 1) throw std::invalid_argument("cp_als: rank must be >= 1");
    const std::vector<int>& dims = op.dims();
    const int k = static_cast<int>(dims.size());

    CpFactors out;
    out.m = m;
    out.weights.assign(m, 0.0);
    out.factors.resize(k);

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int r = 0; r < k; ++r) {
        Matrix f(dims[r], m);
        if (opts.hosvd_init) {
            const SymEig e = sym_eig(op.unfold_gram(r));
            const int take = std::min(m, dims[r]);
            for (int i = 0; i < dims[r]; ++i)
                for (int l = 0; l < take; ++l) f(i, l) = e.eigenvectors(i, l);
            for (int l = take; l < m; ++l)
                for (int i = 0; i < dims[r]; ++i) f(i, l) = gauss(rng);
        } else {
            for (int i = 0; i < dims[r]; ++i)
                for (int l = 0; l < m; ++l) f(i, l) = gauss(rng);
        }
        normalize_columns(f);
        out.factors[r] = std::move(f);
    }

    CpDiagnostics local;
    CpDiagnostics& dg = diag ? *diag : local;
    dg = CpDiagnostics{};

    const double norm_t2 = op.norm2();
    if (norm_t2 == 0.0) {
        dg.converged = true;
        return out;
    }

    std::vector<Matrix> grams(k);
    for (int r = 0; r < k; ++r) grams[r] = gram(out.factors[r]);

    double prev_fit = 0.0;
    double res2 = norm_t2;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        Matrix last_mtt;
        for (int r = 0; r < k; ++r) {
            const Matrix mtt = op.mttkrp(r, out.factors);
            Matrix g(m, m, 1.0);
            for (int s = 0; s < k; ++s)
                if (s != r) hadamard_into(g, grams[s]);
            Matrix f = solve_normal_eq(mtt, g, &dg.ridge_applied);
            out.weights = normalize_columns(f);
            out.factors[r] = std::move(f);
            grams[r] = gram(out.factors[r]);
            if (r == k - 1) last_mtt = mtt;
        }
        // Fit from the last mode's MTTKRP: <T, M^> = sum_l w_l u_l . mtt_l.
        double inner = 0.0;
        for (int l = 0; l < m; ++l) {
            double d = 0.0;
            const Matrix& u = out.factors[k - 1];
            for (int i = 0; i < u.rows(); ++i) d += u(i, l) * last_mtt(i, l);
            inner += out.weights[l] * d;
        }
        double nrm_hat2 = 0.0;
        for (int l = 0; l < m; ++l)
            for (int l2 = 0; l2 < m; ++l2) {
                double p = out.weights[l] * out.weights[l2];
                for (int r = 0; r < k; ++r) p *= grams[r](l, l2);
                nrm_hat2 += p;
            }
        res2 = std::max(norm_t2 - 2.0 * inner + nrm_hat2, 0.0);
        const double fit = 1.0 - std::sqrt(res2 / norm_t2);
        dg.fits.push_back(fit);
        dg.iterations = iter + 1;
        if (iter > 0 && std::fabs(fit - prev_fit) < opts.tol) {
            dg.converged = true;
            prev_fit = fit;
            break;
        }
        prev_fit = fit;
    }
    dg.final_residual = std::sqrt(res2);

    // A matrix admits many rank-m factorizations with unit-norm factors, so
    // for order 2 rewrite the fit in SVD form: the weights become the
    // singular values of the reconstructed matrix, without changing it.
    if (k == 2) {
        Matrix a1 = out.factors[0];
        for (int i = 0; i < a1.rows(); ++i)
            for (int l = 0; l < m; ++l) a1(i, l) *= out.weights[l];
        const Svd s1 = svd(a1);
        const Svd s2 = svd(out.factors[1]);
        const int r1 = static_cast<int>(s1.singular_values.size());
        const int r2 = static_cast<int>(s2.singular_values.size());
        Matrix c1(r1, m), c2(r2, m);
        for (int i = 0; i < r1; ++i)
            for (int l = 0; l < m; ++l) c1(i, l) = s1.singular_values[i] * s1.v(l, i);
        for (int i = 0; i < r2; ++i)
            for (int l = 0; l < m; ++l) c2(i, l) = s2.singular_values[i] * s2.v(l, i);
        const Svd ks = svd(matmul_nt(c1, c2));
        const Matrix f0 = matmul(s1.u, ks.u);
        const Matrix f1 = matmul(s2.u, ks.v);
        const int rk = std::min(static_cast<int>(ks.singular_values.size()), m);
        Matrix n0(dims[0], m), n1(dims[1], m);
        std::fill(out.weights.begin(), out.weights.end(), 0.0);
        for (int l = 0; l < rk; ++l) {
            out.weights[l] = ks.singular_values[l];
            for (int i = 0; i < dims[0]; ++i) n0(i, l) = f0(i, l);
            for (int i = 0; i < dims[1]; ++i) n1(i, l) = f1(i, l);
        }
        out.factors[0] = std::move(n0);
        out.factors[1] = std::move(n1);
        normalize_columns(out.factors[0]);
        normalize_columns(out.factors[1]);
    }

    // Deterministic representation: flip signs in modes 1..k-1 so each
    // column's largest-magnitude entry is positive, absorbing flips into the
    // first mode; weights stay nonnegative (they are column norms).
    for (int r = 1; r < k; ++r) {
        Matrix& f = out.factors[r];
        for (int l = 0; l < m; ++l) {
            int arg = 0;
            double best = 0.0;
            for (int i = 0; i < f.rows(); ++i) {
                const double a = std::fabs(f(i, l));
                if (a > best) {
                    best = a;
                    arg = i;
                }
            }
            if (f(arg, l) < 0.0) {
                for (int i = 0; i < f.rows(); ++i) f(i, l) = -f(i, l);
                Matrix& f0 = out.factors[0];
                for (int i = 0; i < f0.rows(); ++i) f0(i, l) = -f0(i, l);
            }
        }
    }
    // Sort components by weight, descending, stable in the original order.
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return out.weights[a] > out.weights[b];
    });
    CpFactors sorted = out;
    for (int l = 0; l < m; ++l) {
        sorted.weights[l] = out.weights[order[l]];
        for (int r = 0; r < k; ++r)
            for (int i = 0; i < out.factors[r].rows(); ++i)
                sorted.factors[r](i, l) = out.factors[r](i, order[l]);
    }
    return sorted;
}

struct DenseOperand {
    const DenseTensor& t;
    double norm2_cached;

    explicit DenseOperand(const DenseTensor& tensor) : t(tensor) {
        double s = 0.0;
        for (size_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
        norm2_cached = s;
    }
    const std::vector<int>& dims() const { return t.dims(); }
    double norm2() const { return norm2_cached; }
    Matrix mttkrp(int mode, const std::vector<Matrix>& factors) const {
        std::vector<const double*> ptrs;
        for (const auto& f : factors) ptrs.push_back(f.data());
        Matrix out(t.dims()[mode], factors[0].cols());
        kernels::mttkrp(t.data(), t.dims(), mode, ptrs, factors[0].cols(),
                        out.data(), kernels::default_exec());
        return out;
    }
    Matrix unfold_gram(int mode) const {
        const Matrix x = unfold(t, mode);
        return matmul_nt(x, x);
    }
};

struct KruskalOperand {
    const std::vector<Matrix>& views;  // d_r x n
    std::vector<int> dims_;
    std::vector<Matrix> view_grams;  // n x n, lazily shared
    double norm2_cached = 0.0;

    explicit KruskalOperand(const std::vector<Matrix>& v) : views(v) {
        for (const auto& w : views) dims_.push_back(w.rows());
        const int n = views[0].cols();
        Matrix h(n, n, 1.0);
        for (const auto& w : views) {
            view_grams.push_back(matmul_tn(w, w));
            hadamard_into(h, view_grams.back());
        }
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s += h(i, j);
        norm2_cached = std::max(s, 0.0);
    }
    const std::vector<int>& dims() const { return dims_; }
    double norm2() const { return norm2_cached; }
    Matrix mttkrp(int mode, const std::vector<Matrix>& factors) const {
        const int n = views[0].cols();
        const int m = factors[0].cols();
        Matrix h(n, m, 1.0);
        for (size_t s = 0; s < views.size(); ++s) {
            if (static_cast<int>(s) == mode) continue;
            hadamard_into(h, matmul_tn(views[s], factors[s]));
        }
        return matmul(views[mode], h);
    }
    Matrix unfold_gram(int mode) const {
        const int n = views[0].cols();
        Matrix h(n, n, 1.0);
        for (size_t s = 0; s < views.size(); ++s)
            if (static_cast<int>(s) != mode) hadamard_into(h, view_grams[s]);
        return matmul(views[mode], matmul_nt(h, views[mode]));
    }
};

}  // namespace

CpFactors cp_als(const DenseTensor& t, int m, const CpOptions& opts,
                 CpDiagnostics* diag) {
    return cp_als_core(DenseOperand(t), m, opts, diag);
}

CpFactors cp_als_kruskal(const std::vector<Matrix>& views, int m,
                         const CpOptions& opts, CpDiagnostics* diag) {
    if (views.size() < 2)
        throw std::invalid_argument("cp_als_kruskal: need at least 2 views");
    return cp_als_core(KruskalOperand(views), m, opts, diag);
}

DenseTensor cp_reconstruct(const CpFactors& f, size_t cap) {
    if (f.factors.empty()) throw std::invalid_argument("cp_reconstruct: no factors");
    std::vector<int> dims;
    for (const auto& u : f.factors) dims.push_back(u.rows());
    DenseTensor t(dims, cap);
    std::vector<std::vector<double>> cols(f.factors.size());
    std::vector<const double*> ptrs(f.factors.size());
    for (int l = 0; l < f.m; ++l) {
        for (size_t r = 0; r < f.factors.size(); ++r) {
            cols[r] = f.factors[r].col(l);
            ptrs[r] = cols[r].data();
        }
        kernels::rank1_update(t.data(), dims, ptrs, f.weights[l],
                              kernels::default_exec());
    }
    return t;
}

}  // namespace mvcca
