#include "mvcca/kernels.hpp"

#include <cassert>
#include <cstring>
#include <numeric>

namespace mvcca::kernels {

Exec& default_exec() {
    static Exec exec = Exec::Parallel;
    return exec;
}

namespace {
inline bool par(Exec e) { return e == Exec::Parallel; }
}  // namespace

void gemm_nn(int m, int k, int n, const double* A, const double* B, double* C,
             double beta, Exec exec) {
#pragma omp parallel for schedule(static) if (par(exec))
    for (int i = 0; i < m; ++i) {
        double* ci = C + static_cast<size_t>(i) * n;
        if (beta == 0.0) std::memset(ci, 0, sizeof(double) * n);
        const double* ai = A + static_cast<size_t>(i) * k;
        for (int l = 0; l < k; ++l) {
            const double a = ai[l];
            const double* bl = B + static_cast<size_t>(l) * n;
            for (int j = 0; j < n; ++j) ci[j] += a * bl[j];
        }
    }
}

void gemm_tn(int m, int k, int n, const double* A, const double* B, double* C,
             double beta, Exec exec) {
#pragma omp parallel for schedule(static) if (par(exec))
    for (int i = 0; i < m; ++i) {
        double* ci = C + static_cast<size_t>(i) * n;
        if (beta == 0.0) std::memset(ci, 0, sizeof(double) * n);
        for (int l = 0; l < k; ++l) {
            const double a = A[static_cast<size_t>(l) * m + i];
            const double* bl = B + static_cast<size_t>(l) * n;
            for (int j = 0; j < n; ++j) ci[j] += a * bl[j];
        }
    }
}

void gemm_nt(int m, int k, int n, const double* A, const double* B, double* C,
             double beta, Exec exec) {
#pragma omp parallel for schedule(static) if (par(exec))
    for (int i = 0; i < m; ++i) {
        const double* ai = A + static_cast<size_t>(i) * k;
        double* ci = C + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* bj = B + static_cast<size_t>(j) * k;
            double acc = 0.0;
            for (int l = 0; l < k; ++l) acc += ai[l] * bj[l];
            ci[j] = (beta == 0.0 ? 0.0 : ci[j]) + acc;
        }
    }
}

void rank1_update(double* T, const std::vector<int>& dims,
                  const std::vector<const double*>& vecs, double w, Exec exec) {
    const int k = static_cast<int>(dims.size());
    assert(vecs.size() == dims.size());
    if (k == 1) {
        const double* v = vecs[0];
        for (int j = 0; j < dims[0]; ++j) T[j] += w * v[j];
        return;
    }
    // Suffix outer products over modes 1..k-1, then one parallel rank-1 slab
    // update over the leading mode.
    size_t suffix_len = 1;
    for (int r = 1; r < k; ++r) suffix_len *= static_cast<size_t>(dims[r]);
    std::vector<double> suffix(suffix_len);
    size_t cur_len = static_cast<size_t>(dims[k - 1]);
    std::memcpy(suffix.data(), vecs[k - 1], cur_len * sizeof(double));
    std::vector<double> tmp(suffix_len);
    for (int r = k - 2; r >= 1; --r) {
        const double* v = vecs[r];
        size_t next_len = cur_len * static_cast<size_t>(dims[r]);
        for (int j = 0; j < dims[r]; ++j) {
            const double vj = v[j];
            double* dst = tmp.data() + static_cast<size_t>(j) * cur_len;
            for (size_t t = 0; t < cur_len; ++t) dst[t] = vj * suffix[t];
        }
        suffix.swap(tmp);
        cur_len = next_len;
    }
    const double* v0 = vecs[0];
#pragma omp parallel for schedule(static) if (par(exec))
    for (int j = 0; j < dims[0]; ++j) {
        const double a = w * v0[j];
        double* dst = T + static_cast<size_t>(j) * cur_len;
        for (size_t t = 0; t < cur_len; ++t) dst[t] += a * suffix[t];
    }
}

void mode_product(const double* in, int lead, int d, int trail,
                  const double* U, int p, double* out, Exec exec) {
    const size_t out_slab = static_cast<size_t>(p) * trail;
    const size_t in_slab = static_cast<size_t>(d) * trail;
    const long total = static_cast<long>(lead) * p;
#pragma omp parallel for schedule(static) if (par(exec))
    for (long lp = 0; lp < total; ++lp) {
        const int l = static_cast<int>(lp / p);
        const int j = static_cast<int>(lp % p);
        const double* in_l = in + static_cast<size_t>(l) * in_slab;
        const double* uj = U + static_cast<size_t>(j) * d;
        double* dst = out + static_cast<size_t>(l) * out_slab +
                      static_cast<size_t>(j) * trail;
        for (int t = 0; t < trail; ++t) dst[t] = 0.0;
        for (int q = 0; q < d; ++q) {
            const double a = uj[q];
            const double* src = in_l + static_cast<size_t>(q) * trail;
            for (int t = 0; t < trail; ++t) dst[t] += a * src[t];
        }
    }
}

void khatri_rao(const std::vector<const double*>& factors,
                const std::vector<int>& dims, int m, double* out, Exec exec) {
    const int k = static_cast<int>(dims.size());
    size_t total = 1;
    for (int d : dims) total *= static_cast<size_t>(d);
    const long n = static_cast<long>(total);
#pragma omp parallel for schedule(static) if (par(exec))
    for (long row = 0; row < n; ++row) {
        // Decompose row with the first factor slowest.
        size_t rem = static_cast<size_t>(row);
        double* dst = out + static_cast<size_t>(row) * m;
        for (int l = 0; l < m; ++l) dst[l] = 1.0;
        for (int s = k - 1; s >= 0; --s) {
            const size_t idx = rem % static_cast<size_t>(dims[s]);
            rem /= static_cast<size_t>(dims[s]);
            const double* frow = factors[s] + idx * m;
            for (int l = 0; l < m; ++l) dst[l] *= frow[l];
        }
    }
}

void mttkrp(const double* T, const std::vector<int>& dims, int mode,
            const std::vector<const double*>& factors, int m, double* out,
            Exec exec) {
    const int k = static_cast<int>(dims.size());
    size_t lead = 1, trail = 1;
    for (int s = 0; s < mode; ++s) lead *= static_cast<size_t>(dims[s]);
    for (int s = mode + 1; s < k; ++s) trail *= static_cast<size_t>(dims[s]);
    const int d = dims[mode];

    // Materialize Khatri-Rao blocks for the modes before and after `mode`;
    // out(i,:) = sum_{lead,trail} T[lead,i,trail] * L(lead,:) .* R(trail,:).
    std::vector<double> L, R;
    if (mode > 0) {
        std::vector<const double*> fs(factors.begin(), factors.begin() + mode);
        std::vector<int> ds(dims.begin(), dims.begin() + mode);
        L.resize(lead * static_cast<size_t>(m));
        khatri_rao(fs, ds, m, L.data(), exec);
    }
    if (mode < k - 1) {
        std::vector<const double*> fs(factors.begin() + mode + 1, factors.end());
        std::vector<int> ds(dims.begin() + mode + 1, dims.end());
        R.resize(trail * static_cast<size_t>(m));
        khatri_rao(fs, ds, m, R.data(), exec);
    }

#pragma omp parallel for schedule(static) if (par(exec))
    for (int i = 0; i < d; ++i) {
        double* oi = out + static_cast<size_t>(i) * m;
        for (int l = 0; l < m; ++l) oi[l] = 0.0;
        std::vector<double> tmp(m);
        for (size_t le = 0; le < lead; ++le) {
            const double* ti =
                T + (le * d + static_cast<size_t>(i)) * trail;
            if (trail == 1) {
                const double x = ti[0];
                if (mode > 0) {
                    const double* lrow = L.data() + le * m;
                    for (int l = 0; l < m; ++l) oi[l] += x * lrow[l];
                } else {
                    for (int l = 0; l < m; ++l) oi[l] += x;
                }
                continue;
            }
            for (int l = 0; l < m; ++l) tmp[l] = 0.0;
            for (size_t t = 0; t < trail; ++t) {
                const double x = ti[t];
                const double* rrow = R.data() + t * m;
                for (int l = 0; l < m; ++l) tmp[l] += x * rrow[l];
            }
            if (mode > 0) {
                const double* lrow = L.data() + le * m;
                for (int l = 0; l < m; ++l) oi[l] += tmp[l] * lrow[l];
            } else {
                for (int l = 0; l < m; ++l) oi[l] += tmp[l];
            }
        }
    }
}

}  // namespace mvcca::kernels
