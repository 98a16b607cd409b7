#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mvcca/errors.hpp"
#include "mvcca/linalg.hpp"
#include "mvcca/tensor.hpp"

using namespace mvcca;

namespace {

Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = gauss(rng);
    return m;
}

Matrix random_unit_columns(int r, int c, std::mt19937_64& rng) {
    Matrix m = random_matrix(r, c, rng);
    for (int j = 0; j < c; ++j) {
        double nrm = 0.0;
        for (int i = 0; i < r; ++i) nrm += m(i, j) * m(i, j);
        nrm = std::sqrt(nrm);
        for (int i = 0; i < r; ++i) m(i, j) /= nrm;
    }
    return m;
}

}  // namespace

TEST_CASE("outer_accumulate matches brute force") {
    std::mt19937_64 rng(1);
    const std::vector<Matrix> views = {random_matrix(3, 5, rng),
                                       random_matrix(4, 5, rng),
                                       random_matrix(2, 5, rng)};
    const DenseTensor c = outer_accumulate(views);
    REQUIRE(c.dims() == std::vector<int>{3, 4, 2});
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 4; ++b)
            for (int d = 0; d < 2; ++d) {
                double want = 0.0;
                for (int i = 0; i < 5; ++i)
                    want += views[0](a, i) * views[1](b, i) * views[2](d, i);
                CHECK(c.at({a, b, d}) == doctest::Approx(want).epsilon(1e-12));
            }
}

TEST_CASE("tensor cap raises a data error with remediation") {
    std::mt19937_64 rng(2);
    const std::vector<Matrix> views = {random_matrix(50, 2, rng),
                                       random_matrix(50, 2, rng),
                                       random_matrix(50, 2, rng)};
    try {
        outer_accumulate(views, 1000);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("PCA") != std::string::npos);
    }
}

TEST_CASE("unfold/refold round trip and mode_product") {
    std::mt19937_64 rng(3);
    const std::vector<Matrix> views = {random_matrix(3, 4, rng),
                                       random_matrix(5, 4, rng),
                                       random_matrix(2, 4, rng)};
    const DenseTensor t = outer_accumulate(views);
    for (int mode = 0; mode < 3; ++mode) {
        const Matrix u = unfold(t, mode);
        CHECK(u.rows() == t.dims()[mode]);
        const DenseTensor back = refold(u, t.dims(), mode);
        for (size_t i = 0; i < t.size(); ++i) CHECK(back[i] == t[i]);
    }
    // mode product against direct contraction
    const Matrix u = random_matrix(4, 5, rng);
    const DenseTensor p = mode_product(t, u, 1);
    REQUIRE(p.dims() == std::vector<int>{3, 4, 2});
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 4; ++b)
            for (int d = 0; d < 2; ++d) {
                double want = 0.0;
                for (int q = 0; q < 5; ++q) want += t.at({a, q, d}) * u(b, q);
                CHECK(p.at({a, b, d}) == doctest::Approx(want).epsilon(1e-10));
            }
}

TEST_CASE("unfold of a CP model equals U diag(w) KR^T") {
    std::mt19937_64 rng(4);
    CpFactors f;
    f.m = 2;
    f.weights = {2.0, 1.0};
    f.factors = {random_unit_columns(3, 2, rng), random_unit_columns(4, 2, rng),
                 random_unit_columns(2, 2, rng)};
    const DenseTensor t = cp_reconstruct(f);
    const Matrix u0 = unfold(t, 0);
    const Matrix kr = khatri_rao({f.factors[1], f.factors[2]});
    Matrix ud(3, 2);
    for (int i = 0; i < 3; ++i)
        for (int l = 0; l < 2; ++l) ud(i, l) = f.factors[0](i, l) * f.weights[l];
    const Matrix want = matmul_nt(ud, kr);
    CHECK((u0 - want).max_abs() < 1e-12);
}

TEST_CASE("cp_als recovers a planted rank-2 tensor") {
    std::mt19937_64 rng(5);
    CpFactors truth;
    truth.m = 2;
    truth.weights = {3.0, 1.0};
    truth.factors = {random_unit_columns(6, 2, rng),
                     random_unit_columns(5, 2, rng),
                     random_unit_columns(6, 2, rng)};
    const DenseTensor t = cp_reconstruct(truth);
    CpOptions opts;
    opts.max_iter = 500;
    opts.tol = 1e-14;
    CpDiagnostics diag;
    const CpFactors fit = cp_als(t, 2, opts, &diag);
    CHECK(diag.final_residual < 1e-6);
    CHECK(fit.weights[0] == doctest::Approx(3.0).epsilon(1e-5));
    CHECK(fit.weights[1] == doctest::Approx(1.0).epsilon(1e-5));
    for (const auto& factor : fit.factors)
        for (int l = 0; l < 2; ++l) {
            double nrm = 0.0;
            for (int i = 0; i < factor.rows(); ++i) nrm += factor(i, l) * factor(i, l);
            CHECK(std::sqrt(nrm) == doctest::Approx(1.0).epsilon(1e-8));
        }
}

TEST_CASE("order-2 cp_als weights equal singular values") {
    std::mt19937_64 rng(6);
    const Matrix a = random_matrix(5, 7, rng);
    DenseTensor t({5, 7});
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 7; ++j) t.at({i, j}) = a(i, j);
    const Svd s = svd(a);
    CpOptions opts;
    opts.max_iter = 2000;
    opts.tol = 1e-14;
    const CpFactors f = cp_als(t, 3, opts);
    for (int l = 0; l < 3; ++l)
        CHECK(f.weights[l] == doctest::Approx(s.singular_values[l]).epsilon(1e-6));
}

TEST_CASE("implicit Kruskal ALS agrees with the dense path") {
    std::mt19937_64 rng(7);
    const std::vector<Matrix> views = {random_matrix(4, 10, rng),
                                       random_matrix(5, 10, rng),
                                       random_matrix(3, 10, rng)};
    const DenseTensor t = outer_accumulate(views);
    CpOptions opts;
    opts.max_iter = 300;
    opts.tol = 1e-12;
    opts.seed = 3;
    const CpFactors dense = cp_als(t, 2, opts);
    const CpFactors implicit = cp_als_kruskal(views, 2, opts);
    REQUIRE(dense.weights.size() == implicit.weights.size());
    for (size_t l = 0; l < dense.weights.size(); ++l)
        CHECK(dense.weights[l] == doctest::Approx(implicit.weights[l]).epsilon(1e-6));
    const DenseTensor rd_t = cp_reconstruct(dense);
    const DenseTensor ri_t = cp_reconstruct(implicit);
    double rd = 0.0, ri = 0.0;
    for (size_t i = 0; i < t.size(); ++i) {
        rd += (t[i] - rd_t[i]) * (t[i] - rd_t[i]);
        ri += (t[i] - ri_t[i]) * (t[i] - ri_t[i]);
    }
    CHECK(std::abs(std::sqrt(rd) - std::sqrt(ri)) <
          1e-6 * std::max(1.0, std::sqrt(rd)));
}

TEST_CASE("cp_als is deterministic under a fixed seed") {
    std::mt19937_64 rng(8);
    const std::vector<Matrix> views = {random_matrix(4, 6, rng),
                                       random_matrix(4, 6, rng),
                                       random_matrix(4, 6, rng)};
    const DenseTensor t = outer_accumulate(views);
    CpOptions opts;
    opts.seed = 11;
    const CpFactors a = cp_als(t, 3, opts);
    const CpFactors b = cp_als(t, 3, opts);
    CHECK(a.weights == b.weights);
    for (size_t r = 0; r < a.factors.size(); ++r)
        CHECK((a.factors[r] - b.factors[r]).max_abs() == 0.0);
}

TEST_CASE("weights sorted descending and frob_norm") {
    std::mt19937_64 rng(9);
    const std::vector<Matrix> views = {random_matrix(5, 8, rng),
                                       random_matrix(5, 8, rng),
                                       random_matrix(5, 8, rng)};
    const DenseTensor t = outer_accumulate(views);
    const CpFactors f = cp_als(t, 3);
    for (size_t l = 1; l < f.weights.size(); ++l) {
        CHECK(f.weights[l - 1] >= f.weights[l]);
        CHECK(f.weights[l] >= 0.0);
    }
    double sq = 0.0;
    for (size_t i = 0; i < t.size(); ++i) sq += t[i] * t[i];
    CHECK(frob_norm(t) == doctest::Approx(std::sqrt(sq)).epsilon(1e-12));
}
