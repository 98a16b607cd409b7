#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mvcca/errors.hpp"
#include "mvcca/linalg.hpp"

using namespace mvcca;

namespace {

Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = gauss(rng);
    return m;
}

Matrix random_spd(int d, std::mt19937_64& rng) {
    const Matrix a = random_matrix(d, d + 3, rng);
    Matrix s = matmul_nt(a, a);
    for (int i = 0; i < d; ++i) s(i, i) += 0.5;
    return s;
}

}  // namespace

TEST_CASE("center_columns removes the per-feature mean") {
    std::mt19937_64 rng(1);
    const Matrix x = random_matrix(4, 9, rng);
    const auto [c, mean] = center_columns(x);
    for (int i = 0; i < 4; ++i) {
        double sum = 0.0, want = 0.0;
        for (int j = 0; j < 9; ++j) {
            sum += c(i, j);
            want += x(i, j);
        }
        CHECK(std::abs(sum) < 1e-11);
        CHECK(mean[i] == doctest::Approx(want / 9.0).epsilon(1e-12));
    }
}

TEST_CASE("sym_eig 2x2 oracle and reconstruction") {
    const Matrix s = {{2.0, 1.0}, {1.0, 2.0}};
    const SymEig e = sym_eig(s);
    CHECK(e.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(e.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(e.eigenvectors(0, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
    CHECK(e.eigenvectors(1, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-12));

    std::mt19937_64 rng(7);
    const Matrix a = random_spd(6, rng);
    const SymEig ea = sym_eig(a);
    // descending order
    for (size_t i = 1; i < ea.eigenvalues.size(); ++i)
        CHECK(ea.eigenvalues[i - 1] >= ea.eigenvalues[i]);
    // V orthonormal and A = V diag V^T
    const Matrix vtv = matmul_tn(ea.eigenvectors, ea.eigenvectors);
    Matrix recon(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            CHECK(std::abs(vtv(i, j) - (i == j ? 1.0 : 0.0)) < 1e-10);
            double sum = 0.0;
            for (int l = 0; l < 6; ++l)
                sum += ea.eigenvectors(i, l) * ea.eigenvalues[l] * ea.eigenvectors(j, l);
            recon(i, j) = sum;
        }
    CHECK((recon - a).max_abs() < 1e-9);
    // sign convention: largest-magnitude entry of each eigenvector positive
    for (int l = 0; l < 6; ++l) {
        int arg = 0;
        for (int i = 1; i < 6; ++i)
            if (std::abs(ea.eigenvectors(i, l)) > std::abs(ea.eigenvectors(arg, l)))
                arg = i;
        CHECK(ea.eigenvectors(arg, l) > 0.0);
    }
}

TEST_CASE("svd reconstructs and orders singular values") {
    std::mt19937_64 rng(8);
    const Matrix a = random_matrix(5, 7, rng);
    const Svd s = svd(a);
    REQUIRE(s.singular_values.size() == 5);
    for (size_t i = 1; i < s.singular_values.size(); ++i) {
        CHECK(s.singular_values[i - 1] >= s.singular_values[i]);
        CHECK(s.singular_values[i] >= 0.0);
    }
    Matrix recon(5, 7);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 7; ++j) {
            double sum = 0.0;
            for (int l = 0; l < 5; ++l)
                sum += s.u(i, l) * s.singular_values[l] * s.v(j, l);
            recon(i, j) = sum;
        }
    CHECK((recon - a).max_abs() < 1e-10);
}

TEST_CASE("inv_sqrt_sym inverts the regularized square") {
    std::mt19937_64 rng(9);
    const Matrix s = random_spd(5, rng);
    const double eps = 1e-3;
    const Matrix w = inv_sqrt_sym(s, eps);
    Matrix reg = s;
    for (int i = 0; i < 5; ++i) reg(i, i) += eps;
    const Matrix prod = matmul(w, matmul(reg, w));
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(std::abs(prod(i, j) - (i == j ? 1.0 : 0.0)) < 1e-9);

    // identity: W = I / sqrt(1 + eps)
    const Matrix wi = inv_sqrt_sym(Matrix::identity(3), eps);
    CHECK(wi(0, 0) == doctest::Approx(1.0 / std::sqrt(1.0 + eps)).epsilon(1e-12));

    // negative spectrum rejected
    Matrix neg = Matrix::identity(2);
    neg *= -1.0;
    CHECK_THROWS_AS(inv_sqrt_sym(neg, 0.0), NumericError);
}

TEST_CASE("frechet_inv_sqrt matches central finite differences") {
    std::mt19937_64 rng(10);
    const double eps = 1e-4, h = 1e-6;
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix s = random_spd(5, rng);
        Matrix ds = random_matrix(5, 5, rng);
        ds = matmul_tn(ds, ds);  // symmetric direction
        Matrix plus = s, minus = s;
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) {
                plus(i, j) += h * ds(i, j);
                minus(i, j) -= h * ds(i, j);
            }
        const Matrix fd = (inv_sqrt_sym(plus, eps) - inv_sqrt_sym(minus, eps)) *
                          (1.0 / (2.0 * h));
        const Matrix an = frechet_inv_sqrt(s, ds, eps);
        CHECK((fd - an).max_abs() < 1e-5 * std::max(1.0, an.max_abs()));
    }
}

TEST_CASE("frechet_inv_sqrt handles repeated eigenvalues") {
    // S = 4*I: derivative is -1/2 (4+eps)^{-3/2} * sym(dS)
    Matrix s = Matrix::identity(4);
    s *= 4.0;
    std::mt19937_64 rng(11);
    Matrix ds = random_matrix(4, 4, rng);
    const Matrix an = frechet_inv_sqrt(s, ds, 0.0);
    const double coef = -0.5 * std::pow(4.0, -1.5);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(an(i, j) ==
                  doctest::Approx(coef * 0.5 * (ds(i, j) + ds(j, i))).epsilon(1e-10));
}

TEST_CASE("pca_fit captures planted structure") {
    std::mt19937_64 rng(12);
    // rank-2 data in 6 dims plus tiny noise
    const Matrix basis = random_matrix(6, 2, rng);
    const Matrix coeff = random_matrix(2, 40, rng);
    Matrix x = matmul(basis, coeff);
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j)
            x(i, j) += 1e-8 * std::normal_distribution<double>()(rng);
    const auto [c, mean] = center_columns(x);
    const Matrix p = pca_fit(c, 0.99);
    CHECK(p.rows() == 2);
    CHECK(p.cols() == 6);
    // rows orthonormal
    const Matrix ppt = matmul_nt(p, p);
    CHECK((ppt - Matrix::identity(2)).max_abs() < 1e-6);

    // max_dim cap
    CHECK(pca_fit(c, 0.9999999, 1).rows() == 1);

    // wide-vs-tall consistency: d > n uses the Gram path
    const Matrix tall = random_matrix(30, 8, rng);
    const auto [tc, tm] = center_columns(tall);
    const Matrix pt = pca_fit(tc, 1.0, 3);
    CHECK(pt.rows() == 3);
    const Matrix g = matmul_nt(pt, pt);
    CHECK((g - Matrix::identity(3)).max_abs() < 1e-8);

    CHECK_THROWS_AS(pca_fit(Matrix(4, 5, 0.0), 0.95), NumericError);
}
