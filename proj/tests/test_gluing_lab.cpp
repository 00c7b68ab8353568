#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <sstream>

#include "cusplab/gluing_lab.hpp"

using namespace cusplab;

namespace {

Eigen::MatrixXcd dense(const Tridiagonal& T) {
    const int n = static_cast<int>(T.size());
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        M(j, j) = T.diag[j];
        if (j + 1 < n) {
            M(j + 1, j) = T.sub[j];
            M(j, j + 1) = T.sup[j];
        }
    }
    return M;
}

Eigen::MatrixXcd diag(const std::vector<double>& v) {
    Eigen::VectorXcd d(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) d[i] = v[i];
    return d.asDiagonal();
}

// A_j built from dense matrices, independent of the LU and commutator code
std::array<Eigen::MatrixXcd, 3> dense_A(const GluingSetup& s) {
    const Eigen::MatrixXcd P = dense(s.op().A);
    const int n = static_cast<int>(s.size());
    const auto& c = s.cutoffs();
    const std::array<const std::vector<double>*, 3> chi{&c.chi_C, &c.chi_K, &c.chi_F};
    std::array<Eigen::MatrixXcd, 3> out;
    for (int j = 0; j < 3; ++j) {
        const Eigen::MatrixXcd Pj = P - cplx(0, 1) * diag(s.absorber(j)) - s.lambda() * Eigen::MatrixXcd::Identity(n, n);
        const Eigen::MatrixXcd T = diag(s.shifted_cutoff(j));
        out[j] = (P * T - T * P) * Pj.partialPivLu().solve(diag(*chi[j]));
    }
    return out;
}

// noncommutative polynomials in C, K, F
using Poly = std::map<std::string, double>;

Poly mul(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [u, x] : a)
        for (const auto& [v, y] : b) out[u + v] += x * y;
    return out;
}

Poly add(Poly a, const Poly& b, double s = 1.0) {
    for (const auto& [w, c] : b) a[w] += s * c;
    return a;
}

Poly reduce(const Poly& p) {
    Poly out;
    for (const auto& [w, c] : p) {
        bool zero = false;
        for (const char* bad : {"CC", "KK", "FF", "CF", "FC"})
            if (w.find(bad) != std::string::npos) zero = true;
        if (!zero && std::abs(c) > 0) out[w] += c;
    }
    for (auto it = out.begin(); it != out.end();) it = it->second == 0.0 ? out.erase(it) : std::next(it);
    return out;
}

Poly to_poly(const GluingSetup::Combination& c) {
    Poly p;
    for (const auto& [w, x] : c) p[w] += x;
    return p;
}

}  // namespace

TEST(Cutoffs, PartitionAndSupports) {
    const double Rg = 1.5;
    std::vector<double> grid;
    for (int i = 0; i <= 2000; ++i) grid.push_back(-8 + 16.0 * i / 2000);
    const auto t = build_cutoffs(Rg, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = grid[i];
        EXPECT_NEAR(t.chi_C[i] + t.chi_K[i] + t.chi_F[i], 1.0, 1e-15);
        EXPECT_NEAR(t.chi_C[i], cutoff::chi_F(-r, Rg), 1e-15);
        EXPECT_GE(t.chi_K[i], -1e-15);
        if (r <= Rg + 1) { EXPECT_EQ(t.chi_F[i], 0.0); }
        if (r >= Rg + 2) { EXPECT_EQ(t.chi_F[i], 1.0); }
        if (std::abs(r) <= Rg + 1) { EXPECT_NEAR(t.chi_K[i], 1.0, 1e-15); }
        if (std::abs(r) >= Rg + 2) { EXPECT_NEAR(t.chi_K[i], 0.0, 1e-15); }
        // shifted cutoffs are 1 where the originals live
        EXPECT_NEAR(cutoff::chi_C_shift(r, Rg) * t.chi_C[i], t.chi_C[i], 1e-15);
        EXPECT_NEAR(cutoff::chi_K_shift(r, Rg) * t.chi_K[i], t.chi_K[i], 1e-15);
        EXPECT_NEAR(cutoff::chi_F_shift(r, Rg) * t.chi_F[i], t.chi_F[i], 1e-15);
    }
    EXPECT_THROW(build_cutoffs(Rg, {-3.0, 0.0, 3.0}), DomainError);
    EXPECT_THROW(build_cutoffs(0.0, grid), ParameterError);
}

TEST(Setup, ShiftedCutoffsMissTheirAbsorbers) {
    GluingSetup s(GluingConfig{}, 0.2, cplx(0.3, -0.04));
    for (int j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.shifted_cutoff(j)[i] * s.absorber(j)[i], 0.0);
}

TEST(Setup, MatchesDenseOracle) {
    GluingConfig cfg;
    GluingSetup s(cfg, 0.5, cplx(0.3, -0.1));
    const auto A = dense_A(s);
    const int n = static_cast<int>(s.size());
    std::vector<cplx> v(n);
    for (int i = 0; i < n; ++i) v[i] = cplx(std::sin(0.37 * i), std::cos(0.11 * i * i));
    const Eigen::Map<Eigen::VectorXcd> ve(v.data(), n);
    for (int j = 0; j < 3; ++j) {
        auto y = s.apply_A(j, v);
        auto ya = s.apply_A_adjoint(j, v);
        const Eigen::VectorXcd ref = A[j] * ve, refa = A[j].adjoint() * ve;
        EXPECT_LT((Eigen::Map<Eigen::VectorXcd>(y.data(), n) - ref).norm(), 1e-10 * ref.norm());
        EXPECT_LT((Eigen::Map<Eigen::VectorXcd>(ya.data(), n) - refa).norm(), 1e-10 * refa.norm());
    }
    // norms through Lanczos vs a dense SVD
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd_sum(A[0] + A[1] + A[2]);
    EXPECT_NEAR(s.norm({{"C", 1.0}, {"K", 1.0}, {"F", 1.0}}), svd_sum.singularValues()[0],
                1e-7 * svd_sum.singularValues()[0]);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd_fk(A[2] * A[1]);
    EXPECT_NEAR(s.word_norm("FK"), svd_fk.singularValues()[0], 1e-7 * svd_fk.singularValues()[0]);
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
    const Eigen::MatrixXcd Asum = A[0] + A[1] + A[2];
    const Eigen::MatrixXcd B1 = I - Asum;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd_r1((I + Asum) * B1 - I);
    EXPECT_NEAR(s.remainder_norm(gluing::correction(1)), svd_r1.singularValues()[0],
                1e-7 * svd_r1.singularValues()[0]);
}

TEST(Setup, ParametrixIdentity) {
    GluingSetup s(GluingConfig{}, 0.1, cplx(0.3, -0.02));
    std::vector<cplx> f(s.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = s.op().grid[i];
        f[i] = std::exp(-0.3 * x * x) * cplx(1, x);
    }
    auto g = s.apply_P_minus_lambda(s.apply_G(f));
    for (int j = 0; j < 3; ++j) {
        const auto a = s.apply_A(j, f);
        for (std::size_t i = 0; i < f.size(); ++i) g[i] -= a[i];
    }
    for (std::size_t i = 0; i < f.size(); ++i) g[i] -= f[i];
    EXPECT_LT(vec_norm(g), 1e-12 * vec_norm(f));
}

TEST(Algebra, CorrectionExpansion) {
    const Poly A{{"C", 1.0}, {"K", 1.0}, {"F", 1.0}};
    const Poly R = reduce(add(mul(add({{"", 1.0}}, A), to_poly(gluing::correction(4))), {{"", 1.0}}, -1.0));
    EXPECT_EQ(R, reduce(to_poly(gluing::final_remainder_words())));
    // first stage leaves only cross terms
    const Poly R1 = reduce(add(mul(add({{"", 1.0}}, A), to_poly(gluing::correction(1))), {{"", 1.0}}, -1.0));
    EXPECT_EQ(R1, (Poly{{"CK", -1.0}, {"FK", -1.0}, {"KC", -1.0}, {"KF", -1.0}}));
}

TEST(Parametrix, VanishingProductsAndFormula) {
    const auto rep = apply_parametrix(GluingConfig{}, 0.1, cplx(0.3, -0.02));
    for (const auto& w : gluing::vanishing_products()) EXPECT_LT(rep.a_products.at(w), 1e-10) << w;
    EXPECT_LT(rep.formula_mismatch, 1e-10);
    EXPECT_LT(rep.corrected_remainder, rep.first_order_remainder);
    EXPECT_GT(rep.a_products.at("K"), 0.1);
}

TEST(Parametrix, AwayFromRealAxisEverythingIsSmall) {
    double prev = 1e300;
    for (double h : {0.1, 0.05, 0.025}) {
        const auto rep = apply_parametrix(GluingConfig{}, h, cplx(0.3, 1.0), false);
        EXPECT_LT(rep.first_order_remainder, 0.1 * h);
        EXPECT_LT(rep.first_order_remainder, prev);
        EXPECT_LE(rep.corrected_remainder, rep.first_order_remainder * 1e-3);
        prev = rep.first_order_remainder;
    }
}

TEST(Parametrix, RemainderDecay) {
    const auto rows = remainder_decay(GluingConfig{}, {0.1, 0.05, 0.025, 0.0125}, 0.3, 0.2);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_NEAR(rows[0].lambda.imag(), -0.02, 1e-15);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) EXPECT_GE(rows[i].ratio, 3.0);
    // superpolynomial: the local exponent keeps growing
    for (std::size_t i = 0; i + 2 < rows.size(); ++i) EXPECT_GE(rows[i + 1].ratio, rows[i].ratio);
    EXPECT_TRUE(std::isnan(rows.back().ratio));
    for (const auto& r : rows) EXPECT_LT(r.corrected, r.first_order);
    EXPECT_THROW(remainder_decay(GluingConfig{}, {0.1, 0.05}, 0.3, 0.2), ParameterError);
    EXPECT_THROW(remainder_decay(GluingConfig{}, {0.05, 0.1, 0.025}, 0.3, 0.2), ParameterError);
}

TEST(Parametrix, Errors) {
    EXPECT_THROW(GluingSetup(GluingConfig{}, 0.0, cplx(0.3, -0.1)), ParameterError);
    GluingConfig bad;
    bad.pad = 2;
    EXPECT_THROW(GluingSetup(bad, 0.1, cplx(0.3, -0.1)), ParameterError);
    EXPECT_THROW(GluingSetup::letter('X'), ParameterError);
}

TEST(Csv, Glue) {
    std::vector<DecayRow> rows(2);
    rows[0].h = 0.1;
    rows[0].lambda = cplx(0.3, -0.02);
    rows[0].first_order = 4;
    rows[0].corrected = 0.05;
    rows[0].ratio = 4.6;
    rows[1].h = 0.05;
    std::ostringstream os;
    write_glue_csv(os, rows);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "h,re_lambda,im_lambda,first_order,corrected,ratio");
    std::getline(is, line);
    EXPECT_EQ(line, "0.10000000000000001,0.29999999999999999,-0.02,4,0.050000000000000003,4.5999999999999996");
}
