#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cusplab/exact_cylinder.hpp"

using namespace cusplab;

namespace {
// dense Hermitian eigensolve of M^* M, independent of the power iteration
double svd_norm(const Eigen::MatrixXcd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M.adjoint() * M, Eigen::EigenvaluesOnly);
    return std::sqrt(es.eigenvalues().maxCoeff());
}
}  // namespace

TEST(Kernel, Symmetry) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> ur(-1.5, 1.5), us(-8, 8), ui(-1.5, 1.5);
    for (int m = 0; m <= 3; ++m)
        for (int k = 0; k < 25; ++k) {
            const ModeKernel mk{m, static_cast<double>(m), cplx(us(rng), ui(rng))};
            const double r = ur(rng), rp = ur(rng);
            const cplx a = kernel_value(mk, r, rp), b = kernel_value(mk, rp, r);
            EXPECT_LE(std::abs(a - b), 1e-12 * std::max(1.0, std::abs(a)));
        }
}

TEST(Kernel, ModeZeroValue) {
    EXPECT_NEAR(std::abs(kernel_value({0, 0.0, I}, 0.3, 0.3) - 0.5), 0.0, 1e-15);
    EXPECT_THROW(kernel_value({0, 0.0, 0.0}, 0.0, 0.0), PoleError);
    EXPECT_THROW(kernel_value({1, 0.0, 1.0}, 0.0, 0.0), ParameterError);
    EXPECT_THROW(kernel_value({1, 1.0, cplx(80.0, 0.0)}, 0.0, 0.0), DomainError);
}

TEST(Kernel, OdeResidualOffDiagonal) {
    // -u'' + (lambda^2 e^{-2r} - sigma^2) u = 0 for r != r'
    for (const ModeKernel mk : {ModeKernel{0, 0.0, cplx(1.5, -0.3)}, ModeKernel{1, 1.0, cplx(2.0, -0.5)},
                                ModeKernel{2, 2.0, cplx(0.7, 0.4)}}) {
        const double rp = -0.4, h = 1e-2;  // K_nu carries ~1e-11 relative cancellation noise
        double worst = 0, scale = 0;
        for (double r : {-1.2, -0.9, 0.2, 0.6, 1.1}) {
            auto g = [&](double x) { return kernel_value(mk, x, rp); };
            const cplx d2 = (-g(r - 2 * h) + 16.0 * g(r - h) - 30.0 * g(r) + 16.0 * g(r + h) - g(r + 2 * h)) / (12 * h * h);
            const cplx res = -d2 + (mk.lambda_m * mk.lambda_m * std::exp(-2 * r) - mk.sigma * mk.sigma) * g(r);
            worst = std::max(worst, std::abs(res));
            scale = std::max(scale, std::abs(g(r)));
        }
        EXPECT_LT(worst / scale, 1e-6) << mk.m;
    }
}

TEST(Kernel, DerivativeJumpIsMinusOne) {
    // one-sided derivatives across the diagonal: G is the resolvent, not its negative
    for (const ModeKernel mk : {ModeKernel{0, 0.0, cplx(1.5, -0.3)}, ModeKernel{1, 1.0, cplx(2.0, -0.5)},
                                ModeKernel{3, 3.0, cplx(-1.0, 0.2)}}) {
        const double rp = 0.25, h = 1e-3;
        auto g = [&](double x) { return kernel_value(mk, x, rp); };
        const cplx right = (-3.0 * g(rp) + 4.0 * g(rp + h) - g(rp + 2 * h)) / (2 * h);
        const cplx left = (3.0 * g(rp) - 4.0 * g(rp - h) + g(rp - 2 * h)) / (2 * h);
        EXPECT_LT(std::abs(right - left + 1.0), 1e-5) << mk.m;
    }
}

TEST(CutoffNorm, SpectralBound) {
    const auto w = CutoffWindow::make(1.0, 200);
    for (cplx s : {cplx(1.0, 0.5), cplx(2.0, 0.3), cplx(0.5, 1.5), cplx(-3.0, 0.2)})
        for (int m : {1, 2, 4}) {
            const double bound = 1.0 / std::abs((s * s).imag());
            EXPECT_LE(cutoff_norm({m, static_cast<double>(m), s}, w), bound * (1 + 1e-9)) << s << " " << m;
        }
}

TEST(CutoffNorm, ModeZeroRefinement) {
    const ModeKernel mk{0, 0.0, cplx(0.0, 2.0)};
    const double coarse = cutoff_norm(mk, CutoffWindow::make(1.0, 400));
    const double fine = svd_norm(nystrom_matrix(mk, CutoffWindow::make(1.0, 1600)));
    EXPECT_NEAR(coarse / fine, 1.0, 0.01);
}

TEST(CutoffNorm, ModeOneGridStable) {
    const ModeKernel mk{1, 1.0, cplx(10.0, -1.0)};
    const double a = cutoff_norm(mk, CutoffWindow::make(1.0, 400));
    const double b = cutoff_norm(mk, CutoffWindow::make(1.0, 800));
    EXPECT_GT(a, 0.0);
    EXPECT_TRUE(std::isfinite(a));
    EXPECT_NEAR(a / b, 1.0, 0.01);
}

TEST(CutoffNorm, PowerIterationMatchesSvd) {
    const auto w = CutoffWindow::make(1.0, 300);
    for (const ModeKernel mk : {ModeKernel{1, 1.0, cplx(20.0, -0.5)}, ModeKernel{0, 0.0, cplx(3.0, -0.25)},
                                ModeKernel{2, 2.0, cplx(5.0, 0.0)}}) {
        const auto M = nystrom_matrix(mk, w);
        EXPECT_NEAR(largest_singular_value(M) / svd_norm(M), 1.0, 1e-7);
    }
}

TEST(CutoffNorm, DecreasingInMode) {
    // holds by operator monotonicity when sigma^2 < 0; with Re sigma^2 > 0 a turning point can break it
    const auto w = CutoffWindow::make(1.0, 200);
    for (cplx s : {cplx(0.0, 0.5), cplx(0.0, 2.0)}) {
        double prev = std::numeric_limits<double>::infinity();
        for (int m = 1; m <= 8; ++m) {
            const double n = cutoff_norm({m, static_cast<double>(m), s}, w);
            EXPECT_LE(n, prev * (1 + 1e-12)) << m;
            prev = n;
        }
    }
}

TEST(CutoffWindow, Shape) {
    const auto w = CutoffWindow::make(2.0, 401);
    for (std::size_t j = 0; j < w.grid.size(); ++j) {
        if (std::abs(w.grid[j]) <= 1.0) {
            EXPECT_EQ(w.chi[j], 1.0);
        }
        EXPECT_GE(w.chi[j], 0.0);
        EXPECT_LE(w.chi[j], 1.0);
    }
    EXPECT_EQ(w.chi.front(), 0.0);
    double sum = 0;
    for (double x : w.weights) sum += x;
    EXPECT_NEAR(sum, 4.0, 1e-12);
    EXPECT_THROW(CutoffWindow::make(0.0), ParameterError);
}

class SlopeLaw : public ::testing::TestWithParam<double> {};

TEST_P(SlopeLaw, MatchesExponent) {
    const double ims = GetParam();
    const auto f = lower_bound_slope(1, 1.0, ims, 10.0, 60.0, CutoffWindow::make(1.0, 400), 11);
    EXPECT_NEAR(f.slope, 2 * std::abs(ims) - 1, 0.15) << "Im sigma " << ims;
    EXPECT_EQ(f.norms.size(), 11u);
}

INSTANTIATE_TEST_SUITE_P(ImSigma, SlopeLaw, ::testing::Values(0.0, -0.25, -0.5, -1.0));

TEST(LowerBoundSlope, Errors) {
    const auto w = CutoffWindow::make(1.0, 100);
    EXPECT_THROW(lower_bound_slope(1, 1.0, -0.5, 70.0, 100.0, w, 8), InsufficientData);
    EXPECT_THROW(lower_bound_slope(1, 1.0, -0.5, 10.0, 20.0, w, 5), ParameterError);
    EXPECT_THROW(lower_bound_slope(0, 0.0, -0.5, 10.0, 20.0, w, 8), ParameterError);
}

TEST(PoleResidue, RankOneHalfI) {
    const auto rep = pole_residue(CutoffWindow::make(1.0, 120));
    EXPECT_EQ(rep.rank, 1);
    EXPECT_LT(rep.max_deviation, 1e-6);
    EXPECT_NEAR(std::abs(rep.mean_value - 0.5 * I), 0.0, 1e-6);
    // constant kernel i/2: norm = (1/2) int chi^2
    const auto w = CutoffWindow::make(1.0, 120);
    double s = 0;
    for (std::size_t j = 0; j < w.grid.size(); ++j) s += w.weights[j] * w.chi[j] * w.chi[j];
    EXPECT_NEAR(rep.residue_norm, 0.5 * s, 1e-9);
}

TEST(Winding, ModeOneHasNoPoles) {
    EXPECT_EQ(mode_wronskian_winding(1.0, -5, 5, -2, -0.1), 0);
    EXPECT_EQ(mode_wronskian_winding(1.0, -5, 5, -2, -0.1, 64, 0.7), 0);
}

TEST(Winding, HelperCountsZeros) {
    // mode-0 Wronskian 2 i sigma has its zero at the origin
    EXPECT_EQ(winding_number([](cplx s) { return 2.0 * I * s; }, box_contour(-1, 1, -1, 1, 8)), 1);
    EXPECT_EQ(winding_number([](cplx s) { return (s - 1.0) * (s + 1.0) * (s + 1.0); }, circle_contour(0.0, 3.0, 16)), 3);
    EXPECT_EQ(winding_number([](cplx s) { return 1.0 / (s - 0.5); }, circle_contour(0.0, 1.0, 16)), -1);
    EXPECT_EQ(winding_number([](cplx s) { return std::exp(10.0 * s); }, circle_contour(0.0, 1.0, 4)), 0);
}

TEST(Csv, CylinderColumns) {
    SlopeFit f;
    f.re_sigma = {10, 20};
    f.norms = {0.5, 0.25};
    std::ostringstream os;
    write_cylinder_csv(os, f, -0.5);
    EXPECT_EQ(os.str().substr(0, 33), "re_sigma,im_sigma,norm,log_norm\n1");
}
