#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "cusplab/applications.hpp"

using namespace cusplab;

namespace {

Eigen::MatrixXd dense(const Tridiagonal& H) {
    const int n = static_cast<int>(H.size());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        M(i, i) = H.diag[i].real();
        if (i + 1 < n) M(i, i + 1) = M(i + 1, i) = H.sup[i].real();
    }
    return M;
}

// <u, sqrt(1 + H) u> D from a full dense eigendecomposition
double dense_half(const Tridiagonal& H, const std::vector<cplx>& u, double D) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(H));
    const int n = static_cast<int>(u.size());
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        cplx c = 0.0;
        for (int i = 0; i < n; ++i) c += es.eigenvectors()(i, k) * u[i];
        acc += std::norm(c) * std::sqrt(1.0 + es.eigenvalues()[k]);
    }
    return acc * D;
}

}  // namespace

TEST(WavePacket, UnitNormAndResolution) {
    const auto u = make_wave_packet(0.5, 3.0, 1.0, {-10, 10, 0.01});
    EXPECT_NEAR(u.norm(), 1.0, 1e-12);
    EXPECT_THROW(make_wave_packet(0, 1, 0.0, {-10, 10, 0.01}), ParameterError);
    EXPECT_THROW(make_wave_packet(50, 1, 1.0, {-10, 10, 0.01}), DomainError);
    const auto coarse = make_wave_packet(0, 64.0, 1.0, {-10, 10, 0.05});
    EXPECT_THROW(evolve_mode(coarse, EvolveConfig{}), ResolutionError);
}

TEST(Evolve, FreeGaussianClosedForm) {
    const ModeGrid g{-25, 25, 0.0025};
    const auto u0 = make_wave_packet(0, 0.0, 1.0, g);
    EvolveConfig ec;
    ec.T = 1.0;
    ec.dt = 1e-4;
    ec.sample_every = 1000;
    const auto tr = evolve_mode(u0, ec);
    const double c = std::pow(pi, -0.25);
    double err = 0.0;
    for (std::size_t j = 0; j < u0.grid.size(); ++j)
        err = std::max(err, std::abs(tr.final_state.samples[j] - c * free_gaussian(u0.grid[j], 1.0, 0, 0, 1)));
    EXPECT_LT(err, 1e-6);
}

TEST(Evolve, MovingGaussianConverges) {
    // second-order error: halving the spacing cuts the error by about 4
    double prev = 0.0;
    for (double D : {0.01, 0.005}) {
        const auto u0 = make_wave_packet(-2, 2.0, 1.0, {-25, 30, D});
        EvolveConfig ec;
        ec.T = 0.5;
        ec.dt = D / 10;
        ec.sample_every = 100000;
        const auto tr = evolve_mode(u0, ec);
        const double c = std::pow(pi, -0.25);
        double err = 0.0;
        for (std::size_t j = 0; j < u0.grid.size(); ++j)
            err = std::max(err, std::abs(tr.final_state.samples[j] - c * free_gaussian(u0.grid[j], 0.5, -2, 2, 1)));
        if (prev > 0) {
            EXPECT_NEAR(prev / err, 4.0, 0.5);
        }
        prev = err;
    }
}

TEST(Evolve, UnitarityAndEnergy) {
    const auto u0 = make_wave_packet(0, 6.0, 1.0, {-8, 30, pi / 48});
    EvolveConfig ec;
    ec.alpha = 1.0;
    ec.profile = WarpProfile::b_profile(-0.3, 0.2, 0.7, 2);
    ec.T = 1.0;
    ec.dt = 2e-3;
    const auto tr = evolve_mode(u0, ec);
    ASSERT_EQ(tr.times.size(), 501u);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        EXPECT_NEAR(tr.norms[k], 1.0, 1e-10);
        EXPECT_NEAR(tr.energies[k], tr.energies[0], 1e-8 * std::abs(tr.energies[0]));
    }
    // energy = <u, H u> with H built independently as a dense matrix
    const Eigen::MatrixXd M = dense(mode_hamiltonian(1.0, ec.profile, u0.grid, u0.spacing));
    Eigen::VectorXcd x(u0.samples.size());
    for (std::size_t j = 0; j < u0.samples.size(); ++j) x[j] = u0.samples[j];
    EXPECT_NEAR((x.adjoint() * (M.cast<cplx>() * x)).value().real() * u0.spacing, tr.energies[0], 1e-9);
}

TEST(Evolve, ReflectionDetected) {
    const auto u0 = make_wave_packet(0, 4.0, 1.0, {-8, 6, 0.05});
    EvolveConfig ec;
    ec.T = 2.0;
    ec.dt = 1e-3;
    EXPECT_THROW(evolve_mode(u0, ec), ReflectionError);
}

TEST(HalfPower, MatchesDenseOracle) {
    const auto u = make_wave_packet(0.3, 5.0, 0.7, {-6, 6, 0.04});
    const auto H = mode_hamiltonian(0.5, WarpProfile::zero_profile(), u.grid, u.spacing);
    const double ref = dense_half(H, u.samples, u.spacing);
    EXPECT_NEAR(half_power_expectation(H, u.samples, u.spacing), ref, 1e-9 * ref);
    const HalfPower hp(H, 0, u.grid.size(), u.spacing);
    EXPECT_NEAR(hp.quadratic(u.samples), ref, 1e-9 * ref);
    EXPECT_THROW(HalfPower(H, 0, 700, u.spacing), ParameterError);
}

TEST(HalfPower, PlaneWaveSymbol) {
    // for a slowly varying envelope <(1 + H)^{1/2}> ~ sqrt(1 + xi^2)
    const auto u = make_wave_packet(0, 10.0, 3.0, {-20, 20, 0.02});
    const auto H = mode_hamiltonian(0.0, WarpProfile::zero_profile(), u.grid, u.spacing);
    const double k2 = (2 - 2 * std::cos(10.0 * 0.02)) / (0.02 * 0.02);
    EXPECT_NEAR(half_power_expectation(H, u.samples, u.spacing), std::sqrt(1 + k2), 1e-2);
}

TEST(Smoothing, ShortTimeAndMonotoneInT) {
    SmoothingConfig c;
    c.T = 0.0;
    const auto r0 = smoothing_run(8.0, c);
    EXPECT_EQ(r0.ratio, 0.0);
    EXPECT_EQ(r0.ratio_no_cutoff, 0.0);
    double prev = 0.0;
    for (double T : {0.02, 0.05, 0.2}) {
        c.T = T;
        const auto r = smoothing_run(8.0, c);
        EXPECT_GE(r.ratio, prev);
        prev = r.ratio;
    }
    c.T = 1e-3;
    EXPECT_LT(smoothing_run(8.0, c).ratio, 0.02);
}

TEST(Smoothing, CutoffBoundedUncutLinear) {
    SmoothingConfig c;
    const auto rows = smoothing_ratio({4, 8, 16, 32}, c);
    double lo = 1e300, hi = 0;
    std::vector<double> lx, ly;
    for (const auto& r : rows) {
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
        lx.push_back(std::log(r.xi));
        ly.push_back(std::log(r.ratio_no_cutoff));
        EXPECT_LT(r.norm_drift, 1e-10);
        // Jensen: <(1+H)^{1/2}> <= (1 + <H>)^{1/2}; <H> = xi^2 + 1/2 + <e^{-2r}> = xi^2 + 1/2 + e at alpha = 1
        EXPECT_GT(r.ratio_no_cutoff, c.T * r.xi * 0.95);
        EXPECT_LT(r.ratio_no_cutoff, c.T * std::sqrt(1 + r.xi * r.xi + 0.5 + std::exp(1.0)) * (1 + 1e-6));
    }
    EXPECT_LT(hi / lo, 3.0);
    EXPECT_NEAR(fit_line(lx, ly).slope, 1.0, 0.2);
}

TEST(Smoothing, UncutWindowEqualsConservedValue) {
    SmoothingConfig c;
    c.chi = SmoothingWindow::none();
    c.T = 0.5;
    const auto r = smoothing_run(8.0, c);
    EXPECT_EQ(r.ratio, r.ratio_no_cutoff);
    EXPECT_THROW(smoothing_run(0.0, c), ParameterError);
    EXPECT_THROW(smoothing_ratio({}, c), ParameterError);
}

TEST(Csv, Smoothing) {
    std::vector<SmoothingRow> rows(1);
    rows[0].xi = 4;
    rows[0].ratio = 0.5;
    rows[0].ratio_no_cutoff = 4.25;
    std::ostringstream os;
    write_smoothing_csv(os, rows);
    EXPECT_EQ(os.str(), "xi,ratio,ratio_no_cutoff\n4,0.5,4.25\n");
}
