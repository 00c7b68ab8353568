#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cusplab/geodesic_flow.hpp"

using namespace cusplab;

TEST(Hamiltonian, Examples) {
    auto z = WarpProfile::zero_profile();
    EXPECT_DOUBLE_EQ(hamiltonian_value({0, 1, 0}, z), 0.0);
    EXPECT_DOUBLE_EQ(hamiltonian_value({0, 0, 1}, z), 0.0);
    EXPECT_NEAR(hamiltonian_value({1, 1, 1}, z), std::exp(-2.0), 1e-15);
}

TEST(Integrate, FreeRadialMotion) {
    auto p = WarpProfile::funnel_profile();
    auto tr = integrate({-0.5, 0.7, 0.0}, p, 10.0, 1e-3);
    for (std::size_t k = 0; k < tr.states.size(); k += 997) {
        EXPECT_NEAR(tr.states[k].r, -0.5 + 1.4 * tr.times[k], 1e-10);  // 1e4 roundings
        EXPECT_EQ(tr.states[k].rho, 0.7);
    }
    EXPECT_EQ(tr.energy_drift, 0.0);
}

TEST(Integrate, MatchesClosedFormOnHyperbolicEnd) {
    // beta = 0: rho = q tanh(2 q t + c), e^{-2r} sigma = q^2 sech^2(2 q t + c)
    auto p = WarpProfile::zero_profile();
    const PhasePoint s0{0.3, -0.4, 0.9};
    const double q = std::sqrt(hamiltonian_value(s0, p) + 1);
    const double c = std::atanh(s0.rho / q);
    auto tr = integrate(s0, p, 5.0, 1e-3);
    double worst = 0;
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        const double u = 2 * q * tr.times[k] + c;
        const double r = 0.5 * std::log(s0.sigma_ang / (q * q)) + std::log(std::cosh(u));
        worst = std::max({worst, std::abs(tr.states[k].rho - q * std::tanh(u)), std::abs(tr.states[k].r - r)});
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(Integrate, EnergyConservation) {
    std::vector<WarpProfile> ps{WarpProfile::zero_profile(), WarpProfile::funnel_profile(0.2),
                                WarpProfile::b_profile(0.2, 0.0, 1.0), WarpProfile::b_profile(-0.2, 1.0, 0.7)};
    for (const auto& p : ps) {
        auto ics = random_initial_conditions(p, 6, 7);
        for (const auto& s : ics) {
            auto tr = integrate(s, p, 100.0, 1e-3);
            EXPECT_LT(tr.energy_drift, 1e-8) << p.name;
            EXPECT_FALSE(tr.accuracy_failure);
        }
    }
}

TEST(Integrate, DriftFlag) {
    auto tr = integrate({-1.0, 0.0, 0.5}, WarpProfile::zero_profile(), 20.0, 0.4);
    EXPECT_TRUE(tr.accuracy_failure);
    EXPECT_THROW(integrate({0, 0, 1}, WarpProfile::zero_profile(), 1.0, 0.0), ParameterError);
    EXPECT_THROW(integrate({0, 0, -1}, WarpProfile::zero_profile(), 1.0, 0.1), ParameterError);
}

TEST(Convexity, Examples) {
    auto z = WarpProfile::zero_profile();
    auto free = integrate({3.0, 0.5, 0.0}, z, 2.0, 1e-3);
    EXPECT_EQ(convexity_residual(free, z).min_rddot, 0.0);
    auto tr = integrate({-2.5, -0.5, 0.02}, z, 6.0, 1e-3);
    auto c = convexity_residual(tr, z);
    EXPECT_GT(c.min_rddot, 0.0);
    EXPECT_GT(c.skipped, 0);
    EXPECT_GT(c.evaluated, 0);
}

TEST(Convexity, QuarterBoundProfiles) {
    // |beta'| <= 1/4 gives r'' >= 3 e^{-2(r+beta)} sigma
    auto p = WarpProfile::b_profile(-0.25, -3.0, 0.8);
    auto tr = integrate({-4.0, -0.6, 0.05}, p, 8.0, 1e-3);
    int checked = 0;
    for (const auto& s : tr.states) {
        if (std::abs(s.r) <= p.R_g) continue;
        const BetaJet j = p.beta(s.r);
        const double rdd = 4 * (1 + j.b1) * std::exp(-2 * (s.r + j.b0)) * s.sigma_ang;
        EXPECT_GE(rdd, 3 * std::exp(-2 * (s.r + j.b0)) * s.sigma_ang);
        ++checked;
    }
    EXPECT_GT(checked, 100);
    EXPECT_GE(convexity_residual(tr, p).min_rddot, 0.0);
}

TEST(Convexity, RhoNondecreasingOutsideCompactRegion) {
    // the funnel profile 2cosh r is left out: 1 + beta' = tanh r < 0 on its left end
    for (const auto& p : {WarpProfile::zero_profile(), WarpProfile::b_profile(0.2, -2.5, 1.0), WarpProfile::b_profile(-0.25, 3.0, 0.5)}) {
        for (const auto& s : random_initial_conditions(p, 8, 3)) {
            auto tr = integrate(s, p, 10.0, 1e-3);
            for (std::size_t k = 1; k < tr.states.size(); ++k) {
                if (std::abs(tr.states[k].r) > p.R_g && std::abs(tr.states[k - 1].r) > p.R_g) {
                    ASSERT_GE(tr.states[k].rho, tr.states[k - 1].rho - 1e-14) << p.name;
                }
            }
        }
    }
}

TEST(TanhResidual, Examples) {
    auto z = WarpProfile::zero_profile();
    auto one = integrate({0.5, 0.1, 0.3}, z, 1e-4, 1e-4);
    one.states.resize(1);
    one.times.resize(1);
    EXPECT_EQ(tanh_residual(one, z), 0.0);
    auto tr = integrate({0.5, -0.3, 0.8}, z, 3.0, 1e-4);
    EXPECT_LT(tanh_residual(tr, z), 1e-6);
    auto radial = integrate({0.5, 0.3, 0.0}, z, 1.0, 1e-3);
    EXPECT_THROW(tanh_residual(radial, z), DomainError);
}

TEST(TanhResidual, FourthOrderOnHyperbolicEnd) {
    auto z = WarpProfile::zero_profile();
    std::vector<double> lx, ly;
    for (double dt : {0.08, 0.04, 0.02, 0.01}) {
        auto tr = integrate({0.2, -0.5, 0.6}, z, 4.0, dt);
        lx.push_back(std::log(dt));
        ly.push_back(std::log(tanh_residual(tr, z)));
    }
    EXPECT_NEAR(fit_line(lx, ly).slope, 4.0, 0.5);
}

TEST(TanhResidual, GeneralProfileConvergesWithStep) {
    // trapezoid on beta' limits the residual to O(dt^2)
    auto p = WarpProfile::funnel_profile();
    auto a = tanh_residual(integrate({3.0, -0.3, 50.0}, p, 2.0, 2e-3), p);
    auto b = tanh_residual(integrate({3.0, -0.3, 50.0}, p, 2.0, 1e-3), p);
    EXPECT_LT(b, 1e-5);
    EXPECT_NEAR(a / b, 4.0, 0.5);
}

TEST(Escape, RadialTrajectories) {
    auto z = WarpProfile::zero_profile();
    auto reps = escape_report({{0.0, 1.0, 0.0}, {0.0, -1.0, 0.0}, {-5.0, 0.8, 0.0}}, z, 50.0, 1e-3);
    for (const auto& r : reps) {
        EXPECT_TRUE(r.escaped);
        EXPECT_LE(r.cusp_intervals, 1);
        EXPECT_FALSE(r.trapped_flag);
    }
    EXPECT_EQ(reps[0].cusp_intervals, 0);
    EXPECT_EQ(reps[1].cusp_intervals, 1);
    EXPECT_EQ(reps[2].cusp_intervals, 1);
}

TEST(Escape, RandomHyperbolic) {
    auto z = WarpProfile::zero_profile();
    auto ics = random_initial_conditions(z, 100, 2024);
    auto reps = escape_report(ics, z, 200.0, 1e-3);
    for (const auto& r : reps) {
        EXPECT_TRUE(r.escaped);
        EXPECT_LE(r.cusp_intervals, 1);
    }
}

TEST(Escape, BulgeTrapsCircularOrbit) {
    auto p = bulge_profile();
    const auto s = bulge_circular_orbit(p);
    EXPECT_NEAR(evaluate_warp(p, s.r).f1, 0.0, 1e-12);
    EXPECT_LT(evaluate_warp(p, s.r).f2, 0.0);
    EXPECT_NEAR(hamiltonian_value(s, p), 0.0, 1e-14);
    auto rep = escape_report({s}, p, 200.0, 1e-3);
    EXPECT_TRUE(rep[0].trapped_flag);
    EXPECT_FALSE(rep[0].escaped);
    EXPECT_LT(rep[0].max_abs_r, p.R_g);
}

TEST(Escape, ShortHorizonNeitherEscapesNorTraps) {
    auto rep = escape_one({0.0, 0.1, 0.0}, WarpProfile::zero_profile(), 1.0, 1e-2);
    EXPECT_FALSE(rep.escaped);
    EXPECT_FALSE(rep.trapped_flag);
}

TEST(InitialConditions, SeededAndInWindow) {
    auto p = WarpProfile::funnel_profile();
    auto a = random_initial_conditions(p, 50, 99), b = random_initial_conditions(p, 50, 99);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].r, b[i].r);
        EXPECT_EQ(a[i].sigma_ang, b[i].sigma_ang);
        EXPECT_LE(std::abs(a[i].r), p.R_g + 2);
        EXPECT_LE(std::abs(a[i].rho), 1.0);
        EXPECT_GE(a[i].sigma_ang, 0.0);
        const double e = hamiltonian_value(a[i], p);
        EXPECT_GE(e, -0.5 - 1e-12);
        EXPECT_LE(e, 0.5 + 1e-12);
    }
}

TEST(Csv, Columns) {
    auto z = WarpProfile::zero_profile();
    auto tr = integrate({0, 0.5, 0.2}, z, 0.01, 1e-3);
    std::ostringstream os;
    write_trajectory_csv(os, tr, z);
    std::string first;
    std::istringstream is(os.str());
    std::getline(is, first);
    EXPECT_EQ(first, "t,r,rho,sigma_ang,p");
    int rows = 0;
    for (std::string l; std::getline(is, l);) ++rows;
    EXPECT_EQ(rows, 11);
}
