#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "common.hpp"
#include "geometry.hpp"

namespace cusplab {

struct PhasePoint {
    double r = 0.0;
    double rho = 0.0;
    double sigma_ang = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<PhasePoint> states;
    double energy_drift = 0.0;
    double dt = 0.0;
    bool accuracy_failure = false;  // drift above 1e-6
};

struct EscapeReport {
    bool escaped = false;
    double max_abs_r = 0.0;
    int cusp_intervals = 0;
    bool trapped_flag = false;
    double exit_time = 0.0;  // time |r| first passed R_g + 10, or T
};

inline double hamiltonian_value(const PhasePoint& s, const WarpProfile& p) {
    const double beta = p.beta(s.r).b0;
    return s.rho * s.rho + std::exp(-2.0 * (s.r + beta)) * s.sigma_ang - 1.0;
}

namespace detail {

// (r', rho') for r' = 2 rho, rho' = 2 (1 + beta') e^{-2(r+beta)} sigma
inline std::pair<double, double> geodesic_rhs(const WarpProfile& p, double r, double rho, double sigma) {
    if (sigma == 0.0) return {2.0 * rho, 0.0};
    const BetaJet j = p.beta(r);
    return {2.0 * rho, 2.0 * (1.0 + j.b1) * std::exp(-2.0 * (r + j.b0)) * sigma};
}

inline PhasePoint rk4_step(const WarpProfile& p, const PhasePoint& s, double dt) {
    const double sg = s.sigma_ang;
    auto [k1r, k1p] = geodesic_rhs(p, s.r, s.rho, sg);
    auto [k2r, k2p] = geodesic_rhs(p, s.r + 0.5 * dt * k1r, s.rho + 0.5 * dt * k1p, sg);
    auto [k3r, k3p] = geodesic_rhs(p, s.r + 0.5 * dt * k2r, s.rho + 0.5 * dt * k2p, sg);
    auto [k4r, k4p] = geodesic_rhs(p, s.r + dt * k3r, s.rho + dt * k3p, sg);
    return {s.r + dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r), s.rho + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p), sg};
}

inline void check_flow_args(const PhasePoint& s, double T, double dt) {
    if (!(dt > 0.0) || !(T > 0.0)) throw ParameterError("integrate needs T > 0 and dt > 0");
    if (s.sigma_ang < 0.0) throw ParameterError("sigma_ang must be >= 0");
}

}  // namespace detail

inline Trajectory integrate(const PhasePoint& s0, const WarpProfile& p, double T, double dt) {
    detail::check_flow_args(s0, T, dt);
    const long steps = static_cast<long>(std::ceil(T / dt - 1e-9));
    const double h = T / steps;
    Trajectory tr;
    tr.dt = h;
    tr.times.reserve(steps + 1);
    tr.states.reserve(steps + 1);
    tr.times.push_back(0.0);
    tr.states.push_back(s0);
    const double p0 = hamiltonian_value(s0, p);
    PhasePoint s = s0;
    for (long k = 1; k <= steps; ++k) {
        s = detail::rk4_step(p, s, h);
        tr.times.push_back(k * h);
        tr.states.push_back(s);
        tr.energy_drift = std::max(tr.energy_drift, std::abs(hamiltonian_value(s, p) - p0));
    }
    tr.accuracy_failure = tr.energy_drift > 1e-6;
    return tr;
}

struct ConvexityResult {
    double min_rddot = std::numeric_limits<double>::infinity();  // +inf when every sample was skipped
    long evaluated = 0;
    long skipped = 0;  // samples inside |r| <= R_g
};

// r'' = 4 (1 + beta') e^{-2(r+beta)} sigma on samples outside the compact region
inline ConvexityResult convexity_residual(const Trajectory& tr, const WarpProfile& p) {
    ConvexityResult c;
    for (const auto& s : tr.states) {
        if (std::abs(s.r) <= p.R_g) {
            ++c.skipped;
            continue;
        }
        const BetaJet j = p.beta(s.r);
        c.min_rddot = std::min(c.min_rddot, 4.0 * (1.0 + j.b1) * std::exp(-2.0 * (s.r + j.b0)) * s.sigma_ang);
        ++c.evaluated;
    }
    return c;
}

// max_t |atanh rhohat(t) - atanh rhohat(0) - 2 sqrt(p+1) (t + int_0^t beta')|
inline double tanh_residual(const Trajectory& tr, const WarpProfile& p) {
    if (tr.states.empty()) return 0.0;
    if (tr.states.front().sigma_ang <= 0.0) throw DomainError("tanh residual needs sigma_ang > 0");
    const double E = hamiltonian_value(tr.states.front(), p) + 1.0;
    if (!(E > 0.0)) throw DomainError("tanh residual needs p + 1 > 0");
    const double q = std::sqrt(E);
    const double a0 = std::atanh(tr.states.front().rho / q);
    double integral = 0.0, prev = p.beta(tr.states.front().r).b1, worst = 0.0;
    for (std::size_t k = 1; k < tr.states.size(); ++k) {
        const double cur = p.beta(tr.states[k].r).b1;
        integral += 0.5 * (tr.times[k] - tr.times[k - 1]) * (prev + cur);
        prev = cur;
        const double rh = tr.states[k].rho / q;
        if (std::abs(rh) >= 1.0) throw DomainError("|rhohat| reached 1");
        worst = std::max(worst, std::abs(std::atanh(rh) - a0 - 2.0 * q * (tr.times[k] + integral)));
    }
    return worst;
}

// Integrates without storing samples; stops once |r| > R_g + 10.
inline EscapeReport escape_one(const PhasePoint& s0, const WarpProfile& p, double T, double dt) {
    detail::check_flow_args(s0, T, dt);
    const double far = p.R_g + 10.0, band = 0.05;
    EscapeReport rep;
    PhasePoint s = s0;
    bool in_cusp = s.r < -p.R_g;
    rep.cusp_intervals = in_cusp ? 1 : 0;
    rep.max_abs_r = std::abs(s.r);
    const long steps = static_cast<long>(std::ceil(T / dt - 1e-9));
    const double h = T / steps;
    for (long k = 1; k <= steps; ++k) {
        s = detail::rk4_step(p, s, h);
        rep.max_abs_r = std::max(rep.max_abs_r, std::abs(s.r));
        if (in_cusp && s.r > -p.R_g + band) {
            in_cusp = false;
        } else if (!in_cusp && s.r < -p.R_g - band) {
            in_cusp = true;
            ++rep.cusp_intervals;
        }
        if (std::abs(s.r) > far) {
            rep.escaped = true;
            rep.exit_time = k * h;
            return rep;
        }
    }
    rep.exit_time = T;
    rep.trapped_flag = T >= 200.0;
    return rep;
}

inline std::vector<EscapeReport> escape_report(const std::vector<PhasePoint>& ics, const WarpProfile& p, double T,
                                               double dt, int workers = 0) {
    return parallel_map(ics, [&](const PhasePoint& s) { return escape_one(s, p, T, dt); }, workers);
}

// r uniform on [-R_g-2, R_g+2], rho on [-1,1], sigma_ang set so that p is uniform on [-0.5, 0.5]
inline std::vector<PhasePoint> random_initial_conditions(const WarpProfile& p, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ur(-p.R_g - 2.0, p.R_g + 2.0), urho(-1.0, 1.0), up(-0.5, 0.5);
    std::vector<PhasePoint> out;
    while (static_cast<int>(out.size()) < count) {
        PhasePoint s{ur(rng), urho(rng), 0.0};
        const double target = up(rng);
        const double kin = target + 1.0 - s.rho * s.rho;
        if (kin < 0.0) continue;
        s.sigma_ang = kin * std::exp(2.0 * (s.r + p.beta(s.r).b0));
        out.push_back(s);
    }
    return out;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const WarpProfile& p, int stride = 1) {
    os.precision(17);
    os << "t,r,rho,sigma_ang,p\n";
    stride = std::max(1, stride);
    for (std::size_t k = 0; k < tr.states.size(); k += stride) {
        const auto& s = tr.states[k];
        os << tr.times[k] << ',' << s.r << ',' << s.rho << ',' << s.sigma_ang << ',' << hamiltonian_value(s, p) << '\n';
    }
}

inline void write_escape_csv(std::ostream& os, const std::vector<PhasePoint>& ics, const std::vector<EscapeReport>& reps) {
    os.precision(17);
    os << "index,r0,rho0,sigma_ang,escaped,max_abs_r,cusp_intervals,trapped_flag\n";
    for (std::size_t i = 0; i < reps.size(); ++i)
        os << i << ',' << ics[i].r << ',' << ics[i].rho << ',' << ics[i].sigma_ang << ',' << (reps[i].escaped ? 1 : 0)
           << ',' << reps[i].max_abs_r << ',' << reps[i].cusp_intervals << ',' << (reps[i].trapped_flag ? 1 : 0) << '\n';
}

// b = -2 e^{-r^2}: f has a local maximum at r* = -sqrt(log 2), giving a stable circular orbit
inline WarpProfile bulge_profile(int n = 1, double R_g = 2.0) { return WarpProfile::b_profile(-2.0, 0.0, 1.0, n, R_g); }

inline PhasePoint bulge_circular_orbit(const WarpProfile& p) {
    const double rs = -std::sqrt(std::log(2.0));
    const double f = evaluate_warp(p, rs).f;
    return {rs, 0.0, f * f};  // p = 0
}

}  // namespace cusplab
