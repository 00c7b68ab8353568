#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"
#include "geometry.hpp"
#include "model_operators.hpp"
#include "tridiagonal.hpp"

namespace cusplab {

// Uniform grid r_min + j*spacing, j = 1..N; Dirichlet at both ends.
struct ModeGrid {
    double r_min = -8.0, r_max = 8.0, spacing = 0.01;
    std::vector<double> points() const {
        const long N = std::lround((r_max - r_min) / spacing) - 1;
        if (N < 3) throw ParameterError("grid has fewer than 3 interior points");
        std::vector<double> g(N);
        for (long j = 0; j < N; ++j) g[j] = r_min + spacing * (j + 1);
        return g;
    }
};

struct WavePacket {
    double r0 = 0.0, xi = 0.0, width = 1.0;
    double spacing = 0.0;
    std::vector<double> grid;
    std::vector<cplx> samples;
    double norm() const { return vec_norm(samples) * std::sqrt(spacing); }
};

// Gaussian e^{-(r-r0)^2/(2 w^2) + i xi r}, normalized on the grid.
inline WavePacket make_wave_packet(double r0, double xi, double width, const ModeGrid& g) {
    if (!(width > 0)) throw ParameterError("packet width must be positive");
    if (!(g.spacing > 0) || !(g.r_max > g.r_min)) throw ParameterError("bad grid");
    WavePacket u{r0, xi, width, g.spacing, g.points(), {}};
    u.samples.resize(u.grid.size());
    for (std::size_t j = 0; j < u.grid.size(); ++j) {
        const double d = (u.grid[j] - r0) / width;
        u.samples[j] = std::exp(-0.5 * d * d) * std::polar(1.0, xi * u.grid[j]);
    }
    const double n = u.norm();
    if (!(n > 0)) throw DomainError("wave packet lies outside the grid");
    for (auto& v : u.samples) v /= n;
    return u;
}

// H = D^2 + alpha^2 e^{-2(r + beta)} + V, second-order differences.
inline Tridiagonal mode_hamiltonian(double alpha, const WarpProfile& profile, const std::vector<double>& grid, double D) {
    const std::size_t n = grid.size();
    Tridiagonal H;
    H.diag.resize(n);
    H.sub.assign(n - 1, -1.0 / (D * D));
    H.sup.assign(n - 1, -1.0 / (D * D));
    for (std::size_t j = 0; j < n; ++j) {
        const double r = grid[j];
        double pot = potential_v(profile, r);
        if (alpha > 0) pot += alpha * alpha * std::exp(-2.0 * (r + profile.beta(r).b0));
        H.diag[j] = 2.0 / (D * D) + pot;
    }
    return H;
}

inline double expectation(const Tridiagonal& H, const std::vector<cplx>& u, double D) {
    const auto Hu = H.apply(u);
    cplx s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) s += std::conj(u[j]) * Hu[j];
    return s.real() * D;
}

struct EvolveConfig {
    double alpha = 0.0;
    WarpProfile profile = WarpProfile::zero_profile();
    double T = 1.0;
    double dt = 1e-3;
    int sample_every = 1;  // observer called every this many steps (and at t = 0, T)
};

struct ModeTrajectory {
    std::vector<double> times, norms, energies;
    WavePacket final_state;
};

struct ReflectionError : Error {
    explicit ReflectionError(const std::string& w) : Error(Kind::numerical, "domain too small: " + w) {}
};

// Crank-Nicolson for i u_t = H u; the observer sees (t, u) at the sample times.
inline ModeTrajectory evolve_mode(const WavePacket& u0, const EvolveConfig& c,
                              const std::function<void(double, const std::vector<cplx>&)>& observer = {}) {
    if (!(c.T >= 0) || !(c.dt > 0)) throw ParameterError("need T >= 0 and dt > 0");
    if (c.alpha < 0) throw ParameterError("alpha must be >= 0");
    if (c.sample_every < 1) throw ParameterError("sample_every must be >= 1");
    const double D = u0.spacing;
    if (std::abs(u0.xi) > 0 && D > pi / (8 * std::abs(u0.xi)) * (1 + 1e-12))
        throw ResolutionError("grid spacing must be <= pi/(8 xi)");
    const Tridiagonal H = mode_hamiltonian(c.alpha, c.profile, u0.grid, D);
    const std::size_t n = u0.grid.size();
    const long steps = std::lround(std::ceil(c.T / c.dt - 1e-9));
    const double dt = steps > 0 ? c.T / steps : 0.0;
    // Thomas sweep for I + i(dt/2)H: its leading minors are I + i(dt/2)H_k with H_k real symmetric,
    // so elimination without pivoting never meets a zero pivot
    const cplx a = I * (0.5 * dt);
    std::vector<cplx> inv(n), cp(n), off(n > 0 ? n - 1 : 0);
    for (std::size_t j = 0; j + 1 < n; ++j) off[j] = a * H.sub[j];
    for (std::size_t j = 0; j < n; ++j) {
        cplx d = 1.0 + a * H.diag[j];
        if (j > 0) d -= off[j - 1] * cp[j - 1];
        inv[j] = 1.0 / d;
        if (j + 1 < n) cp[j] = off[j] * inv[j];
    }
    std::vector<cplx> rhs(n);
    auto step = [&](std::vector<cplx>& u) {
        for (std::size_t j = 0; j < n; ++j) {
            cplx v = (1.0 - a * H.diag[j]) * u[j];
            if (j > 0) v -= off[j - 1] * u[j - 1];
            if (j + 1 < n) v -= off[j] * u[j + 1];
            if (j > 0) v -= off[j - 1] * rhs[j - 1];
            rhs[j] = v * inv[j];
        }
        u[n - 1] = rhs[n - 1];
        for (std::size_t j = n - 1; j-- > 0;) u[j] = rhs[j] - cp[j] * u[j + 1];
    };
    ModeTrajectory tr;
    auto edge_mass = [&](const std::vector<cplx>& u) {
        double m = 0.0;
        for (std::size_t j = 0; j < std::min<std::size_t>(2, n); ++j) m += std::norm(u[j]) + std::norm(u[n - 1 - j]);
        return m * D;
    };
    auto record = [&](double t, const std::vector<cplx>& u) {
        if (edge_mass(u) > 1e-6) throw ReflectionError("mass reached the boundary at t = " + std::to_string(t));
        tr.times.push_back(t);
        tr.norms.push_back(vec_norm(u) * std::sqrt(D));
        tr.energies.push_back(expectation(H, u, D));
        if (observer) observer(t, u);
    };
    std::vector<cplx> u = u0.samples;
    record(0.0, u);
    for (long k = 1; k <= steps; ++k) {
        step(u);
        if (k % c.sample_every == 0 || k == steps) record(k * dt, u);
    }
    tr.final_state = u0;
    tr.final_state.samples = std::move(u);
    return tr;
}

// Exact solution of i u_t = -u'' for the unnormalized Gaussian packet (width w, momentum xi, center r0).
inline cplx free_gaussian(double r, double t, double r0, double xi, double w) {
    const cplx s2 = w * w + 2.0 * I * t;
    const double d = r - r0 - 2 * xi * t;
    return w / std::sqrt(s2) * std::exp(-d * d / (2.0 * s2) + I * (xi * (r - r0) - xi * xi * t)) *
           std::polar(1.0, xi * r0);
}

// chi = S((r - lo)/ramp) S((hi - r)/ramp); none() is chi = 1.
struct SmoothingWindow {
    double lo = -1.5, hi = 1.5, ramp = 0.5;
    bool uncut = false;
    static SmoothingWindow none() { return {0, 0, 0, true}; }
    double operator()(double r) const {
        if (uncut) return 1.0;
        return SmoothStep::value((r - lo) / ramp) * SmoothStep::value((hi - r) / ramp);
    }
};

// (1 + H)^{1/2} on a window with Dirichlet ends, by dense eigendecomposition.
class HalfPower {
public:
    HalfPower(const Tridiagonal& H, std::size_t first, std::size_t count, double D) : first_(first), D_(D) {
        if (count == 0 || first + count > H.size()) throw ParameterError("window outside the grid");
        if (count > 600) throw ParameterError("half-power window limited to 600 points");
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(count, count);
        for (std::size_t i = 0; i < count; ++i) {
            M(i, i) = H.diag[first + i].real();
            if (i + 1 < count) M(i, i + 1) = M(i + 1, i) = H.sup[first + i].real();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        const Eigen::VectorXd s = (1.0 + es.eigenvalues().array()).max(0.0).sqrt();
        S_ = es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
    }
    // <w, (1 + H)^{1/2} w> for w supported in the window
    double quadratic(const std::vector<cplx>& w) const {
        const Eigen::Index n = S_.rows();
        Eigen::VectorXd a(n), b(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            a[i] = w[first_ + i].real();
            b[i] = w[first_ + i].imag();
        }
        return (a.dot(S_ * a) + b.dot(S_ * b)) * D_;
    }

private:
    std::size_t first_;
    double D_;
    Eigen::MatrixXd S_;
};

// <u, f(H) u> by Gauss quadrature from Lanczos (full reorthogonalization), f(x) = sqrt(1 + x).
inline double half_power_expectation(const Tridiagonal& H, const std::vector<cplx>& u, double D, double tol = 1e-12,
                                      int max_steps = 400) {
    const std::size_t n = u.size();
    const double nu = vec_norm(u);
    if (nu == 0.0) return 0.0;
    std::vector<std::vector<cplx>> V{u};
    for (auto& v : V[0]) v /= nu;
    std::vector<double> a, b;
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k < max_steps && k < static_cast<int>(n); ++k) {
        auto w = H.apply(V[k]);
        cplx al = 0.0;
        for (std::size_t j = 0; j < n; ++j) al += std::conj(V[k][j]) * w[j];
        a.push_back(al.real());
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& v : V) {
                cplx c = 0.0;
                for (std::size_t j = 0; j < n; ++j) c += std::conj(v[j]) * w[j];
                for (std::size_t j = 0; j < n; ++j) w[j] -= c * v[j];
            }
        const int m = static_cast<int>(a.size());
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = a[i];
            if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = b[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        double q = 0.0;
        for (int i = 0; i < m; ++i) {
            const double e = es.eigenvectors()(0, i);
            q += e * e * std::sqrt(std::max(0.0, 1.0 + es.eigenvalues()[i]));
        }
        q *= nu * nu * D;
        const double bn = vec_norm(w);
        if ((k > 4 && std::abs(q - prev) <= tol * std::abs(q)) || bn <= 1e-14 * std::abs(a.back())) return q;
        prev = q;
        b.push_back(bn);
        for (auto& v : w) v /= bn;
        V.push_back(std::move(w));
    }
    throw ConvergenceError("half-power quadrature did not settle");
}

struct SmoothingConfig {
    double alpha = 1.0;
    WarpProfile profile = WarpProfile::zero_profile();
    double T = 1.0;
    double r0 = 0.0, width = 1.0;
    SmoothingWindow chi{};
    double left_pad = 8.0;      // domain starts at r0 - left_pad
    double right_pad = 10.0;    // and ends at r0 + 3 xi T + right_pad (the barrier speeds up part of the packet)
    double max_spacing = 0.05;  // spacing min(max_spacing, pi/(8 xi))
    double phase_step = 0.25;   // dt = min(1e-2, phase_step / xi^2)
    double sample_shift = 0.05; // time samples every ~ sample_shift / (2 xi)
    int workers = 0;
};

struct SmoothingRow {
    double xi = 0.0;
    double ratio = 0.0;             // int_0^T ||chi u||_{1/2}^2 dt / ||u0||^2
    double ratio_no_cutoff = 0.0;   // same with chi = 1
    double norm_drift = 0.0;        // max | ||u(t)|| - 1 |
};

inline SmoothingRow smoothing_run(double xi, const SmoothingConfig& c) {
    if (!(xi > 0)) throw ParameterError("xi must be positive");
    if (!(c.T >= 0)) throw ParameterError("T must be >= 0");
    ModeGrid g;
    g.spacing = std::min(c.max_spacing, pi / (8 * xi));
    g.r_min = c.r0 - c.left_pad;
    g.r_max = c.r0 + 3 * xi * c.T + c.right_pad;
    const WavePacket u0 = make_wave_packet(c.r0, xi, c.width, g);
    const double D = u0.spacing;
    const Tridiagonal H = mode_hamiltonian(c.alpha, c.profile, u0.grid, D);
    SmoothingRow row;
    row.xi = xi;
    // the uncut 1/2-norm is conserved by the flow, so its time integral is T times the initial value;
    // u0 is negligible beyond 12 widths, so the quadrature runs on that stretch
    {
        std::size_t a = 0, b = u0.grid.size();
        while (a < b && u0.grid[a] < c.r0 - 12 * c.width) ++a;
        while (b > a && u0.grid[b - 1] > c.r0 + 12 * c.width) --b;
        Tridiagonal Hs;
        Hs.diag.assign(H.diag.begin() + a, H.diag.begin() + b);
        Hs.sub.assign(H.sub.begin() + a, H.sub.begin() + b - 1);
        Hs.sup.assign(H.sup.begin() + a, H.sup.begin() + b - 1);
        std::vector<cplx> us(u0.samples.begin() + a, u0.samples.begin() + b);
        row.ratio_no_cutoff = c.T * half_power_expectation(Hs, us, D);
    }
    if (c.chi.uncut) {
        row.ratio = row.ratio_no_cutoff;
        return row;
    }
    std::size_t first = 0, last = u0.grid.size();
    while (first < last && u0.grid[first] <= c.chi.lo) ++first;
    while (last > first && u0.grid[last - 1] >= c.chi.hi) --last;
    const HalfPower hp(H, first, last - first, D);
    std::vector<double> chi(u0.grid.size());
    for (std::size_t j = 0; j < chi.size(); ++j) chi[j] = c.chi(u0.grid[j]);
    EvolveConfig ec;
    ec.alpha = c.alpha;
    ec.profile = c.profile;
    ec.T = c.T;
    ec.dt = std::min(1e-2, c.phase_step / (xi * xi));
    ec.sample_every = std::max(1, static_cast<int>(std::lround(c.sample_shift / (2 * xi) / ec.dt)));
    std::vector<double> ts, vals;
    std::vector<cplx> w(u0.grid.size());
    auto tr = evolve_mode(u0, ec, [&](double t, const std::vector<cplx>& u) {
        double mass = 0.0;
        for (std::size_t j = first; j < last; ++j) {
            w[j] = chi[j] * u[j];
            mass += std::norm(w[j]);
        }
        ts.push_back(t);
        // below 1e-18 the term is under 1e-15 of the ratio
        vals.push_back(mass * D < 1e-18 ? 0.0 : hp.quadratic(w));
    });
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) acc += 0.5 * (vals[k] + vals[k + 1]) * (ts[k + 1] - ts[k]);
    row.ratio = acc;  // ||u0|| = 1
    for (double nrm : tr.norms) row.norm_drift = std::max(row.norm_drift, std::abs(nrm - 1.0));
    return row;
}

inline std::vector<SmoothingRow> smoothing_ratio(const std::vector<double>& xi_list, const SmoothingConfig& c) {
    if (xi_list.empty()) throw ParameterError("empty xi list");
    return parallel_map(xi_list, [&](double xi) { return smoothing_run(xi, c); }, c.workers);
}

inline void write_smoothing_csv(std::ostream& os, const std::vector<SmoothingRow>& rows) {
    os.precision(17);
    os << "xi,ratio,ratio_no_cutoff\n";
    for (const auto& r : rows) os << r.xi << ',' << r.ratio << ',' << r.ratio_no_cutoff << '\n';
}

}  // namespace cusplab
