#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <tuple>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "common.hpp"
#include "geometry.hpp"
#include "model_operators.hpp"
#include "special_functions.hpp"
#include "tridiagonal.hpp"

namespace cusplab {

struct InstabilityError : Error {
    explicit InstabilityError(const std::string& w) : Error(Kind::numerical, "shooting instability: " + w) {}
};

struct BoxAdjustmentError : Error {
    explicit BoxAdjustmentError(const std::string& w) : Error(Kind::numerical, "box boundary hits a zero: " + w) {}
};

// Compactly supported potential with known support [lo, hi].
struct CompactPotential {
    std::string name = "zero";
    std::function<double(double)> V = [](double) { return 0.0; };
    double lo = -1.0, hi = 1.0;
    bool vanishes = true;

    static CompactPotential zero() { return {}; }

    // -depth on [a, b], edges mollified by the step S over width w; support [a - w/2, b + w/2]
    static CompactPotential mollified_well(double depth, double a, double b, double w = 0.05) {
        if (!(b > a) || !(w > 0) || w >= b - a) throw ParameterError("mollified well needs b - a > w > 0");
        CompactPotential p;
        p.name = "mollified_well";
        p.V = [=](double r) {
            return -depth * (SmoothStep::value((r - a + w / 2) / w) - SmoothStep::value((r - b + w / 2) / w));
        };
        p.lo = a - w / 2;
        p.hi = b + w / 2;
        p.vanishes = depth == 0.0;
        return p;
    }

    // -depth on [0, width], discontinuous edges
    static CompactPotential square_well(double depth, double width) {
        if (!(width > 0)) throw ParameterError("square well width must be positive");
        CompactPotential p;
        p.name = "square_well";
        p.V = [=](double r) { return (r >= 0.0 && r <= width) ? -depth : 0.0; };
        p.lo = 0.0;
        p.hi = width;
        p.vanishes = depth == 0.0;
        return p;
    }

    static CompactPotential custom(std::string name, std::function<double(double)> V, double lo, double hi) {
        if (!(hi > lo)) throw ParameterError("custom potential needs hi > lo");
        CompactPotential p;
        p.name = std::move(name);
        p.V = std::move(V);
        p.lo = lo;
        p.hi = hi;
        p.vanishes = false;
        return p;
    }

    double hull_length() const { return vanishes ? 0.0 : hi - lo; }
};

// (D^2 + alpha^2 e^{-2(r+beta)} + V - sigma^2) u = 0, D = -i d/dr
struct ScatteringParams {
    double alpha = 0.0;
    WarpProfile profile = WarpProfile::zero_profile();
    CompactPotential V = CompactPotential::zero();
    double step = 2.5e-4;  // RK4 step target
};

enum class End { left, right };

struct OutgoingSolution {
    cplx sigma{0.0, 0.0};
    End end = End::right;
    std::vector<double> grid;               // in integration order
    std::vector<cplx> values, derivs;       // scaled samples
    std::vector<double> log_scales;         // true sample = scaled * exp(log_scale)
    double log_scale = 0.0;                 // at the last sample

    cplx value(std::size_t j) const { return values[j] * std::exp(log_scales[j]); }
    cplx deriv(std::size_t j) const { return derivs[j] * std::exp(log_scales[j]); }
};

// Precomputed potential samples on a uniform grid over the interaction region.
class ShootingSystem {
public:
    explicit ShootingSystem(const ScatteringParams& p) : p_(p) {
        if (p.alpha < 0) throw ParameterError("alpha must be >= 0");
        if (!(p.step > 0)) throw ParameterError("step must be positive");
        const auto& pr = p.profile;
        if (pr.kind != ProfileKind::zero && !pr.is_b_profile())
            throw ParameterError("shooting needs beta asymptotically constant (zero or b-profile)");
        a_ = p.V.lo;
        b_ = p.V.hi;
        if (p.V.vanishes && p.alpha == 0.0) {
            // exact solutions everywhere; shooting across an empty region only amplifies rounding
            a_ = b_ = 0.5 * (a_ + b_);
        }
        if (pr.kind == ProfileKind::gaussian_b && p.alpha > 0) {
            a_ = std::min(a_, pr.center - 7 * pr.width);
            b_ = std::max(b_, pr.center + 7 * pr.width);
        }
        N_ = 2 * static_cast<int>(std::ceil((b_ - a_) / p.step / 2));
        h_ = N_ > 0 ? (b_ - a_) / N_ : 0.0;
        q_.resize(2 * N_ + 1);
        // endpoint samples taken from inside so that discontinuous wells keep their edge values
        for (int k = 0; k <= 2 * N_; ++k) {
            double r = a_ + 0.5 * h_ * k;
            if (k == 0) r = std::nextafter(a_, b_ + 1.0);
            if (k == 2 * N_) r = std::nextafter(b_, a_ - 1.0);
            q_[k] = potential(std::clamp(r, a_, b_));
        }
        // alpha at the ends absorbs the constant values of beta
        lam_left_ = p.alpha * std::exp(-pr.beta(a_).b0);
        lam_right_ = p.alpha * std::exp(-pr.beta(b_).b0);
    }

    double potential(double r) const {
        double q = p_.V.V(r);
        if (p_.alpha > 0) q += p_.alpha * p_.alpha * std::exp(-2.0 * (r + p_.profile.beta(r).b0));
        return q;
    }

    double left() const { return a_; }
    double right() const { return b_; }
    double mid() const { return a_ + h_ * (N_ / 2); }
    int steps() const { return N_; }
    double spacing() const { return h_; }
    const ScatteringParams& params() const { return p_; }

    // Outgoing data: right end e^{i sigma r} (alpha = 0) or I_nu(lambda e^{-r}); left end e^{-i sigma r} or
    // K_nu(lambda e^{-r}) (decaying into the cusp). nu = -i sigma.
    // Returned as (u, u', log scale) with the true data = (u, u') e^{log scale}.
    std::tuple<cplx, cplx, double> end_data(cplx sigma, End end) const {
        const double r = end == End::left ? a_ : b_;
        if (p_.alpha == 0.0) {
            const cplx s = end == End::left ? -sigma : sigma;
            const cplx ph = I * s * r;
            const cplx e = std::exp(I * ph.imag());
            return {e, I * s * e, ph.real()};
        }
        const cplx nu = -I * sigma;
        const double z = (end == End::left ? lam_left_ : lam_right_) * std::exp(-r);
        if (end == End::left) return {bessel_k(nu, z).value, -z * bessel_k_prime(nu, z), 0.0};
        return {bessel_i(nu, z).value, -z * bessel_i_prime(nu, z), 0.0};
    }

    // RK4 from the chosen end to sample index stop (grid index 0..N), renormalizing every 50 steps.
    OutgoingSolution integrate(cplx sigma, End end, int stop) const {
        OutgoingSolution s;
        s.sigma = sigma;
        s.end = end;
        s.log_scale = std::get<2>(march(sigma, end, stop, &s));
        return s;
    }

    // W = u_L u_R' - u_L' u_R at the midpoint; alpha = 0 and V = 0 give 2 i sigma.
    cplx wronskian(cplx sigma) const {
        const int m = N_ / 2;
        auto [uL, vL, lL] = march(sigma, End::left, m);
        auto [uR, vR, lR] = march(sigma, End::right, m);
        const double ls = lL + lR;
        if (ls > 700) throw InstabilityError("Wronskian overflows (log scale " + std::to_string(ls) + ")");
        return (uL * vR - vL * uR) * std::exp(ls);
    }

private:
    std::tuple<cplx, cplx, double> march(cplx sigma, End end, int stop, OutgoingSolution* store = nullptr) const {
        auto [u, v, ls] = end_data(sigma, end);
        const int start = end == End::left ? 0 : N_;
        const int dir = end == End::left ? 1 : -1;
        const double hh = dir * h_;
        const cplx s2 = sigma * sigma;
        auto push = [&](int k) {
            if (!store) return;
            store->grid.push_back(a_ + h_ * k);
            store->values.push_back(u);
            store->derivs.push_back(v);
            store->log_scales.push_back(ls);
        };
        push(start);
        int count = 0;
        for (int k = start; k != stop; k += dir) {
            const cplx q0 = q_[2 * k] - s2, qm = q_[2 * k + dir] - s2, q1 = q_[2 * (k + dir)] - s2;
            const cplx k1u = v, k1v = q0 * u;
            const cplx k2u = v + 0.5 * hh * k1v, k2v = qm * (u + 0.5 * hh * k1u);
            const cplx k3u = v + 0.5 * hh * k2v, k3v = qm * (u + 0.5 * hh * k2u);
            const cplx k4u = v + hh * k3v, k4v = q1 * (u + hh * k3u);
            u += hh / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += hh / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            if (++count % 50 == 0) {
                const double m = std::max(std::abs(u), std::abs(v));
                if (!std::isfinite(m))
                    throw InstabilityError("non-finite solution at r = " + std::to_string(a_ + h_ * (k + dir)) +
                                           ", sigma = (" + std::to_string(sigma.real()) + ", " +
                                           std::to_string(sigma.imag()) + ")");
                if (m > 0) {
                    u /= m;
                    v /= m;
                    ls += std::log(m);
                }
            }
            push(k + dir);
        }
        return {u, v, ls};
    }

    ScatteringParams p_;
    double a_ = 0, b_ = 0, h_ = 0;
    int N_ = 0;
    double lam_left_ = 0, lam_right_ = 0;
    std::vector<double> q_;  // potential at half steps
};

inline OutgoingSolution outgoing_solution(const ScatteringParams& p, cplx sigma, End end) {
    const ShootingSystem sys(p);
    return sys.integrate(sigma, end, end == End::left ? sys.steps() : 0);
}

inline cplx wronskian_mismatch(const ScatteringParams& p, cplx sigma) { return ShootingSystem(p).wronskian(sigma); }

struct ComplexBox {
    double re0 = -1, re1 = 1, im0 = -1, im1 = 1;
    bool contains(cplx z, double tol = 0.0) const {
        return z.real() >= re0 - tol && z.real() <= re1 + tol && z.imag() >= im0 - tol && z.imag() <= im1 + tol;
    }
};

struct ResonanceList {
    std::vector<cplx> zeros;
    std::vector<int> multiplicities;
    ComplexBox box;
    int winding_total = 0;
};

namespace detail {
// Newton with a central-difference derivative; nullopt if it leaves the region or stalls.
template <class F>
std::optional<cplx> newton_zero(F&& W, cplx s, const ComplexBox& box, int max_iter = 60) {
    const double pad = 0.25 * std::max(box.re1 - box.re0, box.im1 - box.im0);
    for (int it = 0; it < max_iter; ++it) {
        const double e = 1e-6 * std::max(1.0, std::abs(s));
        const cplx f = W(s);
        if (f == 0.0) return s;
        const cplx d = (W(s + e) - W(s - e)) / (2 * e);
        if (d == 0.0 || !std::isfinite(std::abs(d))) return std::nullopt;
        const cplx ds = f / d;
        s -= ds;
        if (!box.contains(s, pad)) return std::nullopt;
        if (std::abs(ds) <= 1e-13 * std::max(1.0, std::abs(s))) return s;
    }
    return std::nullopt;
}
}  // namespace detail

// Winding number on the box boundary plus Newton-refined zeros from a seed grid.
inline ResonanceList find_in_box(const ScatteringParams& p, const ComplexBox& box, int seeds_re = 12, int seeds_im = 6,
                                 int per_side = 64, int workers = 0) {
    if (!(box.re1 > box.re0) || !(box.im1 > box.im0)) throw ParameterError("empty box");
    if (seeds_re < 1 || seeds_im < 1) throw ParameterError("seed grid must be nonempty");
    const ShootingSystem sys(p);
    auto W = [&](cplx s) { return sys.wronskian(s); };
    ResonanceList out;
    out.box = box;
    try {
        out.winding_total = winding_number(W, box_contour(box.re0, box.re1, box.im0, box.im1, per_side), pi / 2);
    } catch (const ConvergenceError& e) {
        throw BoxAdjustmentError(e.what());
    }
    for (int level = 0; level < 3; ++level) {
        const int nx = seeds_re << level, ny = seeds_im << level;
        std::vector<cplx> seeds;
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j)
                seeds.emplace_back(box.re0 + (box.re1 - box.re0) * (i + 0.5) / nx,
                                   box.im0 + (box.im1 - box.im0) * (j + 0.5) / ny);
        const auto found = parallel_map(seeds, [&](cplx s) { return detail::newton_zero(W, s, box); }, workers);
        for (const auto& z : found) {
            if (!z || !box.contains(*z)) continue;
            if (std::none_of(out.zeros.begin(), out.zeros.end(), [&](cplx c) { return std::abs(c - *z) < 1e-8; }))
                out.zeros.push_back(*z);
        }
        std::sort(out.zeros.begin(), out.zeros.end(), [](cplx a, cplx b) {
            return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
        });
        out.multiplicities.clear();
        int total = 0;
        for (std::size_t k = 0; k < out.zeros.size(); ++k) {
            double rad = 1e-3;
            for (std::size_t l = 0; l < out.zeros.size(); ++l)
                if (l != k) rad = std::min(rad, 0.4 * std::abs(out.zeros[k] - out.zeros[l]));
            const int m = winding_number(W, circle_contour(out.zeros[k], rad, 32));
            out.multiplicities.push_back(m);
            total += m;
        }
        if (total == out.winding_total) return out;
    }
    throw ConvergenceError("zeros found by Newton do not account for the boundary winding number " +
                           std::to_string(out.winding_total));
}

struct CountReport {
    std::vector<double> radii;
    std::vector<int> counts;
    double slope = 0.0, intercept = 0.0;
    double predicted = 0.0;  // (2/pi) |convex hull of supp V|
    double relative_error() const { return predicted > 0 ? slope / predicted - 1.0 : slope; }
};

// Zeros of W with 0 < |sigma| < R by the argument principle; the threshold sigma = 0 is excluded with an inner
// circle, so the free line counts 0.
inline CountReport count_in_disks(const CompactPotential& V, const std::vector<double>& radii, int points = 8000,
                                  int workers = 0) {
    if (radii.empty()) throw ParameterError("no radii");
    // the phase of W turns a few radians per unit arc; coarser circles alias silently
    for (double R : radii)
        if (points < 50.0 * R) throw ParameterError("circle of radius " + std::to_string(R) + " needs >= 50 R points");
    ScatteringParams p;
    p.V = V;
    const ShootingSystem sys(p);
    auto W = [&](cplx s) { return sys.wronskian(s); };
    double eps = 1e-4;
    int inner = 0;
    for (; eps > 1e-9; eps *= 0.1) {
        try {
            inner = winding_number(W, circle_contour(0.0, eps, 64));
            break;
        } catch (const ConvergenceError&) {
        }
    }
    CountReport rep;
    rep.radii = radii;
    rep.counts = parallel_map(
        radii,
        [&](double R) {
            if (!(R > eps)) throw ParameterError("radius must exceed the threshold circle");
            try {
                return winding_number(W, circle_contour(0.0, R, points), pi / 2) - inner;
            } catch (const ConvergenceError& e) {
                throw BoxAdjustmentError(std::string("circle of radius ") + std::to_string(R) + ": " + e.what());
            }
        },
        workers);
    rep.predicted = 2.0 / pi * V.hull_length();
    if (radii.size() >= 2) {
        std::vector<double> c(rep.counts.begin(), rep.counts.end());
        const LineFit f = fit_line(radii, c);
        rep.slope = f.slope;
        rep.intercept = f.intercept;
    }
    return rep;
}

// Negative eigenvalues -kappa^2 of D^2 + V: sign changes of the real function W(i kappa), refined by TOMS 748.
inline std::vector<double> bound_states(const CompactPotential& V) {
    ScatteringParams p;
    p.V = V;
    const ShootingSystem sys(p);
    const auto grid = linspace(V.lo, V.hi, 2001);
    double vmin = 0.0;
    for (double r : grid) vmin = std::min(vmin, V.V(r));
    if (!(vmin < 0)) return {};
    const double kmax = std::sqrt(-vmin) * 1.001;
    const int n = std::max(400, static_cast<int>(50 * kmax * (V.hi - V.lo)));
    auto f = [&](double k) { return sys.wronskian(cplx(0.0, k)).real() * std::exp(-k * (V.hi - V.lo)); };
    std::vector<double> energies;
    double k0 = kmax * 1e-6, f0 = f(k0);
    for (int i = 1; i <= n; ++i) {
        const double k1 = kmax * i / n, f1 = f(k1);
        if (f0 == 0.0) {
            energies.push_back(-k0 * k0);
        } else if ((f0 < 0) != (f1 < 0)) {
            std::uintmax_t it = 200;
            const auto br = boost::math::tools::toms748_solve(f, k0, k1, f0, f1,
                                                               boost::math::tools::eps_tolerance<double>(52), it);
            const double k = 0.5 * (br.first + br.second);
            energies.push_back(-k * k);
        }
        k0 = k1;
        f0 = f1;
    }
    std::sort(energies.begin(), energies.end());
    return energies;
}

struct ScalingOracleOptions {
    double theta = 1.0;      // rotation angle of the scaled ends
    double margin = 1.0;     // gap between supp V and the start of each ramp
    double tail = 25.0;      // scaled length beyond each ramp
    double spacing = 1e-3;   // coarsest grid; refined twice for Richardson
    double ray_gap = 0.1;    // discard eigenvalues within this angle of the rotated continuum
};

// Independent oracle: complex-scaled finite differences, eigenvalues by shift-updated inverse iteration from
// seeds sigma_seed^2, extrapolated in the spacing. Returns sigma with Re sigma >= 0 (or sigma on i(0, inf)).
inline std::vector<cplx> complex_scaling_resonances(const CompactPotential& V, const std::vector<cplx>& seeds,
                                                    ScalingOracleOptions o = {}, int workers = 0) {
    if (!(o.theta > 0 && o.theta < pi / 2)) throw ParameterError("theta must lie in (0, pi/2)");
    const double s = std::tan(o.theta);
    const ScalingContour c = contour_ramps(s, V.hi + o.margin, s, -(V.lo - o.margin));
    const double r0 = V.lo - o.margin - 1 - o.tail, r1 = V.hi + o.margin + 1 + o.tail;
    auto build = [&](double D) {
        const long N = std::lround((r1 - r0) / D) - 1;
        Tridiagonal T;
        T.diag.resize(N);
        T.sub.resize(N - 1);
        T.sup.resize(N - 1);
        for (long j = 0; j < N; ++j) {
            const double r = r0 + D * (j + 1);
            const cplx q(1.0, c.d1(r));
            const cplx c2 = -1.0 / (q * q), c1 = I * c.d2(r) / (q * q * q);
            T.diag[j] = -2.0 * c2 / (D * D) + V.V(r);
            if (j > 0) T.sub[j - 1] = c2 / (D * D) - c1 / (2 * D);
            if (j + 1 < N) T.sup[j] = c2 / (D * D) + c1 / (2 * D);
        }
        return T;
    };
    std::vector<Tridiagonal> ops;
    for (int l = 0; l < 3; ++l) ops.push_back(build(o.spacing / (1 << l)));
    // fixed-shift inverse iteration until the estimate settles, then shift updates (Rayleigh-type)
    auto refine = [](const Tridiagonal& T, cplx mu) -> std::optional<cplx> {
        const std::size_t n = T.size();
        std::vector<cplx> x(n), y(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = cplx(std::cos(0.37 * j), std::sin(0.91 * j + 0.2));
        bool fixed = true;
        cplx prev = std::numeric_limits<double>::infinity();
        std::optional<TridiagonalLU> lu;
        double last = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 60; ++it) {
            if (!fixed || !lu) lu.emplace(T, mu);
            if (lu->singular()) return mu;
            y = x;
            lu->solve(y);
            cplx xy = 0.0;
            double xx = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                xy += std::conj(x[j]) * y[j];
                xx += std::norm(x[j]);
            }
            const cplx d = xx / xy;
            const double ny = vec_norm(y);
            for (std::size_t j = 0; j < n; ++j) x[j] = y[j] / ny;
            if (fixed) {
                const cplx est = mu + d;
                if (std::abs(est - prev) <= 1e-4 * std::max(1.0, std::abs(est))) {
                    fixed = false;
                    mu = est;
                }
                prev = est;
                continue;
            }
            mu += d;
            // quadratic phase ends at the rounding floor of the nearly singular solve
            const double sc = std::max(1.0, std::abs(mu));
            if (std::abs(d) <= 1e-13 * sc || (std::abs(d) <= 1e-8 * sc && std::abs(d) >= 0.5 * last)) return mu;
            last = std::abs(d);
        }
        return std::nullopt;
    };
    // the rotated continuum sits on arg E = -2 theta; nothing genuine lies between it and the negative axis,
    // where bound states sit
    auto hidden = [&](cplx E) {
        const double a = std::arg(E);
        return a > -pi + o.ray_gap && a < -2 * o.theta + o.ray_gap;
    };
    // coarse pass from every seed, then refine the distinct survivors on the finer grids
    const auto coarse = parallel_map(seeds, [&](cplx seed) { return refine(ops[0], seed * seed); }, workers);
    std::vector<cplx> distinct;
    for (const auto& e : coarse) {
        if (!e || hidden(*e)) continue;
        if (std::none_of(distinct.begin(), distinct.end(),
                         [&](cplx c) { return std::abs(c - *e) < 1e-6 * std::max(1.0, std::abs(c)); }))
            distinct.push_back(*e);
    }
    const auto fine = parallel_map(
        distinct,
        [&](cplx e0) -> std::optional<cplx> {
            std::array<cplx, 3> E{e0, 0.0, 0.0};
            for (int l = 1; l < 3; ++l) {
                const auto e = refine(ops[l], E[l - 1]);
                if (!e) return std::nullopt;
                E[l] = *e;
            }
            if (std::abs(E[2] - E[1]) > 0.1 * std::max(1.0, std::abs(E[2]))) return std::nullopt;
            const cplx a1 = (4.0 * E[1] - E[0]) / 3.0, a2 = (4.0 * E[2] - E[1]) / 3.0;
            const cplx Ex = (16.0 * a2 - a1) / 15.0;
            if (hidden(Ex)) return std::nullopt;
            cplx sg = std::sqrt(Ex);
            if (sg.real() < 0) sg = -sg;
            // negative E: bound state on i(0, inf); anti-bound states are hidden at this angle
            if (std::abs(sg.real()) <= 1e-8 * std::abs(sg) && sg.imag() < 0) sg = -sg;
            return sg;
        },
        workers);
    std::vector<cplx> out;
    for (const auto& z : fine) {
        if (!z) continue;
        if (std::none_of(out.begin(), out.end(), [&](cplx c) { return std::abs(c - *z) < 1e-6; })) out.push_back(*z);
    }
    std::sort(out.begin(), out.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    return out;
}

inline void write_resonance_csv(std::ostream& os, const ResonanceList& l) {
    os.precision(17);
    os << "re_sigma,im_sigma,multiplicity\n";
    for (std::size_t k = 0; k < l.zeros.size(); ++k)
        os << l.zeros[k].real() << ',' << l.zeros[k].imag() << ',' << l.multiplicities[k] << '\n';
}

inline void write_count_csv(std::ostream& os, const CountReport& c) {
    os.precision(17);
    os << "radius,count,fitted_slope,predicted_slope\n";
    for (std::size_t k = 0; k < c.radii.size(); ++k)
        os << c.radii[k] << ',' << c.counts[k] << ',' << c.slope << ',' << c.predicted << '\n';
}

}  // namespace cusplab
