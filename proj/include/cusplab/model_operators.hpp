#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "common.hpp"
#include "geometry.hpp"
#include "tridiagonal.hpp"

namespace cusplab {

struct ResolutionError : Error {
    explicit ResolutionError(const std::string& w) : Error(Kind::validation, "resolution error: " + w) {}
};

enum class Side { cusp, funnel };

inline const char* side_name(Side s) { return s == Side::cusp ? "cusp" : "funnel"; }

// cusp: W_C = S((r + R_g)/R_g), 0 for r <= -R_g, 1 for r >= 0
// funnel: W_F = 1 - S(r/R_g), 1 for r <= 0, 0 for r >= R_g
struct AbsorbingProfile {
    Side side = Side::funnel;
    double R_g = 2.0;
    double W(double r) const {
        return side == Side::cusp ? SmoothStep::value((r + R_g) / R_g) : 1.0 - SmoothStep::value(r / R_g);
    }
    double dW(double r) const {
        return side == Side::cusp ? SmoothStep::d1((r + R_g) / R_g) / R_g : -SmoothStep::d1(r / R_g) / R_g;
    }
};

inline AbsorbingProfile absorbing_profile(Side side, double R_g) {
    if (!(R_g > 0)) throw ParameterError("absorber needs R_g > 0");
    return {side, R_g};
}

// gamma = c S(r - R) + s_right Sint(r - a_right) - s_left Sint(-r - a_left), so gamma' >= 0 everywhere.
struct ScalingContour {
    std::string kind = "none";
    double delta = 0.0, theta0 = 0.7;
    double R = 0.0;
    double R_alpha = std::numeric_limits<double>::quiet_NaN();
    double plateau = 0.0;                 // c
    double s_right = 0.0, a_right = 0.0;  // right slope ramp
    double s_left = 0.0, a_left = 0.0;    // left slope ramp

    double gamma(double r) const {
        double g = 0.0;
        if (plateau != 0.0) g += plateau * SmoothStep::value(r - R);
        if (s_right != 0.0) g += s_right * SmoothStep::integral(r - a_right);
        if (s_left != 0.0) g -= s_left * SmoothStep::integral(-r - a_left);
        return g;
    }
    double d1(double r) const {
        double g = 0.0;
        if (plateau != 0.0) g += plateau * SmoothStep::d1(r - R);
        if (s_right != 0.0) g += s_right * SmoothStep::value(r - a_right);
        if (s_left != 0.0) g += s_left * SmoothStep::value(-r - a_left);
        return g;
    }
    double d2(double r) const {
        double g = 0.0;
        if (plateau != 0.0) g += plateau * SmoothStep::d2(r - R);
        if (s_right != 0.0) g += s_right * SmoothStep::d1(r - a_right);
        if (s_left != 0.0) g -= s_left * SmoothStep::d1(-r - a_left);
        return g;
    }
    bool trivial() const { return plateau == 0.0 && s_right == 0.0 && s_left == 0.0; }
};

inline ScalingContour no_contour() { return {}; }

// Unrestricted ramp builder: slope s for r >= a (right) and/or r <= -a (left).
inline ScalingContour contour_ramps(double s_right, double a_right, double s_left, double a_left) {
    if (s_right < 0 || s_left < 0) throw ParameterError("contour slopes must be >= 0");
    ScalingContour c;
    c.kind = "ramps";
    c.s_right = s_right;
    c.a_right = a_right;
    c.s_left = s_left;
    c.a_left = a_left;
    return c;
}

// gamma = delta * gamma_-, gamma_-' = tan(theta0) past R_minus + 1; the cusp side mirrors to r <= -R_minus.
inline ScalingContour contour_small_alpha(double delta, double R_minus, double theta0, Side side) {
    if (!(delta > 0 && delta <= 0.1)) throw ParameterError("small-alpha contour needs 0 < delta <= 0.1");
    if (!(theta0 > 0 && theta0 < pi / 4)) throw ParameterError("theta0 must lie in (0, pi/4)");
    const double s = delta * std::tan(theta0);
    ScalingContour c = side == Side::funnel ? contour_ramps(s, R_minus, 0.0, 0.0) : contour_ramps(0.0, 0.0, s, R_minus);
    c.kind = std::string("small_alpha_") + side_name(side);
    c.delta = delta;
    c.theta0 = theta0;
    c.R = R_minus;
    return c;
}

// alpha_0^2 e^{-2(R+1)} e^{-2 max|Re beta|} = 8
inline double alpha0(double R, double max_re_beta) { return std::sqrt(8.0) * std::exp(R + 1.0 + max_re_beta); }

// alpha^2 e^{-2 R_alpha} e^{2 max|Re beta|} = min{1/4, tan(theta0)/2}
inline double r_alpha(double alpha, double theta0, double max_re_beta) {
    const double ct = std::min(0.25, std::tan(theta0) / 2.0);
    return std::log(alpha * std::exp(max_re_beta) / std::sqrt(ct));
}

// Plateau pi/14 switched on over [R, R+1], slope min{1/2, tan theta0} from R_alpha on.
// pi/14 keeps gamma' <= 1/2 on the switch-on (max S' = 2) and the plateau inside [pi/18, pi/6].
inline ScalingContour contour_large_alpha(double alpha, double theta0, double R, double max_re_beta) {
    if (!(theta0 > 0 && theta0 < pi / 4)) throw ParameterError("theta0 must lie in (0, pi/4)");
    const double a0 = alpha0(R, max_re_beta);
    if (alpha < a0)
        throw ParameterError("alpha = " + std::to_string(alpha) + " below alpha_0 = " + std::to_string(a0) +
                             "; use contour_small_alpha");
    ScalingContour c;
    c.kind = "large_alpha";
    c.theta0 = theta0;
    c.R = R;
    c.R_alpha = r_alpha(alpha, theta0, max_re_beta);
    c.plateau = pi / 14.0;
    c.s_right = std::min(0.5, std::tan(theta0));
    c.a_right = c.R_alpha - 1.0;
    return c;
}

// max |Re beta| over [R, r_max] on the real line and on the sector edge r + i min(tan(theta0)(r-R), pi/6 + (r-R)/2)
inline double max_re_beta(const WarpProfile& p, double R, double r_max, double theta0, int points = 400) {
    if (!p.is_analytic()) throw UnsupportedProfile("contour deformation needs a holomorphic profile");
    double m = 0.0;
    for (double r : linspace(R, r_max, points)) {
        m = std::max(m, std::abs(p.beta_c(r).real()));
        const double y = std::min(std::tan(theta0) * (r - R), pi / 6.0 + 0.5 * (r - R));
        m = std::max(m, std::abs(p.beta_c(cplx(r, y)).real()));
    }
    return m;
}

// V = (n/2) beta'' + (n^2/2) beta' + (n^2/4) beta'^2
inline double potential_v(const WarpProfile& p, double r) {
    const BetaJet j = p.beta(r);
    const double n = p.n;
    return 0.5 * n * j.b2 + 0.5 * n * n * j.b1 + 0.25 * n * n * j.b1 * j.b1;
}

inline cplx potential_v_c(const WarpProfile& p, cplx z) {
    const cplx b1 = p.beta1_c(z), b2 = p.beta2_c(z);
    const double n = p.n;
    return 0.5 * n * b2 + 0.5 * n * n * b1 + 0.25 * n * n * b1 * b1;
}

struct GridSpec {
    double r_min = -10.0, r_max = 10.0;
    double spacing = 0.0;  // 0 -> h/16
};

struct DiscreteOperator {
    std::vector<double> grid;  // interior points; Dirichlet at r_min, r_max
    double spacing = 0.0, h = 0.0, alpha = 0.0;
    Tridiagonal A;
    std::string metadata;
    std::size_t size() const { return grid.size(); }
};

struct AssembleOptions {
    bool include_v = true;
    bool absorb = true;  // false: W = 0 (the operator P itself)
};

// P = h^2 D_z^2 + potential - 1 - i W along z = r + i gamma(r), Dirichlet ends.
// h^2 D_z^2 u = -h^2 u'' / q^2 + i h^2 gamma'' u' / q^3, q = 1 + i gamma'.
// Funnel potential alpha^2 (1 - W_F) e^{-2(z + beta(z))}; cusp potential alpha^2 e^{-2(z + beta(z))}.
inline DiscreteOperator assemble(double alpha, double h, const ScalingContour& contour, const AbsorbingProfile& absorber,
                                 const WarpProfile& profile, const GridSpec& gs, AssembleOptions opt = {}) {
    if (!(h > 0)) throw ParameterError("h must be positive");
    if (alpha < 0) throw ParameterError("alpha must be >= 0");
    if (!(gs.r_max > gs.r_min)) throw ParameterError("empty grid");
    const double D0 = gs.spacing > 0 ? gs.spacing : h / 16.0;
    if (D0 > h / 10.0 * (1 + 1e-12)) throw ResolutionError("grid spacing must be <= h/10");
    const bool complexify = !contour.trivial();
    if (complexify && !profile.is_analytic())
        throw UnsupportedProfile("profile '" + profile.name + "' cannot be continued along a scaling contour");
    const long N = std::lround((gs.r_max - gs.r_min) / D0) - 1;
    if (N < 3) throw ParameterError("grid has fewer than 3 interior points");
    const double D = (gs.r_max - gs.r_min) / (N + 1);
    DiscreteOperator op;
    op.spacing = D;
    op.h = h;
    op.alpha = alpha;
    op.metadata = std::string("contour=") + contour.kind + ";absorber=" + (opt.absorb ? side_name(absorber.side) : "none") +
                  ";profile=" + profile.name;
    op.grid.resize(N);
    op.A.diag.resize(N);
    op.A.sub.resize(N - 1);
    op.A.sup.resize(N - 1);
    std::vector<cplx> lo(N), up(N);
    const double h2 = h * h;
    for (long j = 0; j < N; ++j) {
        const double r = gs.r_min + D * (j + 1);
        op.grid[j] = r;
        const double g = complexify ? contour.gamma(r) : 0.0;
        const double g1 = complexify ? contour.d1(r) : 0.0;
        const double g2 = complexify ? contour.d2(r) : 0.0;
        const cplx z(r, g);
        const cplx q(1.0, g1);
        const cplx c2 = -h2 / (q * q);
        const cplx c1 = I * h2 * g2 / (q * q * q);
        const double W = opt.absorb ? absorber.W(r) : 0.0;
        cplx pot = 0.0;
        if (alpha > 0) {
            const cplx beta = complexify ? profile.beta_c(z) : cplx(profile.beta(r).b0, 0.0);
            const cplx e = std::exp(-2.0 * (z + beta));
            pot = alpha * alpha * e * (absorber.side == Side::funnel ? 1.0 - W : 1.0);
        }
        if (opt.include_v) pot += h2 * (complexify ? potential_v_c(profile, z) : cplx(potential_v(profile, r), 0.0));
        lo[j] = c2 / (D * D) - c1 / (2 * D);
        up[j] = c2 / (D * D) + c1 / (2 * D);
        op.A.diag[j] = -2.0 * c2 / (D * D) + pot - 1.0 - I * W;
    }
    for (long j = 0; j + 1 < N; ++j) {
        op.A.sub[j] = lo[j + 1];
        op.A.sup[j] = up[j];
    }
    return op;
}

inline double resolvent_norm(const DiscreteOperator& op, cplx lambda, double tol = 1e-8, int max_iter = 500) {
    return inverse_norm(op.A, lambda, tol, max_iter);
}

struct SemiclassicalMap {
    cplx sigma;
    double alpha;
    bool branch_point;
};

// sigma = sqrt(1 + lambda)/h (principal branch), alpha = h lambda_m with lambda_m = 2 pi m / l
inline SemiclassicalMap semiclassical_map(cplx lambda, double h, int m, double fiber_length = 2 * pi) {
    if (!(h > 0)) throw ParameterError("h must be positive");
    if (m < 0 || !(fiber_length > 0)) throw ParameterError("need m >= 0 and a positive fiber length");
    const cplx w = 1.0 + lambda;
    return {std::sqrt(w) / h, h * 2 * pi * m / fiber_length, std::abs(w) == 0.0};
}

struct Rescaled {
    double r_tilde, h_tilde, scale;
};

inline Rescaled rescale_vars(double r, double h, double alpha, double alpha_0) {
    if (!(alpha > 0) || !(alpha_0 > 0)) throw ParameterError("rescaling needs alpha, alpha_0 > 0");
    const double L = std::log(2 * alpha_0 / alpha);
    if (!(L > 0)) throw DomainError("rescaling needs alpha < 2 alpha_0");
    return {r / L, h / L, L};
}

inline std::pair<double, double> unscale_vars(double r_tilde, double h_tilde, double alpha, double alpha_0) {
    const double L = rescale_vars(0.0, 1.0, alpha, alpha_0).scale;
    return {r_tilde * L, h_tilde * L};
}

// ---- strip sweeps ----

struct SweepConfig {
    std::vector<double> alphas{0.0};
    std::vector<double> hs{0.1, 0.05, 0.025};
    double E = 0.5;
    double Gamma = 1.0;
    int re_points = 5;     // Re lambda samples on [-E, E]
    int depth_points = 6;  // Im lambda samples on [-Gamma h, 0]
    double fit_re = 0.0;   // Re lambda at which C0 is fitted
    WarpProfile profile = WarpProfile::zero_profile();
    double R_g = 2.0;
    double theta0 = 0.7;
    double delta = 0.1;
    double R_minus_offset = 4.0;  // R_- = R_g + offset
    double margin = 12.0;         // domain [-R_g - margin, R_g + margin]
    double spacing_ratio = 16.0;  // Delta = h / ratio
    int workers = 0;
};

struct SweepResult {
    double alpha = 0.0, h = 0.0, Gamma_depth = 0.0;
    std::vector<cplx> lambda_grid;
    std::vector<double> norms;
    double fitted_C0 = std::numeric_limits<double>::quiet_NaN();
    double fit_residual = std::numeric_limits<double>::quiet_NaN();
    double fit_re = 0.0;
    double h_norm_real = 0.0;  // sup over Re lambda of h * norm on the real axis
    std::string contour_kind;
};

inline ScalingContour sweep_contour(const SweepConfig& c, double alpha) {
    const double M = c.profile.kind == ProfileKind::zero ? 0.0
                                                          : max_re_beta(c.profile, c.R_g, c.R_g + c.margin, c.theta0);
    if (alpha >= alpha0(c.R_g, M)) return contour_large_alpha(alpha, c.theta0, c.R_g, M);
    return contour_small_alpha(c.delta, c.R_g + c.R_minus_offset, c.theta0, Side::funnel);
}

inline DiscreteOperator sweep_operator(const SweepConfig& c, double alpha, double h) {
    return assemble(alpha, h, sweep_contour(c, alpha), absorbing_profile(Side::funnel, c.R_g), c.profile,
                    {-c.R_g - c.margin, c.R_g + c.margin, h / c.spacing_ratio});
}

// Funnel model P(alpha): norms over lambda in [-E, E] - i[0, Gamma h]; C0 is the slope of
// log norm against |Im lambda|/h at Re lambda = fit_re.
inline std::vector<SweepResult> strip_sweep(const SweepConfig& c) {
    if (!(c.E > 0 && c.E < 1)) throw ParameterError("E must lie in (0, 1)");
    if (!(c.Gamma > 0)) throw ParameterError("Gamma must be positive");
    if (c.re_points < 1 || c.depth_points < 2) throw ParameterError("sweep needs re_points >= 1, depth_points >= 2");
    struct Cell {
        std::size_t ia, ih;
    };
    std::vector<Cell> cells;
    for (std::size_t ia = 0; ia < c.alphas.size(); ++ia)
        for (std::size_t ih = 0; ih < c.hs.size(); ++ih) cells.push_back({ia, ih});
    auto ops = parallel_map(cells, [&](const Cell& k) { return sweep_operator(c, c.alphas[k.ia], c.hs[k.ih]); }, c.workers);

    std::vector<double> res = c.re_points == 1 ? std::vector<double>{c.fit_re} : linspace(-c.E, c.E, c.re_points);
    bool has_fit_re = false;
    for (double x : res) has_fit_re = has_fit_re || std::abs(x - c.fit_re) < 1e-12;
    if (!has_fit_re) res.push_back(c.fit_re);
    const auto ts = linspace(0.0, c.Gamma, c.depth_points);

    struct Task {
        std::size_t cell;
        cplx lambda;
    };
    std::vector<Task> tasks;
    std::vector<SweepResult> out(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const double h = c.hs[cells[k].ih];
        out[k].alpha = c.alphas[cells[k].ia];
        out[k].h = h;
        out[k].Gamma_depth = c.Gamma;
        out[k].fit_re = c.fit_re;
        out[k].contour_kind = sweep_contour(c, out[k].alpha).kind;
        for (double re : res)
            for (double t : ts) {
                out[k].lambda_grid.push_back(cplx(re, -t * h));
                tasks.push_back({k, cplx(re, -t * h)});
            }
    }
    auto norms = parallel_map(tasks, [&](const Task& t) { return resolvent_norm(ops[t.cell], t.lambda); }, c.workers);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        auto& s = out[k];
        std::vector<double> lx, ly;
        for (const cplx lam : s.lambda_grid) {
            const double n = norms[pos++];
            s.norms.push_back(n);
            if (lam.imag() == 0.0) s.h_norm_real = std::max(s.h_norm_real, s.h * n);
            if (std::abs(lam.real() - c.fit_re) < 1e-12) {
                lx.push_back(-lam.imag() / s.h);
                ly.push_back(std::log(n));
            }
        }
        if (lx.size() >= 6) {
            const LineFit f = fit_line(lx, ly);
            s.fitted_C0 = f.slope;
            s.fit_residual = f.residual;
        }
    }
    return out;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepResult>& rs) {
    os.precision(17);
    os << "alpha,h,re_lambda,im_lambda,norm,h_times_norm\n";
    for (const auto& s : rs)
        for (std::size_t i = 0; i < s.norms.size(); ++i)
            os << s.alpha << ',' << s.h << ',' << s.lambda_grid[i].real() << ',' << s.lambda_grid[i].imag() << ','
               << s.norms[i] << ',' << s.h * s.norms[i] << '\n';
}

}  // namespace cusplab
