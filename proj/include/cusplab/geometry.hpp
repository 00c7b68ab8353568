#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <functional>
#include <string>
#include <vector>

#include "common.hpp"
#include "special_functions.hpp"

namespace cusplab {

enum class ProfileKind { zero, funnel, gaussian_b, tabulated, custom };
enum class FiberKind { circle, torus, abstract };

struct BetaJet {
    double b0 = 0, b1 = 0, b2 = 0;  // beta, beta', beta''
};

// Warp f = e^{r + beta(r)} on the fiber bundle dr^2 + f^2 dS.
struct WarpProfile {
    int n = 1;
    double R_g = 2.0;
    double theta0 = 0.7;
    ProfileKind kind = ProfileKind::zero;

    double beta0 = 0.0;                    // funnel offset
    double amp = 0.0, center = 0.0, width = 1.0;  // gaussian b: b = amp * exp(-((r-center)/width)^2)

    std::vector<double> tab_r, tab_beta, tab_m;  // natural cubic spline, tab_m = second derivatives

    // custom: closed-form real jet, optional holomorphic jet (beta, beta', beta'')
    std::function<BetaJet(double)> custom_jet;
    std::function<std::array<cplx, 3>(cplx)> custom_jet_c;
    bool custom_is_b = false;
    std::string name = "zero";

    FiberKind fiber = FiberKind::circle;
    double fiber_length = 2.0 * pi;
    std::array<double, 2> torus_lengths{2.0 * pi, 2.0 * pi};
    std::vector<double> fiber_eigs;  // abstract fiber: sqrt-eigenvalues lambda_m

    static WarpProfile zero_profile(int n = 1, double R_g = 2.0) {
        WarpProfile p;
        p.n = n;
        p.R_g = R_g;
        return p;
    }
    static WarpProfile funnel_profile(double beta0 = 0.0, int n = 1, double R_g = 2.0) {
        WarpProfile p;
        p.kind = ProfileKind::funnel;
        p.name = "funnel";
        p.beta0 = beta0;
        p.n = n;
        p.R_g = R_g;
        return p;
    }
    static WarpProfile b_profile(double amp, double center, double width, int n = 1, double R_g = 2.0) {
        if (!(width > 0)) throw ParameterError("b-profile width must be positive");
        WarpProfile p;
        p.kind = ProfileKind::gaussian_b;
        p.name = "gaussian_b";
        p.amp = amp;
        p.center = center;
        p.width = width;
        p.n = n;
        p.R_g = R_g;
        return p;
    }
    static WarpProfile tabulated_profile(std::vector<double> r, std::vector<double> beta, int n = 1, double R_g = 2.0) {
        if (r.size() != beta.size() || r.size() < 4) throw ParameterError("tabulated profile needs >= 4 matching samples");
        for (std::size_t i = 1; i < r.size(); ++i)
            if (!(r[i] > r[i - 1])) throw ParameterError("tabulated abscissae must increase");
        WarpProfile p;
        p.kind = ProfileKind::tabulated;
        p.tab_r = std::move(r);
        p.tab_beta = std::move(beta);
        p.n = n;
        p.R_g = R_g;
        p.name = "tabulated";
        p.build_spline();
        return p;
    }
    static WarpProfile custom_profile(std::string name, std::function<BetaJet(double)> jet,
                                      std::function<std::array<cplx, 3>(cplx)> jet_c = {}, bool is_b = false,
                                      int n = 1, double R_g = 2.0) {
        WarpProfile p;
        p.kind = ProfileKind::custom;
        p.name = std::move(name);
        p.custom_jet = std::move(jet);
        p.custom_jet_c = std::move(jet_c);
        p.custom_is_b = is_b;
        p.n = n;
        p.R_g = R_g;
        return p;
    }

    bool is_b_profile() const {
        return kind == ProfileKind::zero || kind == ProfileKind::gaussian_b || (kind == ProfileKind::custom && custom_is_b);
    }
    bool is_analytic() const {
        return kind == ProfileKind::zero || kind == ProfileKind::funnel || kind == ProfileKind::gaussian_b ||
               (kind == ProfileKind::custom && static_cast<bool>(custom_jet_c));
    }

    BetaJet beta(double r) const {
        switch (kind) {
            case ProfileKind::zero: return {};
            case ProfileKind::funnel: {
                // log(1 + e^{-2r}) = -2r + log(1 + e^{2r}) for r < 0 avoids overflow
                const double l = r > 0 ? std::log1p(std::exp(-2 * r)) : -2 * r + std::log1p(std::exp(2 * r));
                const double th = std::tanh(r);
                return {beta0 + l, th - 1.0, 1.0 - th * th};
            }
            case ProfileKind::gaussian_b: {
                const double x = (r - center) / width;
                const double g = std::exp(-x * x);
                return {amp * width * std::sqrt(pi) / 2.0 * (1.0 + std::erf(x)), amp * g, -2.0 * x / width * amp * g};
            }
            case ProfileKind::tabulated: return spline_eval(r);
            case ProfileKind::custom: return custom_jet(r);
        }
        return {};
    }

    // beta at complex z; only for closed-form profiles
    cplx beta_c(cplx z) const {
        switch (kind) {
            case ProfileKind::zero: return 0.0;
            case ProfileKind::funnel:
                return z.real() > 0 ? beta0 + std::log(1.0 + std::exp(-2.0 * z))
                                    : beta0 - 2.0 * z + std::log(1.0 + std::exp(2.0 * z));
            case ProfileKind::gaussian_b:
                return amp * width * std::sqrt(pi) / 2.0 * (1.0 + erf_c((z - center) / width));
            case ProfileKind::tabulated: break;
            case ProfileKind::custom: return jet_c(z, 0);
        }
        throw UnsupportedProfile("tabulated profiles have no holomorphic extension");
    }
    cplx beta1_c(cplx z) const {
        switch (kind) {
            case ProfileKind::zero: return 0.0;
            case ProfileKind::funnel: return std::tanh(z) - 1.0;
            case ProfileKind::gaussian_b: {
                const cplx x = (z - center) / width;
                return amp * std::exp(-x * x);
            }
            case ProfileKind::tabulated: break;
            case ProfileKind::custom: return jet_c(z, 1);
        }
        throw UnsupportedProfile("tabulated profiles have no holomorphic extension");
    }
    cplx beta2_c(cplx z) const {
        switch (kind) {
            case ProfileKind::zero: return 0.0;
            case ProfileKind::funnel: {
                const cplx c = std::cosh(z);
                return 1.0 / (c * c);
            }
            case ProfileKind::gaussian_b: {
                const cplx x = (z - center) / width;
                return -2.0 * x / width * amp * std::exp(-x * x);
            }
            case ProfileKind::tabulated: break;
            case ProfileKind::custom: return jet_c(z, 2);
        }
        throw UnsupportedProfile("tabulated profiles have no holomorphic extension");
    }

    // b = beta' and b' for b-profiles
    double b(double r) const {
        if (!is_b_profile()) throw UnsupportedProfile("not a b-profile");
        return beta(r).b1;
    }
    double b_prime(double r) const {
        if (!is_b_profile()) throw UnsupportedProfile("not a b-profile");
        return beta(r).b2;
    }

    // square roots of the first `count` fiber Laplacian eigenvalues, lambda_0 = 0 first
    std::vector<double> fiber_lambdas(int count) const {
        std::vector<double> out;
        switch (fiber) {
            case FiberKind::circle:
                for (int m = 0; static_cast<int>(out.size()) < count; ++m) {
                    out.push_back(2 * pi * m / fiber_length);
                    if (m > 0 && static_cast<int>(out.size()) < count) out.push_back(2 * pi * m / fiber_length);
                }
                break;
            case FiberKind::torus: {
                const int span = count + 2;
                for (int a = -span; a <= span; ++a)
                    for (int c = -span; c <= span; ++c) {
                        const double x = 2 * pi * a / torus_lengths[0], y = 2 * pi * c / torus_lengths[1];
                        out.push_back(std::sqrt(x * x + y * y));
                    }
                std::sort(out.begin(), out.end());
                break;
            }
            case FiberKind::abstract:
                out = fiber_eigs;
                std::sort(out.begin(), out.end());
                break;
        }
        if (static_cast<int>(out.size()) > count) out.resize(count);
        return out;
    }

private:
    cplx jet_c(cplx z, int k) const {
        if (!custom_jet_c) throw UnsupportedProfile("profile '" + name + "' has no holomorphic extension");
        return custom_jet_c(z)[k];
    }
    void build_spline() {
        const std::size_t n = tab_r.size();
        tab_m.assign(n, 0.0);
        std::vector<double> a(n, 0.0), bb(n, 1.0), c(n, 0.0), d(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = tab_r[i] - tab_r[i - 1], h1 = tab_r[i + 1] - tab_r[i];
            a[i] = h0 / 6;
            bb[i] = (h0 + h1) / 3;
            c[i] = h1 / 6;
            d[i] = (tab_beta[i + 1] - tab_beta[i]) / h1 - (tab_beta[i] - tab_beta[i - 1]) / h0;
        }
        for (std::size_t i = 1; i < n; ++i) {
            const double w = a[i] / bb[i - 1];
            bb[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        tab_m[n - 1] = d[n - 1] / bb[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) tab_m[i] = (d[i] - c[i] * tab_m[i + 1]) / bb[i];
    }
    BetaJet spline_eval(double r) const {
        if (r < tab_r.front() || r > tab_r.back()) throw DomainError("r outside tabulated range");
        std::size_t i = std::upper_bound(tab_r.begin(), tab_r.end(), r) - tab_r.begin();
        i = std::min(std::max<std::size_t>(i, 1), tab_r.size() - 1) - 1;
        const double h = tab_r[i + 1] - tab_r[i];
        const double A = (tab_r[i + 1] - r) / h, B = (r - tab_r[i]) / h;
        const double y0 = tab_beta[i], y1 = tab_beta[i + 1], m0 = tab_m[i], m1 = tab_m[i + 1];
        BetaJet j;
        j.b0 = A * y0 + B * y1 + ((A * A * A - A) * m0 + (B * B * B - B) * m1) * h * h / 6;
        j.b1 = (y1 - y0) / h - (3 * A * A - 1) / 6 * h * m0 + (3 * B * B - 1) / 6 * h * m1;
        j.b2 = A * m0 + B * m1;
        return j;
    }
};

struct Warp {
    double f, f1, f2;
};

inline Warp evaluate_warp(const WarpProfile& p, double r) {
    const BetaJet j = p.beta(r);
    const double f = std::exp(r + j.b0);
    return {f, (1 + j.b1) * f, (j.b2 + (1 + j.b1) * (1 + j.b1)) * f};
}

inline double radial_curvature(const WarpProfile& p, double r) {
    const Warp w = evaluate_warp(p, r);
    return -w.f2 / w.f;
}

inline double tangential_curvature(const WarpProfile& p, double r, double Ktilde) {
    if (p.n < 2) throw DomainError("tangential curvature needs fiber dimension >= 2");
    const Warp w = evaluate_warp(p, r);
    return (Ktilde - w.f1 * w.f1) / (w.f * w.f);
}

enum class Plane { radial, tangential };

struct OracleResult {
    double K = 0.0;
    bool accuracy_warning = false;
};

namespace detail {

// Metric dr^2 + f(r)^2 (dx^2 + s(x)^2 dy^2), s the constant-curvature fiber warp.
struct WarpedMetric {
    const WarpProfile* p;
    double Kt;
    int dim;
    double s_of(double x) const {
        if (Kt > 0) return std::sin(std::sqrt(Kt) * x) / std::sqrt(Kt);
        if (Kt < 0) return std::sinh(std::sqrt(-Kt) * x) / std::sqrt(-Kt);
        return 1.0;
    }
    std::array<std::array<double, 3>, 3> g(const std::array<double, 3>& x) const {
        std::array<std::array<double, 3>, 3> m{};
        const double f = std::exp(x[0] + p->beta(x[0]).b0);
        m[0][0] = 1.0;
        m[1][1] = f * f;
        if (dim == 3) {
            const double s = s_of(x[1]);
            m[2][2] = f * f * s * s;
        }
        return m;
    }
};

template <class F>
auto fd4(F&& fn, std::array<double, 3> x, int axis, double h) {
    auto at = [&](double d) {
        auto y = x;
        y[axis] += d;
        return fn(y);
    };
    auto a = at(-2 * h), b = at(-h), c = at(h), d = at(2 * h);
    auto out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j < out[i].size(); ++j)
            if constexpr (requires { out[i][j][0]; }) {
                for (std::size_t k = 0; k < out[i][j].size(); ++k)
                    out[i][j][k] = (a[i][j][k] - 8 * b[i][j][k] + 8 * c[i][j][k] - d[i][j][k]) / (12 * h);
            } else {
                out[i][j] = (a[i][j] - 8 * b[i][j] + 8 * c[i][j] - d[i][j]) / (12 * h);
            }
    return out;
}

using Mat3 = std::array<std::array<double, 3>, 3>;
using Chr = std::array<std::array<std::array<double, 3>, 3>, 3>;  // Gamma[a][b][c] = Gamma^a_{bc}

inline Chr christoffel(const WarpedMetric& M, const std::array<double, 3>& x, double h) {
    const int d = M.dim;
    std::array<Mat3, 3> dg{};
    for (int k = 0; k < d; ++k) dg[k] = fd4([&](const std::array<double, 3>& y) { return M.g(y); }, x, k, h);
    const Mat3 g = M.g(x);
    Chr G{};
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int c = 0; c < d; ++c) {
                // diagonal metric: g^{aa} = 1/g_aa
                G[a][b][c] = 0.5 / g[a][a] * (dg[b][a][c] + dg[c][a][b] - dg[a][b][c]);
            }
    return G;
}

}  // namespace detail

// Sectional curvature from finite-difference Christoffel symbols of the warped metric,
// computed without the closed-form curvature expressions.
inline OracleResult riemann_oracle(const WarpProfile& p, double r, Plane plane, double step = 1e-3, double Ktilde = 0.0) {
    OracleResult res;
    if (step > 1e-2) res.accuracy_warning = true;
    detail::WarpedMetric M{&p, Ktilde, plane == Plane::radial ? 2 : 3};
    if (plane == Plane::tangential && p.n < 2) throw DomainError("tangential plane needs fiber dimension >= 2");
    const double x1 = Ktilde == 0.0 ? 0.3 : 0.7 / std::sqrt(std::abs(Ktilde));
    const std::array<double, 3> x{r, x1, 0.0};
    const int d = M.dim;
    auto chr = [&](const std::array<double, 3>& y) { return detail::christoffel(M, y, step); };
    const detail::Chr G = chr(x);
    std::array<detail::Chr, 3> dG{};
    for (int k = 0; k < d; ++k) dG[k] = detail::fd4(chr, x, k, step);
    // R^e_{abc} = d_a G^e_{bc} - d_b G^e_{ac} + G^f_{bc} G^e_{af} - G^f_{ac} G^e_{bf}
    auto riem = [&](int e, int a, int b, int c) {
        double v = dG[a][e][b][c] - dG[b][e][a][c];
        for (int f = 0; f < d; ++f) v += G[f][b][c] * G[e][a][f] - G[f][a][c] * G[e][b][f];
        return v;
    };
    const detail::Mat3 g = M.g(x);
    const int i = plane == Plane::radial ? 0 : 1;
    const int j = plane == Plane::radial ? 1 : 2;
    // K(e_i, e_j) = R^i_{jij} g_ii / (g_ii g_jj)
    const double Rijji = riem(i, i, j, j) * g[i][i];
    res.K = Rijji / (g[i][i] * g[j][j]);
    return res;
}

struct CurvatureReport {
    double r = 0, K_radial = 0, K_tangential = std::numeric_limits<double>::quiet_NaN(), oracle_K = 0, abs_error = 0;
};

// radial plane checked against the oracle; tangential only when n >= 2
inline CurvatureReport curvature_report(const WarpProfile& p, double r, double Ktilde = 0.0, double step = 1e-3) {
    CurvatureReport c;
    c.r = r;
    c.K_radial = radial_curvature(p, r);
    if (p.n >= 2) c.K_tangential = tangential_curvature(p, r, Ktilde);
    c.oracle_K = riemann_oracle(p, r, Plane::radial, step).K;
    c.abs_error = std::abs(c.K_radial - c.oracle_K);
    return c;
}

// min over the grid of b' + (1+b)^2
inline double nonpositivity_margin(const WarpProfile& p, double lo, double hi, int points) {
    if (!p.is_b_profile()) throw UnsupportedProfile("nonpositivity margin needs a b-profile");
    if (points < 2 || !(hi > lo)) throw ParameterError("bad grid for nonpositivity margin");
    double m = std::numeric_limits<double>::infinity();
    for (double r : linspace(lo, hi, points)) {
        const double b = p.b(r);
        m = std::min(m, p.b_prime(r) + (1 + b) * (1 + b));
    }
    return m;
}

// max over the grid of |beta'| + |beta''|; the standing assumption asks for <= 1/4
inline double beta_bound(const WarpProfile& p, const std::vector<double>& grid) {
    double m = 0.0;
    for (double r : grid) {
        const BetaJet j = p.beta(r);
        m = std::max(m, std::abs(j.b1) + std::abs(j.b2));
    }
    return m;
}

}  // namespace cusplab
