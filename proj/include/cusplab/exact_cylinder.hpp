#pragma once

#include <cmath>
#include <ostream>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"
#include "special_functions.hpp"

namespace cusplab {

struct InsufficientData : Error {
    explicit InsufficientData(const std::string& w) : Error(Kind::numerical, "insufficient data: " + w) {}
};

struct ModeKernel {
    int m = 0;
    double lambda_m = 0.0;
    cplx sigma{0.0, 1.0};
    cplx nu() const { return -I * sigma; }
};

struct CutoffWindow {
    double a = 1.0;
    std::vector<double> grid, weights, chi;

    // chi = S((a - |r|) / (a/2)): 1 on [-a/2, a/2], 0 at the ends
    static CutoffWindow make(double a, int points = 400) {
        if (!(a > 0) || points < 8) throw ParameterError("window needs a > 0 and >= 8 points");
        CutoffWindow w;
        w.a = a;
        w.grid = linspace(-a, a, points);
        const double h = w.grid[1] - w.grid[0];
        w.weights.assign(points, h);
        w.weights.front() *= 0.5;
        w.weights.back() *= 0.5;
        for (double r : w.grid) w.chi.push_back(SmoothStep::value((a - std::abs(r)) / (0.5 * a)));
        return w;
    }
};

namespace detail {
inline void check_mode(const ModeKernel& k) {
    if (k.m < 0 || k.lambda_m < 0) throw ParameterError("mode needs m >= 0 and lambda_m >= 0");
    if (k.m == 0 && k.lambda_m != 0.0) throw ParameterError("mode 0 has lambda_0 = 0");
    if (k.m > 0 && !(k.lambda_m > 0)) throw ParameterError("mode m > 0 needs lambda_m > 0");
    if (k.m == 0 && k.sigma == 0.0) throw PoleError("sigma = 0 in mode 0");
}
}  // namespace detail

// Outgoing resolvent kernel of D_r^2 + lambda^2 e^{-2r} - sigma^2.
// m = 0: -e^{i sigma |r - r'|} / (2 i sigma); m > 0: I_nu(lambda e^{-r_>}) K_nu(lambda e^{-r_<}).
inline cplx kernel_value(const ModeKernel& k, double r, double rp) {
    detail::check_mode(k);
    if (k.m == 0) return -std::exp(I * k.sigma * std::abs(r - rp)) / (2.0 * I * k.sigma);
    const double hi = std::max(r, rp), lo = std::min(r, rp);
    return bessel_i(k.nu(), k.lambda_m * std::exp(-hi)).value * bessel_k(k.nu(), k.lambda_m * std::exp(-lo)).value;
}

// Symmetrized Nystrom matrix sqrt(w_j) chi_j G(r_j, r_k) chi_k sqrt(w_k); its spectral norm is the
// L^2 operator norm of chi R chi on the window.
inline Eigen::MatrixXcd nystrom_matrix(const ModeKernel& k, const CutoffWindow& w) {
    detail::check_mode(k);
    const int n = static_cast<int>(w.grid.size());
    std::vector<double> s(n);
    for (int j = 0; j < n; ++j) s[j] = std::sqrt(w.weights[j]) * w.chi[j];
    Eigen::MatrixXcd M(n, n);
    if (k.m == 0) {
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) M(j, l) = s[j] * s[l] * kernel_value(k, w.grid[j], w.grid[l]);
        return M;
    }
    std::vector<cplx> Iv(n), Kv(n);
    for (int j = 0; j < n; ++j) {
        const double z = k.lambda_m * std::exp(-w.grid[j]);
        Iv[j] = bessel_i(k.nu(), z).value;
        Kv[j] = bessel_k(k.nu(), z).value;
    }
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
            // grid increasing: larger r has the larger index
            const int hi = std::max(j, l), lo = std::min(j, l);
            M(j, l) = s[j] * s[l] * Iv[hi] * Kv[lo];
        }
    return M;
}

// Largest singular value by power iteration on M^* M.
inline double largest_singular_value(const Eigen::MatrixXcd& M, double tol = 1e-8, int max_iter = 500) {
    std::mt19937 rng(12345);
    std::normal_distribution<double> nd;
    Eigen::VectorXcd v(M.cols());
    for (int j = 0; j < v.size(); ++j) v[j] = cplx(nd(rng), nd(rng));
    v.normalize();
    double prev = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXcd u = M * v;
        Eigen::VectorXcd w = M.adjoint() * u;
        const double est = std::sqrt(w.norm());  // ||M^*M v|| -> s^2 as v converges
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        v = w / nw;
        if (it > 0 && std::abs(est - prev) <= tol * est) return (M * v).norm();
        prev = est;
    }
    throw ConvergenceError("power iteration hit the iteration limit");
}

inline double cutoff_norm(const ModeKernel& k, const CutoffWindow& w) {
    return largest_singular_value(nystrom_matrix(k, w));
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
    double predicted = 0.0;  // 2|Im sigma| - 1
    std::vector<double> re_sigma, norms;
};

// Fit of log cutoff_norm against log|sigma| along Im sigma = const.
inline SlopeFit lower_bound_slope(int m, double lambda_m, double im_sigma, double re_min, double re_max,
                                  const CutoffWindow& w, int points = 11, int workers = 0) {
    if (m < 1) throw ParameterError("lower bound sweep uses m >= 1");
    if (points < 8) throw ParameterError("slope fit needs >= 8 sample points");
    if (!(re_max > re_min) || !(re_min > 0)) throw ParameterError("bad Re sigma range");
    const auto res = linspace(re_min, re_max, points);
    auto norms = parallel_map(
        res,
        [&](double re) {
            try {
                return cutoff_norm({m, lambda_m, cplx(re, im_sigma)}, w);
            } catch (const DomainError&) {
                return std::numeric_limits<double>::quiet_NaN();
            }
        },
        workers);
    SlopeFit f;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < res.size(); ++i) {
        if (!std::isfinite(norms[i])) continue;
        f.re_sigma.push_back(res[i]);
        f.norms.push_back(norms[i]);
        lx.push_back(std::log(std::abs(cplx(res[i], im_sigma))));
        ly.push_back(std::log(norms[i]));
    }
    if (lx.size() < 4) throw InsufficientData("fewer than 4 valid samples in the sweep");
    const LineFit lf = fit_line(lx, ly);
    f.slope = lf.slope;
    f.intercept = lf.intercept;
    f.residual = lf.residual;
    f.predicted = 2 * std::abs(im_sigma) - 1;
    return f;
}

struct ResidueReport {
    int rank = 0;
    double residue_norm = 0.0;       // L^2 operator norm of chi Res chi
    cplx mean_value{0.0, 0.0};       // average kernel entry of the residue
    double max_deviation = 0.0;      // max |Res(r, r') - i/2|
    std::vector<double> singular_values;
};

// Residue of the m = 0 resolvent at sigma = 0, (1/2 pi) int sigma R(sigma) dtheta on |sigma| = eps.
inline ResidueReport pole_residue(const CutoffWindow& w, double eps_circle = 1e-3, int circle_points = 64) {
    if (!(eps_circle > 0)) throw ParameterError("eps_circle must be positive");
    const int n = static_cast<int>(w.grid.size());
    Eigen::MatrixXcd res = Eigen::MatrixXcd::Zero(n, n);
    for (const cplx s : circle_contour(0.0, eps_circle, circle_points)) {
        const ModeKernel k{0, 0.0, s};
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) res(j, l) += s * kernel_value(k, w.grid[j], w.grid[l]);
    }
    res /= static_cast<double>(circle_points);
    ResidueReport rep;
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
            rep.mean_value += res(j, l);
            rep.max_deviation = std::max(rep.max_deviation, std::abs(res(j, l) - 0.5 * I));
        }
    rep.mean_value /= static_cast<double>(n) * n;
    Eigen::MatrixXcd weighted(n, n);
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l)
            weighted(j, l) = std::sqrt(w.weights[j]) * w.chi[j] * res(j, l) * w.chi[l] * std::sqrt(w.weights[l]);
    const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXcd>(weighted).singularValues();
    rep.residue_norm = sv[0];
    for (int j = 0; j < sv.size(); ++j) {
        rep.singular_values.push_back(sv[j]);
        if (sv[j] > 1e-6 * sv[0]) ++rep.rank;
    }
    return rep;
}

// Winding of the mode Wronskian W(sigma) = I K' - I' K (d/dr) around a box; zero means no poles inside.
inline int mode_wronskian_winding(double lambda_m, double re0, double re1, double im0, double im1, int per_side = 64,
                                  double r = 0.0) {
    auto W = [&](cplx s) { return wronskian_radial(-I * s, lambda_m, r); };
    return winding_number(W, box_contour(re0, re1, im0, im1, per_side));
}

inline void write_cylinder_csv(std::ostream& os, const SlopeFit& f, double im_sigma) {
    os.precision(17);
    os << "re_sigma,im_sigma,norm,log_norm\n";
    for (std::size_t i = 0; i < f.norms.size(); ++i)
        os << f.re_sigma[i] << ',' << im_sigma << ',' << f.norms[i] << ',' << std::log(f.norms[i]) << '\n';
}

}  // namespace cusplab
