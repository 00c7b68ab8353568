#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"

namespace cusplab {

struct NearEigenvalueError : Error {
    cplx lambda;
    NearEigenvalueError(cplx lam, const std::string& w)
        : Error(Kind::numerical, "near-eigenvalue at lambda = (" + std::to_string(lam.real()) + ", " +
                                     std::to_string(lam.imag()) + "): " + w),
          lambda(lam) {}
};

// Complex tridiagonal matrix: sub[j] = A(j+1, j), sup[j] = A(j, j+1).
struct Tridiagonal {
    std::vector<cplx> sub, diag, sup;
    std::size_t size() const { return diag.size(); }

    std::vector<cplx> apply(const std::vector<cplx>& x) const {
        const std::size_t n = size();
        std::vector<cplx> y(n);
        for (std::size_t j = 0; j < n; ++j) {
            cplx v = diag[j] * x[j];
            if (j > 0) v += sub[j - 1] * x[j - 1];
            if (j + 1 < n) v += sup[j] * x[j + 1];
            y[j] = v;
        }
        return y;
    }
};

// LU with partial pivoting, same layout as LAPACK zgttrf (fill-in on a second superdiagonal).
class TridiagonalLU {
public:
    TridiagonalLU(const Tridiagonal& A, cplx shift = 0.0) : dl_(A.sub), d_(A.diag), du_(A.sup) {
        const std::size_t n = d_.size();
        if (n == 0) throw ParameterError("empty tridiagonal system");
        for (auto& v : d_) v -= shift;
        du2_.assign(n > 2 ? n - 2 : 0, 0.0);
        piv_.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) piv_[i] = i;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (cabs1(d_[i]) >= cabs1(dl_[i])) {
                if (d_[i] != 0.0) {
                    const cplx f = dl_[i] / d_[i];
                    dl_[i] = f;
                    d_[i + 1] -= f * du_[i];
                }
            } else {
                const cplx f = d_[i] / dl_[i];
                d_[i] = dl_[i];
                dl_[i] = f;
                const cplx t = du_[i];
                du_[i] = d_[i + 1];
                d_[i + 1] = t - f * d_[i + 1];
                if (i + 2 < n) {
                    du2_[i] = du_[i + 1];
                    du_[i + 1] = -f * du_[i + 1];
                }
                piv_[i] = i + 1;
            }
        }
        double scale = 0.0, small = std::numeric_limits<double>::infinity();
        for (const auto& v : d_) {
            scale = std::max(scale, std::abs(v));
            small = std::min(small, std::abs(v));
        }
        min_pivot_ratio_ = scale > 0 ? small / scale : 0.0;
        singular_ = !(small > 0.0);
    }

    bool singular() const { return singular_; }
    double min_pivot_ratio() const { return min_pivot_ratio_; }

    // solves A x = b in place
    void solve(std::vector<cplx>& b) const {
        const std::size_t n = d_.size();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const std::size_t ip = piv_[i];
            const cplx t = b[2 * i + 1 - ip] - dl_[i] * b[ip];
            b[i] = b[ip];
            b[i + 1] = t;
        }
        b[n - 1] /= d_[n - 1];
        if (n > 1) b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
        if (n >= 3)
            for (std::size_t i = n - 2; i-- > 0;) b[i] = (b[i] - du_[i] * b[i + 1] - du2_[i] * b[i + 2]) / d_[i];
    }

    // solves A^H x = b (conj = true) or A^T x = b in place
    void solve_adjoint(std::vector<cplx>& b, bool conj = true) const {
        const std::size_t n = d_.size();
        auto c = [conj](cplx v) { return conj ? std::conj(v) : v; };
        b[0] /= c(d_[0]);
        if (n > 1) b[1] = (b[1] - c(du_[0]) * b[0]) / c(d_[1]);
        for (std::size_t i = 2; i < n; ++i) b[i] = (b[i] - c(du_[i - 1]) * b[i - 1] - c(du2_[i - 2]) * b[i - 2]) / c(d_[i]);
        for (std::size_t i = n - 1; i-- > 0;) {
            if (piv_[i] == i) {
                b[i] -= c(dl_[i]) * b[i + 1];
            } else {
                const cplx t = b[i + 1];
                b[i + 1] = b[i] - c(dl_[i]) * t;
                b[i] = t;
            }
        }
    }

private:
    static double cabs1(cplx v) { return std::abs(v.real()) + std::abs(v.imag()); }
    std::vector<cplx> dl_, d_, du_, du2_;
    std::vector<std::size_t> piv_;
    double min_pivot_ratio_ = 0.0;
    bool singular_ = false;
};

inline double vec_norm(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

// Largest eigenvalue of a Hermitian positive semidefinite operator, apply(v) -> B v. Lanczos with full
// reorthogonalization, restarted from the top Ritz vector; converged when the Ritz residual is below tol * theta.
template <class F>
double hermitian_top_eigenvalue(F&& apply, std::size_t n, double tol = 1e-8, int max_iter = 500) {
    if (n == 0) return 0.0;
    const int m_max = static_cast<int>(std::min<std::size_t>(60, n));
    auto dot = [n](const std::vector<cplx>& a, const std::vector<cplx>& b) {
        cplx s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += std::conj(a[j]) * b[j];
        return s;
    };
    std::vector<cplx> start(n);
    for (std::size_t j = 0; j < n; ++j) start[j] = cplx(std::cos(0.7 * j + 0.3), std::sin(1.3 * j * j + 0.1));
    int used = 0;
    while (used < max_iter) {
        const double ns = vec_norm(start);
        if (ns == 0.0) return 0.0;
        std::vector<std::vector<cplx>> V;
        V.push_back(start);
        for (auto& v : V[0]) v /= ns;
        std::vector<double> alpha, beta;
        double theta = 0.0;
        Eigen::VectorXd top;
        for (int k = 0; k < m_max && used < max_iter; ++k) {
            std::vector<cplx> w = apply(V[k]);
            ++used;
            alpha.push_back(dot(V[k], w).real());
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& v : V) {
                    const cplx c = dot(v, w);
                    for (std::size_t j = 0; j < n; ++j) w[j] -= c * v[j];
                }
            const double b = vec_norm(w);
            const int m = static_cast<int>(alpha.size());
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
            for (int i = 0; i < m; ++i) {
                T(i, i) = alpha[i];
                if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            theta = std::max(0.0, es.eigenvalues()[m - 1]);
            top = es.eigenvectors().col(m - 1);
            if (b * std::abs(top[m - 1]) <= tol * theta || b <= 1e-300 || m == static_cast<int>(n)) return theta;
            beta.push_back(b);
            for (auto& v : w) v /= b;
            V.push_back(std::move(w));
        }
        std::fill(start.begin(), start.end(), cplx(0.0));
        for (int i = 0; i < top.size(); ++i)
            for (std::size_t j = 0; j < n; ++j) start[j] += top[i] * V[i][j];
    }
    throw ConvergenceError("Lanczos hit the iteration limit");
}

// ||M|| from matrix-free products with M and M^H.
template <class F, class G>
double operator_norm(F&& apply, G&& apply_adjoint, std::size_t n, double tol = 1e-8, int max_iter = 500) {
    return std::sqrt(hermitian_top_eigenvalue([&](const std::vector<cplx>& v) { return apply_adjoint(apply(v)); }, n,
                                              tol, max_iter));
}

// ||(A - shift)^{-1}|| = 1 / sigma_min, through the LU; plain inverse iteration stalls when the smallest
// singular values cluster.
inline double inverse_norm(const Tridiagonal& A, cplx shift, double tol = 1e-8, int max_iter = 500) {
    const TridiagonalLU lu(A, shift);
    if (lu.singular()) throw NearEigenvalueError(shift, "zero pivot in tridiagonal LU");
    auto B = [&](const std::vector<cplx>& v) {
        std::vector<cplx> w = v;
        lu.solve_adjoint(w);
        lu.solve(w);
        const double nw = vec_norm(w);
        if (!std::isfinite(nw) || nw > 1e28) throw NearEigenvalueError(shift, "inverse blew up");
        return w;
    };
    try {
        return std::sqrt(hermitian_top_eigenvalue(B, A.size(), tol, max_iter));
    } catch (const ConvergenceError&) {
        throw ConvergenceError("resolvent norm iteration hit the iteration limit");
    }
}

}  // namespace cusplab
