#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace cusplab {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// Validation errors map to exit code 2, numerical failures to exit code 3.
class Error : public std::runtime_error {
public:
    enum class Kind { validation, numerical };
    Error(Kind k, const std::string& what) : std::runtime_error(what), kind_(k) {}
    Kind kind() const { return kind_; }
private:
    Kind kind_;
};

struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(Kind::validation, "domain error: " + w) {}
};
struct ParameterError : Error {
    explicit ParameterError(const std::string& w) : Error(Kind::validation, "parameter error: " + w) {}
};
struct UnsupportedProfile : Error {
    explicit UnsupportedProfile(const std::string& w) : Error(Kind::validation, "unsupported profile: " + w) {}
};
struct PoleError : Error {
    explicit PoleError(const std::string& w) : Error(Kind::numerical, "pole: " + w) {}
};
struct ConvergenceError : Error {
    explicit ConvergenceError(const std::string& w) : Error(Kind::numerical, "no convergence: " + w) {}
};
struct NumericalError : Error {
    explicit NumericalError(const std::string& w) : Error(Kind::numerical, w) {}
};

// C-infinity step: 0 for t <= 0, 1 for t >= 1, S(t) + S(1-t) = 1, max S' = 2.
struct SmoothStep {
    static double value(double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        const double u = 1.0 / t - 1.0 / (1.0 - t);
        return u > 0 ? std::exp(-u) / (1.0 + std::exp(-u)) : 1.0 / (1.0 + std::exp(u));
    }
    // S(1-S), evaluated without overflow
    static double bell(double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        const double u = std::abs(1.0 / t - 1.0 / (1.0 - t));
        const double e = std::exp(-u);
        return e / ((1.0 + e) * (1.0 + e));
    }
    static double d1(double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        const double g = 1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t));
        return bell(t) * g;
    }
    static double d2(double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        const double s = value(t);
        const double g = 1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t));
        const double gp = -2.0 / (t * t * t) + 2.0 / ((1.0 - t) * (1.0 - t) * (1.0 - t));
        return d1(t) * (1.0 - 2.0 * s) * g + bell(t) * gp;
    }
    // integral of S over [0, t]
    static double integral(double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return t - 0.5;
        using boost::math::quadrature::gauss;
        const int panels = 4;
        double acc = 0.0;
        for (int k = 0; k < panels; ++k) {
            const double a = t * k / panels, b = t * (k + 1) / panels;
            acc += gauss<double, 20>::integrate([](double s) { return value(s); }, a, b);
        }
        return acc;
    }
};

inline std::vector<double> linspace(double a, double b, int n) {
    if (n < 2) return {a};
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

// Worker count: CUSPLAB_WORKERS overrides the requested degree.
inline int worker_count(int requested = 0) {
    if (const char* env = std::getenv("CUSPLAB_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Results are ordered by input index regardless of completion order.
template <class T, class F>
auto parallel_map(const std::vector<T>& in, F&& fn, int workers = 0)
    -> std::vector<decltype(fn(in.front()))> {
    using R = decltype(fn(in.front()));
    std::vector<R> out(in.size());
    const int nw = std::max(1, std::min<int>(worker_count(workers), static_cast<int>(in.size())));
    if (nw <= 1) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = fn(in[i]);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= in.size()) return;
                try {
                    out[i] = fn(in[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
    return out;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // rms
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ParameterError("fit_line needs >= 2 matching points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw ParameterError("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - f.slope * x[i] - f.intercept;
        ss += e * e;
    }
    f.residual = std::sqrt(ss / n);
    return f;
}

// Counterclockwise boundary of [re0, re1] x [im0, im1], n points per side.
inline std::vector<cplx> box_contour(double re0, double re1, double im0, double im1, int n) {
    std::vector<cplx> pts;
    const cplx c[4] = {{re0, im0}, {re1, im0}, {re1, im1}, {re0, im1}};
    for (int s = 0; s < 4; ++s)
        for (int k = 0; k < n; ++k) pts.push_back(c[s] + (c[(s + 1) % 4] - c[s]) * (double(k) / n));
    return pts;
}

inline std::vector<cplx> circle_contour(cplx center, double radius, int n) {
    std::vector<cplx> pts(n);
    for (int k = 0; k < n; ++k) pts[k] = center + radius * std::polar(1.0, 2 * pi * k / n);
    return pts;
}

// Winding of f around 0 along the closed polyline `pts`. Segments whose phase step exceeds
// max_step get bisected; a zero on or near the contour ends in ConvergenceError.
template <class F>
int winding_number(F&& f, const std::vector<cplx>& pts, double max_step = 0.5, int max_depth = 24) {
    if (pts.size() < 3) throw ParameterError("contour needs >= 3 points");
    std::vector<cplx> vals(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) vals[k] = f(pts[k]);
    std::function<double(cplx, cplx, cplx, cplx, int)> seg = [&](cplx a, cplx fa, cplx b, cplx fb, int depth) -> double {
        if (fa == 0.0 || fb == 0.0) throw ConvergenceError("zero of the function on the contour");
        const double d = std::arg(fb / fa);
        if (std::abs(d) <= max_step) return d;
        if (depth >= max_depth) throw ConvergenceError("phase not resolved along contour");
        const cplx m = 0.5 * (a + b);
        const cplx fm = f(m);
        return seg(a, fa, m, fm, depth + 1) + seg(m, fm, b, fb, depth + 1);
    };
    double total = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const std::size_t j = (k + 1) % pts.size();
        total += seg(pts[k], vals[k], pts[j], vals[j], 0);
    }
    return static_cast<int>(std::lround(total / (2 * pi)));
}

}  // namespace cusplab
