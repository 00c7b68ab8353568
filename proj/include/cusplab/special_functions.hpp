#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>

#include "common.hpp"

namespace cusplab {

// Validity domain of the Bessel series. The order bound is 64 rather than 30 so that
// the cylinder sweeps up to Re sigma = 60 stay inside it.
inline constexpr double bessel_nu_max = 64.0;
inline constexpr double bessel_z_max = 30.0;

struct BesselEval {
    cplx nu;
    cplx z;
    cplx value;
    int terms_used = 0;
    double est_error = 0.0;
};

namespace detail {

// sin(pi x) and cos(pi x) with exact argument reduction
inline double sinpi_real(double x) {
    const double n = std::round(x);
    const double f = x - n;
    const double s = std::sin(pi * f);
    return (static_cast<long long>(n) % 2 == 0) ? s : -s;
}
inline double cospi_real(double x) {
    const double n = std::round(x);
    const double f = x - n;
    const double c = std::cos(pi * f);
    return (static_cast<long long>(n) % 2 == 0) ? c : -c;
}

inline bool near_nonpositive_integer(cplx z, double tol = 1e-14) {
    if (std::abs(z.imag()) > tol) return false;
    const double n = std::round(z.real());
    return n <= 0.0 && std::abs(z.real() - n) <= tol * std::max(1.0, std::abs(n));
}

// Lanczos, g = 607/128, 15 coefficients (Godfrey). Valid for Re z >= 1/2.
inline cplx lanczos_gamma(cplx z) {
    static constexpr double g = 607.0 / 128.0;
    static constexpr std::array<double, 15> c = {
        0.99999999999999709182,     57.156235665862923517,      -59.597960355475491248,
        14.136097974741747174,      -0.49191381609762019978,    .33994649984811888699e-4,
        .46523628927048575665e-4,   -.98374475304879564677e-4,  .15808870322491248884e-3,
        -.21026444172410488319e-3,  .21743961811521264320e-3,   -.16431810653676389022e-3,
        .84418223983852743293e-4,   -.26190838401581408670e-4,  .36899182659531622704e-5};
    const cplx zz = z - 1.0;
    cplx a = c[0];
    for (int k = 1; k < 15; ++k) a += c[k] / (zz + static_cast<double>(k));
    const cplx t = zz + g + 0.5;
    const cplx lg = 0.5 * std::log(2.0 * pi) + (zz + 0.5) * std::log(t) - t + std::log(a);
    return std::exp(lg);
}

}  // namespace detail

inline cplx sinpi(cplx z) {
    return {detail::sinpi_real(z.real()) * std::cosh(pi * z.imag()),
            detail::cospi_real(z.real()) * std::sinh(pi * z.imag())};
}

inline cplx gamma_c(cplx z) {
    if (detail::near_nonpositive_integer(z)) throw PoleError("Gamma at nonpositive integer " + std::to_string(z.real()));
    if (z.real() < 0.5) return pi / (sinpi(z) * detail::lanczos_gamma(1.0 - z));
    return detail::lanczos_gamma(z);
}

// 1/Gamma, entire; exactly zero at the poles of Gamma.
inline cplx rgamma_c(cplx z) {
    if (z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::round(z.real())) return 0.0;
    if (z.real() < 0.5) return sinpi(z) * detail::lanczos_gamma(1.0 - z) / pi;
    return 1.0 / detail::lanczos_gamma(z);
}

namespace detail {

inline void check_bessel_domain(cplx nu, cplx z, double nu_slack = 0.0) {
    if (std::abs(nu) > bessel_nu_max + nu_slack || std::abs(z) > bessel_z_max || std::abs(z) == 0.0)
        throw DomainError("Bessel arguments outside |nu| <= " + std::to_string(bessel_nu_max) +
                          ", 0 < |z| <= " + std::to_string(bessel_z_max));
}

inline BesselEval bessel_i_series(cplx nu, cplx z, double tol) {
    BesselEval out{nu, z, 0.0, 0, 0.0};
    if (std::abs(nu.imag()) == 0.0 && nu.real() < 0 && nu.real() == std::round(nu.real())) nu = -nu;  // I_{-n} = I_n
    const double eps = std::numeric_limits<double>::epsilon();
    const cplx half = z / 2.0;
    const cplx q = half * half;
    cplx t = std::pow(half, nu) * rgamma_c(nu + 1.0);
    cplx sum = t;
    double abs_sum = std::abs(t);
    int k = 0;
    bool started = std::abs(t) > 0.0;
    for (; k < 1000; ++k) {
        const cplx den = static_cast<double>(k + 1) * (nu + static_cast<double>(k + 1));
        if (std::abs(den) == 0.0) {
            // crossing a pole of Gamma(nu+k+1): restart from the direct formula
            t = std::pow(half, nu + 2.0 * (k + 1)) * rgamma_c(nu + static_cast<double>(k + 2)) /
                std::tgamma(static_cast<double>(k + 2));
        } else if (!started) {
            t = std::pow(half, nu + 2.0 * (k + 1)) * rgamma_c(nu + static_cast<double>(k + 2)) /
                std::tgamma(static_cast<double>(k + 2));
        } else {
            t *= q / den;
        }
        if (std::abs(t) > 0.0) started = true;
        sum += t;
        abs_sum += std::abs(t);
        if (started && std::abs(t) < tol * std::abs(sum) && static_cast<double>(k) > std::abs(half)) break;
    }
    out.value = sum;
    out.terms_used = k + 2;
    const double pref = std::abs(nu * std::log(half)) + 1.0;
    out.est_error = 4.0 * eps * (abs_sum + pref * std::abs(sum)) + std::abs(t);
    return out;
}

inline BesselEval bessel_k_formula(cplx nu, cplx z, double tol) {
    const cplx s = sinpi(nu);
    const BesselEval im = bessel_i_series(-nu, z, tol);
    const BesselEval ip = bessel_i_series(nu, z, tol);
    BesselEval out{nu, z, pi * (im.value - ip.value) / (2.0 * s), im.terms_used + ip.terms_used, 0.0};
    out.est_error = pi * (im.est_error + ip.est_error) / (2.0 * std::abs(s));
    return out;
}

// Temme's continued fraction (Steed's method) for K_mu, K_{mu+1} with Re mu in [-1/2, 1/2),
// then upward recurrence in the order, which is stable for K. Needs Re z > 0 and |z| >~ 2.
// Returns false when the fraction does not settle (large |Im nu| relative to |z|).
inline bool bessel_k_steed(cplx nu, cplx z, BesselEval& out) {
    if (nu.real() < 0) nu = -nu;  // K_{-nu} = K_nu
    const int nl = static_cast<int>(std::floor(nu.real() + 0.5));
    const cplx mu = nu - static_cast<double>(nl);
    const double eps = std::numeric_limits<double>::epsilon();
    const cplx xi = 1.0 / z;
    cplx b = 2.0 * (1.0 + z), d = 1.0 / b, h = d, delh = d;
    cplx q1 = 0.0, q2 = 1.0;
    const cplx a1 = 0.25 - mu * mu;
    cplx q = a1, c = a1, a = -a1;
    cplx s = 1.0 + q * delh;
    int i = 1;
    bool ok = false;
    for (; i < 5000; ++i) {
        a -= 2.0 * i;
        c = -a * c / (i + 1.0);
        const cplx qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const cplx dels = q * delh;
        s += dels;
        if (!std::isfinite(std::abs(s)) || !std::isfinite(std::abs(q))) return false;
        if (i > 2 && std::abs(dels) < 0.25 * eps * std::abs(s)) {
            ok = true;
            break;
        }
    }
    if (!ok) return false;
    h = a1 * h;
    cplx kmu = std::sqrt(pi / (2.0 * z)) * std::exp(-z) / s;
    cplx k1 = kmu * (mu + z + 0.5 - h) * xi;
    for (int j = 1; j <= nl; ++j) {
        const cplx next = (mu + static_cast<double>(j)) * 2.0 * xi * k1 + kmu;
        kmu = k1;
        k1 = next;
    }
    if (!std::isfinite(std::abs(kmu))) return false;
    out.value = kmu;
    out.terms_used = i + nl;
    out.est_error = (8.0 + 2.0 * nl) * eps * std::abs(kmu);
    return true;
}

inline BesselEval bessel_k_unchecked(cplx nu, cplx z, double tol) {
    // the I-difference formula cancels like e^{2|z|} once |z| outgrows |Im nu|
    if (z.real() > 0 && std::abs(z) >= 2.0 && std::abs(z) >= 0.6 * std::abs(nu.imag()) + 1.0) {
        BesselEval out{nu, z, 0.0, 0, 0.0};
        if (bessel_k_steed(nu, z, out)) return out;
    }
    const double n = std::round(nu.real());
    const double dist = std::abs(nu - cplx(n, 0.0));
    if (dist < 1e-6) {
        const double d = 1e-5;
        const BesselEval a = bessel_k_formula(cplx(n + d, 0.0) + cplx(0.0, nu.imag()), z, tol);
        const BesselEval b = bessel_k_formula(cplx(n - d, 0.0) + cplx(0.0, nu.imag()), z, tol);
        BesselEval out{nu, z, 0.5 * (a.value + b.value), a.terms_used + b.terms_used, 0.0};
        // offset bias is O(d^2) relative to the second nu-derivative
        out.est_error = 0.5 * (a.est_error + b.est_error) + 0.5 * std::abs(a.value - b.value) * d + d * d * std::abs(out.value);
        return out;
    }
    return bessel_k_formula(nu, z, tol);
}

}  // namespace detail

inline BesselEval bessel_i(cplx nu, cplx z, double tol = 1e-16) {
    detail::check_bessel_domain(nu, z);
    return detail::bessel_i_series(nu, z, tol);
}

inline BesselEval bessel_k(cplx nu, cplx z, double tol = 1e-16) {
    detail::check_bessel_domain(nu, z);
    return detail::bessel_k_unchecked(nu, z, tol);
}

// z-derivatives from the recurrences, never by differencing.
inline cplx bessel_i_prime(cplx nu, cplx z) {
    detail::check_bessel_domain(nu, z);
    return 0.5 * (detail::bessel_i_series(nu - 1.0, z, 1e-16).value + detail::bessel_i_series(nu + 1.0, z, 1e-16).value);
}

inline cplx bessel_k_prime(cplx nu, cplx z) {
    detail::check_bessel_domain(nu, z);
    return -0.5 * (detail::bessel_k_unchecked(nu - 1.0, z, 1e-16).value + detail::bessel_k_unchecked(nu + 1.0, z, 1e-16).value);
}

// psi1 psi2' - psi1' psi2 for psi1 = I_nu(lambda e^{-r}), psi2 = K_nu(lambda e^{-r}), d/dr = -z d/dz
inline cplx wronskian_radial(cplx nu, double lambda_m, double r) {
    if (!(lambda_m > 0)) throw ParameterError("wronskian_radial needs lambda_m > 0");
    const cplx z = lambda_m * std::exp(-r);
    const cplx i0 = bessel_i(nu, z).value;
    const cplx k0 = bessel_k(nu, z).value;
    const cplx i1 = -z * bessel_i_prime(nu, z);
    const cplx k1 = -z * bessel_k_prime(nu, z);
    return i0 * k1 - i1 * k0;
}

// erf for complex argument: Maclaurin series near the origin and along the imaginary
// direction, Laplace continued fraction for erfc elsewhere.
inline cplx erf_c(cplx z) {
    if (z.imag() == 0.0) return std::erf(z.real());
    if (z.real() < 0.0) return -erf_c(-z);
    const double az = std::abs(z);
    if (az < 3.0 || (z.real() < 1.0 && az < 8.0)) {
        const cplx z2 = z * z;
        cplx term = z, sum = z;
        for (int n = 1; n < 400; ++n) {
            term *= -z2 / static_cast<double>(n);
            const cplx add = term / static_cast<double>(2 * n + 1);
            sum += add;
            if (std::abs(add) < 1e-17 * std::abs(sum)) break;
        }
        return 2.0 / std::sqrt(pi) * sum;
    }
    // erfc z = e^{-z^2}/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))), modified Lentz
    const double tiny = 1e-300;
    cplx f = z, C = z, D = 0.0;
    for (int n = 1; n < 5000; ++n) {
        const double a = 0.5 * n;
        D = z + a * D;
        if (std::abs(D) < tiny) D = tiny;
        C = z + a / C;
        if (std::abs(C) < tiny) C = tiny;
        D = 1.0 / D;
        const cplx delta = C * D;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    const cplx erfc = std::exp(-z * z) / (std::sqrt(pi) * f);
    return 1.0 - erfc;
}

}  // namespace cusplab
