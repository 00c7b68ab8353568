#pragma once

// The ten end-to-end checks, shared by the acceptance binary and `cusplab repro-all`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "applications.hpp"
#include "exact_cylinder.hpp"
#include "geodesic_flow.hpp"
#include "geometry.hpp"
#include "gluing_lab.hpp"
#include "model_operators.hpp"
#include "resonance_finder.hpp"
#include "special_functions.hpp"

namespace cusplab::acceptance {

struct Criterion {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
    double budget = 0.0;  // seconds
};

namespace detail {

inline double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline std::string fmt(double x, int prec = 3) {
    std::ostringstream os;
    os.precision(prec);
    os << x;
    return os.str();
}

// energies of -V0 on [0, a] from (k^2 - kappa^2) sin(ka) = 2 k kappa cos(ka), k^2 = V0 - kappa^2
inline std::vector<double> square_well_energies(double V0, double a) {
    auto F = [&](double kap) {
        const double k = std::sqrt(V0 - kap * kap);
        return (k * k - kap * kap) * std::sin(k * a) - 2 * k * kap * std::cos(k * a);
    };
    std::vector<double> out;
    const int n = 20000;
    const double top = std::sqrt(V0);
    for (int i = 0; i < n; ++i) {
        double lo = top * (i + 1e-9) / n, hi = top * (i + 1) / n * (1 - 1e-15);
        double flo = F(lo);
        if ((flo < 0) == (F(hi) < 0)) continue;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi), fm = F(mid);
            if ((fm < 0) == (flo < 0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        const double k = 0.5 * (lo + hi);
        out.push_back(-k * k);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace detail

// 1. analytic curvature against the metric-differentiating oracle
inline Criterion curvature(int = 0) {
    Criterion c{1, "curvature oracle", true, "", 0, 5};
    std::vector<double> r_tab, b_tab;
    for (double x : linspace(-5, 5, 201)) {
        r_tab.push_back(x);
        b_tab.push_back(0.2 * std::sin(x));
    }
    const std::vector<WarpProfile> ps{WarpProfile::zero_profile(), WarpProfile::funnel_profile(),
                                      WarpProfile::b_profile(-0.3, 0.2, 0.7), WarpProfile::b_profile(0.4, -0.5, 1.5),
                                      WarpProfile::tabulated_profile(r_tab, b_tab)};
    double worst = 0.0;
    for (const auto& p : ps)
        for (double r : linspace(-3, 3, 50)) worst = std::max(worst, detail::rel(riemann_oracle(p, r, Plane::radial).K,
                                                                                  radial_curvature(p, r)));
    bool rejected = false;
    try {
        (void)ps.back().beta_c(cplx(0.1, 0.1));
    } catch (const UnsupportedProfile&) {
        rejected = true;
    }
    c.pass = worst < 1e-6 && rejected;
    c.detail = "max rel err " + detail::fmt(worst) + " over 5x50 points; tabulated complex continuation " +
               (rejected ? "rejected" : "NOT rejected");
    return c;
}

// 2. escape of random geodesics, tanh identity, trapped bulge orbit
inline Criterion dynamics(int workers = 0) {
    Criterion c{2, "nontrapping dynamics", true, "", 0, 30};
    const auto z = WarpProfile::zero_profile();
    const auto ics = random_initial_conditions(z, 100, 2024);
    const auto reps = escape_report(ics, z, 200.0, 1e-3, workers);
    int escaped = 0, bad_cusp = 0;
    for (const auto& r : reps) {
        escaped += r.escaped;
        bad_cusp += r.cusp_intervals > 1;
    }
    double tanh_worst = 0.0;
    int tanh_runs = 0;
    for (const auto& s : ics) {
        if (s.sigma_ang <= 0 || tanh_runs >= 10) continue;
        tanh_worst = std::max(tanh_worst, tanh_residual(integrate(s, z, 3.0, 1e-4), z));
        ++tanh_runs;
    }
    const auto bulge = bulge_profile();
    const auto trap = escape_report({bulge_circular_orbit(bulge)}, bulge, 200.0, 1e-3);
    c.pass = escaped == 100 && bad_cusp == 0 && tanh_worst < 1e-6 && trap[0].trapped_flag;
    c.detail = std::to_string(escaped) + "/100 escaped, " + std::to_string(bad_cusp) + " with >1 cusp interval; tanh residual " +
               detail::fmt(tanh_worst) + " (" + std::to_string(tanh_runs) + " runs, dt=1e-4); bulge trapped=" +
               (trap[0].trapped_flag ? "yes" : "no");
    return c;
}

// 3. Wronskian, recurrence and half-integer closed forms
inline Criterion bessel(int = 0) {
    Criterion c{3, "Bessel identities", true, "", 0, 5};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> re(-1, 3), im(-8, 8), lam(0.2, 3), rr(-0.3, 1.5);
    double w_worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const cplx nu(re(rng), im(rng));
        const double l = lam(rng), r = rr(rng);
        w_worst = std::max(w_worst, std::abs(wronskian_radial(nu, l, r) - 1.0));
    }
    std::uniform_real_distribution<double> re2(-4, 4), im2(-20, 20), zz(0.1, 8);
    double rec_worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const cplx nu(re2(rng), im2(rng));
        const double z = zz(rng);
        const cplx lhs = bessel_i(nu - 1.0, z).value - bessel_i(nu + 1.0, z).value;
        const cplx rhs = 2.0 * nu / z * bessel_i(nu, z).value;
        rec_worst = std::max(rec_worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
    double half_worst = 0.0;
    for (double z : {0.3, 1.0, 4.0, 9.0, 20.0}) {
        const double s = std::sqrt(2.0 / (pi * z));
        const double ip = s * std::sinh(z), im_ = s * std::cosh(z), k = std::sqrt(pi / (2 * z)) * std::exp(-z);
        half_worst = std::max({half_worst, std::abs(bessel_i(0.5, z).value - ip) / ip,
                               std::abs(bessel_i(-0.5, z).value - im_) / im_, std::abs(bessel_k(0.5, z).value - k) / k});
    }
    c.pass = w_worst < 1e-10 && rec_worst < 1e-10 && half_worst < 1e-10;
    c.detail = "Wronskian " + detail::fmt(w_worst) + " (200 samples), recurrence " + detail::fmt(rec_worst) +
               ", half-integer " + detail::fmt(half_worst);
    return c;
}

// 4. log cutoff norm vs log|sigma| slopes on the exact cylinder
inline Criterion lower_bound(int workers = 0) {
    Criterion c{4, "lower-bound slopes", true, "", 0, 60};
    const auto w = CutoffWindow::make(1.0, 400);
    for (double ims : {0.0, -0.25, -0.5, -1.0}) {
        const auto f = lower_bound_slope(1, 1.0, ims, 10.0, 60.0, w, 11, workers);
        const bool ok = std::abs(f.slope - f.predicted) <= 0.15;
        c.pass = c.pass && ok;
        c.detail += "Im=" + detail::fmt(ims) + ": " + detail::fmt(f.slope, 4) + " vs " + detail::fmt(f.predicted) + "; ";
    }
    return c;
}

// 5. m = 0 residue and m = 1 winding
inline Criterion poles(int = 0) {
    Criterion c{5, "pole structure", true, "", 0, 10};
    const auto rep = pole_residue(CutoffWindow::make(1.0, 120));
    const int wind = mode_wronskian_winding(1.0, -5, 5, -2, -0.1);
    const double dev = std::max(rep.max_deviation, std::abs(rep.mean_value - 0.5 * I));
    c.pass = rep.rank == 1 && dev < 1e-6 && wind == 0;
    c.detail = "rank " + std::to_string(rep.rank) + ", max |Res - i/2| " + detail::fmt(dev) + ", m=1 winding " +
               std::to_string(wind);
    return c;
}

// 6. counting law, support doubling, shooting vs complex scaling
inline Criterion counting(int workers = 0) {
    Criterion c{6, "resonance counting", true, "", 0, 180};
    const std::vector<double> radii{20, 25, 30, 35, 40};
    const auto one = count_in_disks(CompactPotential::mollified_well(1.0, 0.0, 1.0), radii, 8000, workers);
    const auto two = count_in_disks(CompactPotential::mollified_well(1.0, 0.0, 2.0), radii, 8000, workers);
    const bool slope_ok = std::abs(one.slope / one.predicted - 1) <= 0.15;
    const bool double_ok = std::abs(two.slope / one.slope / 2 - 1) <= 0.15;
    // oracle agreement on the criterion well and on a deeper, wider well with resonances in range
    double worst = 0.0;
    int compared = 0;
    struct Case {
        CompactPotential V;
        ComplexBox box;
    };
    const std::vector<Case> cases{{CompactPotential::mollified_well(1.0, 0.0, 1.0), {-10, 10, -3, 1.5}},
                                  {CompactPotential::mollified_well(4.0, 0.0, 2.0), {-10, 10, -2, 2.5}}};
    for (const auto& cs : cases) {
        ScatteringParams p;
        p.V = cs.V;
        const auto l = find_in_box(p, cs.box, 20, 10, 64, workers);
        std::vector<cplx> seeds;
        for (int i = 0; i <= 10; ++i)
            for (int j = 0; j <= 5; ++j) seeds.emplace_back(1.0 * i, cs.box.im0 - 1 + 0.8 * j);
        seeds.emplace_back(0.0, 0.5);
        seeds.emplace_back(0.0, 1.5);
        const auto oracle = complex_scaling_resonances(cs.V, seeds, {}, workers);
        for (cplx z : l.zeros) {
            if (z.real() < 0 || std::abs(z) > 10) continue;
            double best = 1e9;
            for (cplx w : oracle) best = std::min(best, std::abs(w - z));
            worst = std::max(worst, best);
            ++compared;
        }
    }
    const bool oracle_ok = compared >= 5 && worst < 1e-6;
    c.pass = slope_ok && double_ok && oracle_ok;
    c.detail = "slope " + detail::fmt(one.slope, 4) + " vs " + detail::fmt(one.predicted, 4) + " (2/pi x hull 1.05; 2/pi alone " +
               detail::fmt(2 / pi, 4) + "), doubled support ratio " + detail::fmt(two.slope / one.slope, 4) +
               ", oracle max diff " + detail::fmt(worst) + " over " + std::to_string(compared) + " zeros";
    return c;
}

// 7. bound states
inline Criterion bound(int = 0) {
    Criterion c{7, "bound states", true, "", 0, 10};
    const std::vector<CompactPotential> vs{
        CompactPotential::mollified_well(0.01, 0.0, 1.0),
        CompactPotential::mollified_well(1.0, 0.0, 1.0),
        CompactPotential::mollified_well(3.0, -1.0, 0.5),
        CompactPotential::custom("dip_and_bump", [](double r) { return r < 1.0 ? -1.0 : 0.5; }, 0.0, 2.0),
        CompactPotential::custom("gauss", [](double r) { return -0.2 * std::exp(-r * r); }, -7.0, 7.0),
    };
    int bind = 0;
    for (const auto& v : vs) {
        const auto e = bound_states(v);
        bind += !e.empty() && e.front() < 0;
    }
    double worst = 0.0;
    bool counts = true;
    for (auto [V0, a] : {std::pair{1.0, 1.0}, std::pair{10.0, 1.5}, std::pair{40.0, 0.7}}) {
        const auto got = bound_states(CompactPotential::square_well(V0, a));
        const auto want = detail::square_well_energies(V0, a);
        if (got.size() != want.size() || got.empty()) {
            counts = false;
            continue;
        }
        for (std::size_t k = 0; k < got.size(); ++k) worst = std::max(worst, std::abs(got[k] - want[k]));
    }
    c.pass = bind == static_cast<int>(vs.size()) && counts && worst < 1e-8;
    c.detail = std::to_string(bind) + "/" + std::to_string(vs.size()) + " negative-integral potentials bind; square-well max err " +
               detail::fmt(worst) + (counts ? "" : " (state count mismatch)");
    return c;
}

// 8. strip sweeps over alpha in {0, 0.3, 1, alpha0 + 1}
inline Criterion strips(int workers = 0) {
    Criterion c{8, "strip sweeps", true, "", 0, 300};
    SweepConfig base;
    base.workers = workers;
    const double a0 = alpha0(base.R_g, 0.0);
    base.alphas = {0.0, 0.3, 1.0, a0 + 1};
    const std::vector<double> Gs{1.0, 0.5};
    std::vector<std::vector<SweepResult>> runs;
    for (double G : Gs) {
        SweepConfig cfg = base;
        cfg.Gamma = G;
        runs.push_back(strip_sweep(cfg));
    }
    const std::size_t nh = base.hs.size();
    bool drift_ok = true, stable_ok = true, elliptic_ok = true;
    std::string d;
    for (std::size_t ia = 0; ia < base.alphas.size(); ++ia) {
        const bool elliptic = base.alphas[ia] >= a0;
        // the real-axis sup does not depend on the strip depth
        std::vector<double> hn;
        for (std::size_t ih = 0; ih < nh; ++ih) hn.push_back(runs[0][ia * nh + ih].h_norm_real);
        double growth = 0.0;
        for (std::size_t k = 0; k + 1 < hn.size(); ++k) growth = std::max(growth, hn[k + 1] / hn[k]);
        const double spread = *std::max_element(hn.begin(), hn.end()) / *std::min_element(hn.begin(), hn.end());
        drift_ok = drift_ok && growth < 2.0;
        d += "\n  alpha=" + detail::fmt(base.alphas[ia]) + (elliptic ? " (elliptic)" : "") + ": h*norm growth " +
             detail::fmt(growth) + ", max/min " + detail::fmt(spread);
        for (std::size_t ig = 0; ig < Gs.size(); ++ig) {
            std::vector<double> c0;
            double mean = 0.0;
            for (std::size_t ih = 0; ih < nh; ++ih) {
                c0.push_back(runs[ig][ia * nh + ih].fitted_C0);
                mean += c0.back() / nh;
            }
            d += "; C0(Gamma=" + detail::fmt(Gs[ig]) + ")";
            for (double x : c0) {
                d += " " + detail::fmt(x);
                if (!std::isfinite(x)) {
                    stable_ok = false;
                } else if (elliptic) {
                    elliptic_ok = elliptic_ok && std::abs(x) < 0.1;
                } else {
                    stable_ok = stable_ok && std::abs(x / mean - 1) <= 0.3;
                }
            }
        }
    }
    c.pass = drift_ok && stable_ok && elliptic_ok;
    c.detail = std::string("h*norm growth<2 ") + (drift_ok ? "ok" : "FAIL") + ", C0 finite and within 30% " +
               (stable_ok ? "ok" : "FAIL") + ", elliptic |C0|<0.1 " + (elliptic_ok ? "ok" : "FAIL") + d;
    return c;
}

// 9. gluing parametrix
inline Criterion gluing(int workers = 0) {
    Criterion c{9, "gluing parametrix", true, "", 0, 120};
    const std::vector<double> hs{0.1, 0.05, 0.025};
    struct Out {
        ParametrixReport main, upper;
    };
    const auto outs = parallel_map(
        hs,
        [](double h) {
            return Out{apply_parametrix(GluingConfig{}, h, cplx(0.3, -0.2 * h)),
                       apply_parametrix(GluingConfig{}, h, cplx(0.3, 1.0), false)};
        },
        workers);
    double prod = 0.0;
    bool below = true;
    std::vector<double> ratios;
    for (std::size_t i = 0; i < outs.size(); ++i) {
        for (const auto& w : gluing::vanishing_products()) prod = std::max(prod, outs[i].main.a_products.at(w));
        below = below && outs[i].main.corrected_remainder < outs[i].main.first_order_remainder &&
                outs[i].upper.corrected_remainder < outs[i].upper.first_order_remainder;
        if (i + 1 < outs.size())
            ratios.push_back(std::log2(outs[i].main.corrected_remainder / outs[i + 1].main.corrected_remainder));
    }
    const double rmin = *std::min_element(ratios.begin(), ratios.end());
    c.pass = prod < 1e-10 && below && rmin >= 3.0;
    c.detail = "max vanishing product " + detail::fmt(prod) + "; corrected < first order " + (below ? "everywhere" : "NOT everywhere") +
               "; corrected " + detail::fmt(outs[0].main.corrected_remainder) + ", " +
               detail::fmt(outs[1].main.corrected_remainder) + ", " + detail::fmt(outs[2].main.corrected_remainder) +
               "; log2 ratios " + detail::fmt(ratios[0]) + ", " + detail::fmt(ratios[1]);
    return c;
}

// 10. local smoothing
inline Criterion smoothing(int workers = 0) {
    Criterion c{10, "local smoothing", true, "", 0, 180};
    SmoothingConfig cfg;
    cfg.workers = workers;
    const auto rows = smoothing_ratio({4, 8, 16, 32, 64}, cfg);
    double lo = 1e300, hi = 0.0;
    std::vector<double> lx, ly;
    for (const auto& r : rows) {
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
        lx.push_back(std::log(r.xi));
        ly.push_back(std::log(r.ratio_no_cutoff));
    }
    const double slope = fit_line(lx, ly).slope;
    c.pass = hi / lo <= 3.0 && std::abs(slope - 1.0) <= 0.2;
    c.detail = "cutoff ratio max/min " + detail::fmt(hi / lo, 4) + " (";
    for (const auto& r : rows) c.detail += detail::fmt(r.ratio, 4) + " ";
    c.detail += "), uncut log-slope " + detail::fmt(slope, 4);
    return c;
}

inline const std::vector<std::function<Criterion(int)>>& all() {
    static const std::vector<std::function<Criterion(int)>> v{curvature, dynamics, bessel,   lower_bound, poles,
                                                              counting,  bound,    strips,   gluing,      smoothing};
    return v;
}

// runs one criterion; an exception counts as a failure with its message
inline Criterion run(int id, int workers = 0) {
    const auto t0 = std::chrono::steady_clock::now();
    Criterion c;
    try {
        c = all().at(id - 1)(workers);
    } catch (const std::exception& e) {
        c.id = id;
        c.pass = false;
        c.detail = std::string("exception: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return c;
}

inline void write_summary_csv(std::ostream& os, const std::vector<Criterion>& cs) {
    // no timings here: the file must be identical across reruns
    os << "criterion,name,result\n";
    for (const auto& c : cs) os << c.id << ',' << c.name << ',' << (c.pass ? "PASS" : "FAIL") << '\n';
}

}  // namespace cusplab::acceptance
