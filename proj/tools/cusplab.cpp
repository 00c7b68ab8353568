// cusplab command line: one subcommand per experiment, CSV out, optional SVG.
//
// exit codes: 0 ok, 2 bad input (nothing written), 3 numerical failure (diagnostic row written),
// 64 unknown or missing subcommand.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "cusplab/acceptance.hpp"
#include "cusplab/applications.hpp"
#include "cusplab/config.hpp"
#include "cusplab/exact_cylinder.hpp"
#include "cusplab/geodesic_flow.hpp"
#include "cusplab/geometry.hpp"
#include "cusplab/gluing_lab.hpp"
#include "cusplab/model_operators.hpp"
#include "cusplab/resonance_finder.hpp"
#include "cusplab/special_functions.hpp"
#include "cusplab/svg.hpp"

using namespace cusplab;
namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0, exit_invalid = 2, exit_numerical = 3, exit_usage = 64;

// Output of one run: named files and their contents, written only once everything succeeded.
struct Artifacts {
    std::vector<std::pair<std::string, std::string>> files;
    void add(const std::string& name, const std::function<void(std::ostream&)>& fill) {
        std::ostringstream os;
        fill(os);
        files.emplace_back(name, os.str());
    }
};

void write_files(const Artifacts& a) {
    for (const auto& [path, body] : a.files) {
        const fs::path p(path);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        std::ofstream f(p, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path);
        f << body;
    }
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

std::vector<double> list_arg(const std::string& name, const std::string& s) { return config::to_list(name, s); }

// "zero", "well:depth,a,b[,w]" or "square:depth,width"
CompactPotential potential_arg(const std::string& s) {
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    const std::vector<double> v = colon == std::string::npos ? std::vector<double>{} : list_arg("--potential", s.substr(colon + 1));
    if (kind == "zero" && v.empty()) return CompactPotential::zero();
    if (kind == "well" && (v.size() == 3 || v.size() == 4))
        return CompactPotential::mollified_well(v[0], v[1], v[2], v.size() == 4 ? v[3] : 0.05);
    if (kind == "square" && v.size() == 2) return CompactPotential::square_well(v[0], v[1]);
    throw ParameterError("--potential must be zero, well:depth,a,b[,w] or square:depth,width (got '" + s + "')");
}

std::string svg_path(const std::string& csv) { return fs::path(csv).replace_extension(".svg").string(); }

struct Common {
    std::string config_file;
    std::vector<std::string> sets;
    std::optional<int> workers;
    std::optional<long> seed;
    std::optional<std::string> out_dir;
    bool svg = false;
};

struct Options {
    std::string out;
    // sweep knobs shared by several subcommands; unset means "use config or the subcommand default"
    std::optional<double> E, Gamma;
    std::optional<std::string> h_list, alpha_list;
    // curvature
    double ktilde = 0.0;
    // geodesics
    int count = 100, trace = -1;
    double T_flow = 200.0, dt = 1e-3;
    // bessel-check
    int samples = 200;
    // cylinder-sweep
    double im_sigma = 0.0, re_min = 10.0, re_max = 60.0, window_a = 1.0;
    int points = 11, mode = 1, window_points = 400;
    // mode-sweep
    int re_points = 5, depth_points = 6;
    // resonances / count
    std::string potential = "well:1,0,1", box = "-10,10,-3,1.5", seeds = "20,10", radii = "20,25,30,35,40";
    int circle_points = 8000;
    double alpha = 0.0;
    // smoothing
    double s_alpha = 1.0, s_T = 1.0;
    std::string xi_list = "4,8,16,32,64";
    // repro-all
    std::string only;
};

std::pair<config::RunConfig, config::KeyValues> load(const Common& c, const Options& o) {
    config::KeyValues kv;
    if (!c.config_file.empty()) kv = config::read_file(c.config_file);
    for (const auto& s : c.sets) {
        const auto [k, v] = config::split_override(s);
        kv[k] = v;
    }
    if (c.workers) kv["workers"] = std::to_string(*c.workers);
    if (c.seed) kv["seed"] = std::to_string(*c.seed);
    if (c.out_dir) kv["out_dir"] = *c.out_dir;
    if (o.E) kv["E"] = config::format_double(*o.E);
    if (o.Gamma) kv["Gamma"] = config::format_double(*o.Gamma);
    if (o.h_list) kv["h_list"] = *o.h_list;
    if (o.alpha_list) kv["alpha_list"] = *o.alpha_list;
    return {config::run_config_from(kv), kv};
}

std::string out_path(const config::RunConfig& rc, const Options& o, const std::string& stem) {
    return o.out.empty() ? (fs::path(rc.out_dir) / (stem + ".csv")).string() : o.out;
}

// Each subcommand validates, then returns a closure doing the compute. The split keeps
// "bad input" strictly ahead of any work.
using Job = std::function<Artifacts()>;

Job curvature_job(const config::RunConfig& rc, const Options& o, bool svg) {
    const std::string path = out_path(rc, o, "curvature");
    return [=] {
        std::vector<CurvatureReport> rows;
        for (double r : linspace(rc.grid.r_min, rc.grid.r_max, rc.grid.points)) rows.push_back(curvature_report(rc.profile, r, o.ktilde));
        Artifacts a;
        a.add(path, [&](std::ostream& os) {
            os.precision(17);
            os << "r,K_radial,K_tangential,oracle_K,abs_error\n";
            for (const auto& c : rows)
                os << c.r << ',' << c.K_radial << ',' << c.K_tangential << ',' << c.oracle_K << ',' << c.abs_error << '\n';
        });
        if (svg) {
            svg::Series k{"K radial", {}, {}}, orc{"oracle", {}, {}};
            for (const auto& c : rows) {
                k.x.push_back(c.r);
                k.y.push_back(c.K_radial);
                orc.x.push_back(c.r);
                orc.y.push_back(c.oracle_K);
            }
            a.add(svg_path(path), [&](std::ostream& os) { svg::line_plot(os, "radial curvature", "r", "K", {k, orc}); });
        }
        return a;
    };
}

Job geodesics_job(const config::RunConfig& rc, const Options& o, bool svg) {
    if (o.count < 1) throw ParameterError("--count must be >= 1");
    if (!(o.T_flow > 0) || !(o.dt > 0)) throw ParameterError("--T and --dt must be positive");
    if (o.trace >= o.count) throw ParameterError("--trace index out of range");
    const std::string path = out_path(rc, o, "geodesics");
    return [=] {
        const auto ics = random_initial_conditions(rc.profile, o.count, rc.seed);
        const auto reps = escape_report(ics, rc.profile, o.T_flow, o.dt, rc.workers);
        int escaped = 0;
        for (const auto& r : reps) escaped += r.escaped;
        std::cout << escaped << "/" << o.count << " escaped\n";
        Artifacts a;
        a.add(path, [&](std::ostream& os) { write_escape_csv(os, ics, reps); });
        if (o.trace >= 0) {
            const auto tr = integrate(ics[o.trace], rc.profile, std::min(o.T_flow, 50.0), o.dt);
            const std::string tpath = (fs::path(path).parent_path() / "geodesic_trace.csv").string();
            a.add(tpath, [&](std::ostream& os) { write_trajectory_csv(os, tr, rc.profile, 100); });
            if (svg) {
                svg::Series s{"r(t)", {}, {}};
                for (std::size_t i = 0; i < tr.states.size(); i += 100) {
                    s.x.push_back(i * tr.dt);
                    s.y.push_back(tr.states[i].r);
                }
                a.add(svg_path(tpath), [&](std::ostream& os) { svg::line_plot(os, "geodesic", "t", "r", {s}); });
            }
        }
        return a;
    };
}

Job bessel_job(const config::RunConfig& rc, const Options& o, bool) {
    if (o.samples < 1) throw ParameterError("--samples must be >= 1");
    const std::string path = out_path(rc, o, "bessel_check");
    return [=] {
        std::mt19937_64 rng(rc.seed);
        std::uniform_real_distribution<double> re(-1, 3), im(-8, 8), lam(0.2, 3), rr(-0.3, 1.5);
        std::ostringstream body;
        body.precision(17);
        body << "identity,nu_re,nu_im,lambda,r,error\n";
        double worst = 0.0;
        for (int i = 0; i < o.samples; ++i) {
            const cplx nu(re(rng), im(rng));
            const double l = lam(rng), r = rr(rng);
            const double e = std::abs(wronskian_radial(nu, l, r) - 1.0);
            worst = std::max(worst, e);
            body << "wronskian," << nu.real() << ',' << nu.imag() << ',' << l << ',' << r << ',' << e << '\n';
        }
        for (int i = 0; i < o.samples; ++i) {
            const cplx nu(re(rng), im(rng));
            const double z = lam(rng) * std::exp(-rr(rng));
            const cplx rhs = 2.0 * nu / z * bessel_i(nu, z).value;
            const double e = std::abs(bessel_i(nu - 1.0, z).value - bessel_i(nu + 1.0, z).value - rhs) / std::max(1.0, std::abs(rhs));
            worst = std::max(worst, e);
            body << "recurrence," << nu.real() << ',' << nu.imag() << ",," << z << ',' << e << '\n';
        }
        std::cout << "max error " << worst << "\n";
        Artifacts a;
        a.files.emplace_back(path, body.str());
        return a;
    };
}

Job cylinder_job(const config::RunConfig& rc, const Options& o, bool svg) {
    const auto w = CutoffWindow::make(o.window_a, o.window_points);
    if (o.mode < 1) throw ParameterError("--mode must be >= 1");
    if (o.points < 8) throw ParameterError("--points must be >= 8");
    if (!(o.re_min > 0) || !(o.re_max > o.re_min)) throw ParameterError("need 0 < --re-min < --re-max");
    const std::string path = out_path(rc, o, "cylinder_sweep");
    return [=] {
        // circle fiber of length 2 pi: lambda_m = m
        const auto f = lower_bound_slope(o.mode, o.mode, o.im_sigma, o.re_min, o.re_max, w, o.points, rc.workers);
        std::cout << "slope " << f.slope << " predicted " << f.predicted << "\n";
        Artifacts a;
        a.add(path, [&](std::ostream& os) { write_cylinder_csv(os, f, o.im_sigma); });
        if (svg) {
            svg::Series s{"log norm", {}, {}};
            for (std::size_t i = 0; i < f.norms.size(); ++i) {
                s.x.push_back(std::log(f.re_sigma[i]));
                s.y.push_back(std::log(f.norms[i]));
            }
            a.add(svg_path(path), [&](std::ostream& os) { svg::line_plot(os, "cutoff resolvent", "log Re sigma", "log norm", {s}); });
        }
        return a;
    };
}

Job mode_sweep_job(const config::RunConfig& rc, const Options& o, bool svg) {
    SweepConfig sc;
    sc.alphas = rc.alphas;
    sc.hs = rc.hs;
    sc.E = rc.E;
    sc.Gamma = rc.Gamma;
    sc.re_points = o.re_points;
    sc.depth_points = o.depth_points;
    sc.profile = rc.profile;
    sc.R_g = rc.profile.R_g;
    sc.theta0 = rc.profile.theta0;
    sc.workers = rc.workers;
    if (sc.re_points < 1 || sc.depth_points < 2) throw ParameterError("--points >= 1 and --depth-points >= 2 required");
    const std::string path = out_path(rc, o, "mode_sweep");
    return [=] {
        const auto rs = strip_sweep(sc);
        Artifacts a;
        a.add(path, [&](std::ostream& os) { write_sweep_csv(os, rs); });
        if (svg) {
            std::vector<svg::Series> ss;
            for (double al : sc.alphas) {
                svg::Series s{"alpha=" + config::format_double(al), {}, {}};
                for (const auto& r : rs)
                    if (r.alpha == al) {
                        s.x.push_back(std::log2(r.h));
                        s.y.push_back(r.h_norm_real);
                    }
                ss.push_back(s);
            }
            a.add(svg_path(path), [&](std::ostream& os) { svg::line_plot(os, "real-axis h * norm", "log2 h", "h * norm", ss); });
        }
        return a;
    };
}

Job resonances_job(const config::RunConfig& rc, const Options& o, bool) {
    ScatteringParams p;
    p.V = potential_arg(o.potential);
    p.profile = rc.profile;
    p.alpha = o.alpha;
    const auto b = list_arg("--box", o.box);
    const auto s = list_arg("--seeds", o.seeds);
    if (b.size() != 4) throw ParameterError("--box needs re0,re1,im0,im1");
    if (s.size() != 2 || s[0] < 1 || s[1] < 1) throw ParameterError("--seeds needs two positive counts");
    const ComplexBox box{b[0], b[1], b[2], b[3]};
    if (!(box.re1 > box.re0) || !(box.im1 > box.im0)) throw ParameterError("--box is empty");
    const std::string path = out_path(rc, o, "resonances");
    return [=] {
        const auto l = find_in_box(p, box, static_cast<int>(s[0]), static_cast<int>(s[1]), 64, rc.workers);
        std::cout << l.zeros.size() << " zeros, winding " << l.winding_total << "\n";
        Artifacts a;
        a.add(path, [&](std::ostream& os) { write_resonance_csv(os, l); });
        return a;
    };
}

Job count_job(const config::RunConfig& rc, const Options& o, bool svg) {
    const auto V = potential_arg(o.potential);
    const auto radii = list_arg("--radii", o.radii);
    for (double r : radii)
        if (!(r > 0)) throw ParameterError("radii must be positive");
    if (o.circle_points < 64) throw ParameterError("--circle-points must be >= 64");
    const std::string path = out_path(rc, o, "count");
    return [=] {
        const auto c = count_in_disks(V, radii, o.circle_points, rc.workers);
        std::cout << "slope " << c.slope << " predicted " << c.predicted << "\n";
        Artifacts a;
        a.add(path, [&](std::ostream& os) { write_count_csv(os, c); });
        if (svg) {
            svg::Series s{"N(R)", c.radii, {}};
            for (int n : c.counts) s.y.push_back(n);
            a.add(svg_path(path), [&](std::ostream& os) { svg::line_plot(os, "resonance count", "R", "N(R)", {s}); });
        }
        return a;
    };
}

Job glue_job(const config::RunConfig& rc, const Options& o, bool svg, bool E_given, bool Gamma_given) {
    // the gluing check sits near the real axis: lambda(h) = E - i Gamma h
    const double E = E_given ? rc.E : 0.3, G = Gamma_given ? rc.Gamma : 0.2;
    const auto hs = rc.hs;
    if (hs.size() < 3) throw ParameterError("glue-check needs >= 3 values in --h-list");
    for (std::size_t i = 1; i < hs.size(); ++i)
        if (!(hs[i] < hs[i - 1])) throw ParameterError("--h-list must decrease");
    const std::string path = out_path(rc, o, "glue_check");
    return [=] {
        const auto rows = remainder_decay(GluingConfig{}, hs, E, G, rc.workers);
        Artifacts a;
        a.add(path, [&](std::ostream& os) { write_glue_csv(os, rows); });
        if (svg) {
            svg::Series f{"first order", {}, {}}, c{"corrected", {}, {}};
            for (const auto& r : rows) {
                f.x.push_back(std::log2(r.h));
                f.y.push_back(std::log2(r.first_order));
                c.x.push_back(std::log2(r.h));
                c.y.push_back(std::log2(r.corrected));
            }
            a.add(svg_path(path), [&](std::ostream& os) { svg::line_plot(os, "parametrix remainder", "log2 h", "log2 norm", {f, c}); });
        }
        return a;
    };
}

Job smoothing_job(const config::RunConfig& rc, const Options& o, bool svg) {
    SmoothingConfig sc;
    sc.alpha = o.s_alpha;
    sc.T = o.s_T;
    sc.profile = rc.profile;
    sc.workers = rc.workers;
    const auto xis = list_arg("--xi-list", o.xi_list);
    for (double x : xis)
        if (!(x > 0)) throw ParameterError("xi values must be positive");
    if (!(sc.T >= 0)) throw ParameterError("--T must be >= 0");
    if (!(sc.alpha >= 0)) throw ParameterError("--alpha must be >= 0");
    const std::string path = out_path(rc, o, "smoothing");
    return [=] {
        const auto rows = smoothing_ratio(xis, sc);
        Artifacts a;
        a.add(path, [&](std::ostream& os) { write_smoothing_csv(os, rows); });
        if (svg) {
            svg::Series c{"with cutoff", {}, {}}, u{"no cutoff", {}, {}};
            for (const auto& r : rows) {
                c.x.push_back(std::log2(r.xi));
                c.y.push_back(std::log2(r.ratio));
                u.x.push_back(std::log2(r.xi));
                u.y.push_back(std::log2(r.ratio_no_cutoff));
            }
            a.add(svg_path(path), [&](std::ostream& os) { svg::line_plot(os, "local smoothing", "log2 xi", "log2 ratio", {c, u}); });
        }
        return a;
    };
}

Job repro_job(const config::RunConfig& rc, const Options& o, bool) {
    std::vector<int> ids;
    if (o.only.empty()) {
        for (int i = 1; i <= 10; ++i) ids.push_back(i);
    } else {
        for (double x : list_arg("--only", o.only)) {
            if (x != std::floor(x) || x < 1 || x > 10) throw ParameterError("--only takes criterion numbers 1..10");
            ids.push_back(static_cast<int>(x));
        }
    }
    const std::string path = out_path(rc, o, "repro_summary");
    return [=] {
        std::vector<acceptance::Criterion> cs;
        for (int id : ids) {
            cs.push_back(acceptance::run(id, rc.workers));
            const auto& c = cs.back();
            std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << "  (" << c.seconds << " s)\n    "
                      << c.detail << "\n"
                      << std::flush;
        }
        Artifacts a;
        a.add(path, [&](std::ostream& os) { acceptance::write_summary_csv(os, cs); });
        return a;
    };
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cusplab: resolvent, resonance and geodesic experiments on warped cusp-funnel surfaces"};
    app.fallthrough();
    app.require_subcommand(1);
    Common common;
    Options o;
    app.add_option("--config", common.config_file, "key=value config file")->check(CLI::ExistingFile);
    app.add_option("--set", common.sets, "override a config key (key=value), repeatable");
    app.add_option("--workers", common.workers, "worker threads (CUSPLAB_WORKERS wins)");
    app.add_option("--seed", common.seed, "seed for random samples");
    app.add_option("--out-dir", common.out_dir, "directory for default output files");
    app.add_flag("--svg", common.svg, "also write an SVG line plot");

    auto* curv = app.add_subcommand("curvature", "analytic curvature vs the metric oracle on the config grid");
    curv->add_option("--Ktilde", o.ktilde, "fiber curvature for the tangential plane");
    auto* geo = app.add_subcommand("geodesics", "escape report for seeded random geodesics");
    geo->add_option("--count", o.count);
    geo->add_option("--T", o.T_flow);
    geo->add_option("--dt", o.dt);
    geo->add_option("--trace", o.trace, "also write the trajectory of this initial condition");
    auto* bes = app.add_subcommand("bessel-check", "Wronskian and recurrence residuals on random samples");
    bes->add_option("--samples", o.samples);
    auto* cyl = app.add_subcommand("cylinder-sweep", "exact cylinder cutoff resolvent along Im sigma = const");
    cyl->add_option("--im-sigma", o.im_sigma);
    cyl->add_option("--re-min", o.re_min);
    cyl->add_option("--re-max", o.re_max);
    cyl->add_option("--points", o.points);
    cyl->add_option("--mode", o.mode);
    cyl->add_option("--window", o.window_a, "cutoff half-width a");
    cyl->add_option("--window-points", o.window_points);
    auto* ms = app.add_subcommand("mode-sweep", "model operator resolvent norms on the spectral strip");
    ms->add_option("--alpha-list", o.alpha_list);
    ms->add_option("--h-list", o.h_list);
    ms->add_option("--E", o.E);
    ms->add_option("--Gamma", o.Gamma);
    ms->add_option("--points", o.re_points, "Re lambda samples");
    ms->add_option("--depth-points", o.depth_points);
    auto* res = app.add_subcommand("resonances", "resonances of a compact potential in a box");
    res->add_option("--potential", o.potential, "zero | well:depth,a,b[,w] | square:depth,width");
    res->add_option("--box", o.box, "re0,re1,im0,im1");
    res->add_option("--seeds", o.seeds, "Newton seed grid n_re,n_im");
    res->add_option("--alpha", o.alpha);
    auto* cnt = app.add_subcommand("count", "resonance counts in disks");
    cnt->add_option("--potential", o.potential);
    cnt->add_option("--radii", o.radii);
    cnt->add_option("--circle-points", o.circle_points);
    auto* glue = app.add_subcommand("glue-check", "gluing parametrix remainders");
    glue->add_option("--h-list", o.h_list);
    glue->add_option("--E", o.E, "Re lambda");
    glue->add_option("--Gamma", o.Gamma, "Im lambda = -Gamma h");
    auto* sm = app.add_subcommand("smoothing", "local smoothing ratios");
    sm->add_option("--alpha", o.s_alpha);
    sm->add_option("--xi-list", o.xi_list);
    sm->add_option("--T", o.s_T);
    auto* rep = app.add_subcommand("repro-all", "run every acceptance check and write a summary");
    rep->add_option("--only", o.only, "comma-separated criterion numbers");
    for (auto* s : app.get_subcommands({})) s->add_option("--out", o.out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        if (app.get_subcommands().empty()) {
            std::cerr << "error: " << e.what() << "\n\n" << app.help();
            return exit_usage;
        }
        std::cerr << "error: " << e.what() << "\n";
        return exit_invalid;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    Job job;
    std::string diag_path;
    try {
        const auto [rc, kv] = load(common, o);
        if (name == "curvature") job = curvature_job(rc, o, common.svg);
        else if (name == "geodesics") job = geodesics_job(rc, o, common.svg);
        else if (name == "bessel-check") job = bessel_job(rc, o, common.svg);
        else if (name == "cylinder-sweep") job = cylinder_job(rc, o, common.svg);
        else if (name == "mode-sweep") job = mode_sweep_job(rc, o, common.svg);
        else if (name == "resonances") job = resonances_job(rc, o, common.svg);
        else if (name == "count") job = count_job(rc, o, common.svg);
        else if (name == "glue-check") job = glue_job(rc, o, common.svg, kv.count("E") > 0, kv.count("Gamma") > 0);
        else if (name == "smoothing") job = smoothing_job(rc, o, common.svg);
        else job = repro_job(rc, o, common.svg);
        std::string stem = name;
        std::replace(stem.begin(), stem.end(), '-', '_');
        diag_path = out_path(rc, o, stem == "repro_all" ? "repro_summary" : stem);
    } catch (const std::exception& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return exit_invalid;
    }

    Artifacts out;
    try {
        out = job();
    } catch (const Error& e) {
        if (e.kind() == Error::Kind::validation) {
            std::cerr << "invalid input: " << e.what() << "\n";
            return exit_invalid;
        }
        std::cerr << "numerical failure: " << e.what() << "\n";
        try {
            Artifacts d;
            d.files.emplace_back(diag_path, "status,message\nnumerical_failure," + csv_quote(e.what()) + "\n");
            write_files(d);
        } catch (const std::exception&) {
        }
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    }
    try {
        write_files(out);
    } catch (const std::exception& e) {
        std::cerr << "output failure: " << e.what() << "\n";
        return exit_invalid;
    }
    for (const auto& f : out.files) std::cout << "wrote " << f.first << "\n";
    return exit_ok;
}
