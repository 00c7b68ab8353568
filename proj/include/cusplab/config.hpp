#pragma once

// Flat key=value run configuration. Everything is validated before any compute starts.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "geometry.hpp"

namespace cusplab::config {

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// "key = value" per line; '#' starts a comment
inline KeyValues parse(std::istream& is) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParameterError("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string k = trim(line.substr(0, eq));
        if (k.empty()) throw ParameterError("config line " + std::to_string(lineno) + ": empty key");
        if (kv.count(k)) throw ParameterError("config line " + std::to_string(lineno) + ": duplicate key " + k);
        kv[k] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline KeyValues read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParameterError("cannot read config file " + path);
    return parse(f);
}

// "key=value" from the command line
inline std::pair<std::string, std::string> split_override(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ParameterError("override must look like key=value: " + s);
    return {trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
}

inline void write(std::ostream& os, const KeyValues& kv) {
    for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
}

// shortest text that reads back to the same double
inline std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline double to_double(const std::string& key, const std::string& s) {
    double x = 0.0;
    const std::string t = trim(s);
    const auto r = std::from_chars(t.data(), t.data() + t.size(), x);
    if (r.ec != std::errc{} || r.ptr != t.data() + t.size() || !std::isfinite(x))
        throw ParameterError(key + ": not a finite number: '" + s + "'");
    return x;
}

inline long to_int(const std::string& key, const std::string& s) {
    long x = 0;
    const std::string t = trim(s);
    const auto r = std::from_chars(t.data(), t.data() + t.size(), x);
    if (r.ec != std::errc{} || r.ptr != t.data() + t.size()) throw ParameterError(key + ": not an integer: '" + s + "'");
    return x;
}

inline std::vector<double> to_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
    if (out.empty()) throw ParameterError(key + ": empty list");
    return out;
}

inline std::string from_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
}

// profile keys: n, R_g, theta0, profile.kind and the parameters of that kind
inline WarpProfile profile_from(const KeyValues& kv) {
    auto num = [&](const std::string& k, double d) { return kv.count(k) ? to_double(k, kv.at(k)) : d; };
    const int n = kv.count("n") ? static_cast<int>(to_int("n", kv.at("n"))) : 1;
    const double Rg = num("R_g", 2.0);
    if (n < 1) throw ParameterError("n must be >= 1");
    if (!(Rg > 0)) throw ParameterError("R_g must be positive");
    const std::string kind = kv.count("profile.kind") ? kv.at("profile.kind") : "zero";
    WarpProfile p;
    if (kind == "zero") {
        p = WarpProfile::zero_profile(n, Rg);
    } else if (kind == "funnel") {
        p = WarpProfile::funnel_profile(num("profile.beta0", 0.0), n, Rg);
    } else if (kind == "gaussian_b") {
        p = WarpProfile::b_profile(num("profile.amp", 0.0), num("profile.center", 0.0), num("profile.width", 1.0), n, Rg);
    } else if (kind == "tabulated") {
        if (!kv.count("profile.r") || !kv.count("profile.beta"))
            throw ParameterError("tabulated profile needs profile.r and profile.beta lists");
        p = WarpProfile::tabulated_profile(to_list("profile.r", kv.at("profile.r")), to_list("profile.beta", kv.at("profile.beta")),
                                           n, Rg);
    } else if (kind == "custom") {
        throw UnsupportedProfile("custom profiles cannot be described in a config file");
    } else {
        throw ParameterError("unknown profile.kind '" + kind + "'");
    }
    p.theta0 = num("theta0", 0.7);
    if (!(p.theta0 > 0 && p.theta0 < pi / 2)) throw ParameterError("theta0 must lie in (0, pi/2)");
    return p;
}

inline KeyValues profile_to(const WarpProfile& p) {
    KeyValues kv;
    kv["n"] = std::to_string(p.n);
    kv["R_g"] = format_double(p.R_g);
    kv["theta0"] = format_double(p.theta0);
    switch (p.kind) {
        case ProfileKind::zero:
            kv["profile.kind"] = "zero";
            break;
        case ProfileKind::funnel:
            kv["profile.kind"] = "funnel";
            kv["profile.beta0"] = format_double(p.beta0);
            break;
        case ProfileKind::gaussian_b:
            kv["profile.kind"] = "gaussian_b";
            kv["profile.amp"] = format_double(p.amp);
            kv["profile.center"] = format_double(p.center);
            kv["profile.width"] = format_double(p.width);
            break;
        case ProfileKind::tabulated:
            kv["profile.kind"] = "tabulated";
            kv["profile.r"] = from_list(p.tab_r);
            kv["profile.beta"] = from_list(p.tab_beta);
            break;
        case ProfileKind::custom:
            throw UnsupportedProfile("custom profile '" + p.name + "' has no config form");
    }
    return kv;
}

struct GridSpec {
    double r_min = -5.0, r_max = 5.0;
    int points = 101;
};

struct RunConfig {
    WarpProfile profile = WarpProfile::zero_profile();
    GridSpec grid;
    double E = 0.5;
    double Gamma = 1.0;
    std::vector<double> hs{0.1, 0.05, 0.025};
    std::vector<double> alphas{0.0, 0.3, 1.0};
    std::string out_dir = ".";
    int workers = 0;
    std::uint64_t seed = 2024;

    void validate() const {
        if (!(E > 0 && E < 1)) throw ParameterError("E must lie in (0, 1)");
        if (!(Gamma > 0)) throw ParameterError("Gamma must be positive");
        for (double h : hs)
            if (!(h > 0 && h <= 1)) throw ParameterError("every h must lie in (0, 1]");
        for (double a : alphas)
            if (!(a >= 0)) throw ParameterError("every alpha must be >= 0");
        if (!(grid.r_max > grid.r_min) || grid.points < 2) throw ParameterError("grid needs r_min < r_max and >= 2 points");
        if (workers < 0) throw ParameterError("workers must be >= 0");
        if (out_dir.empty()) throw ParameterError("out_dir is empty");
    }
};

inline const std::set<std::string>& run_keys() {
    static const std::set<std::string> k{"n",          "R_g",          "theta0",        "profile.kind",  "profile.beta0",
                                         "profile.amp", "profile.center", "profile.width", "profile.r",    "profile.beta",
                                         "grid.r_min", "grid.r_max",   "grid.points",   "E",             "Gamma",
                                         "h_list",     "alpha_list",   "out_dir",       "workers",       "seed"};
    return k;
}

inline RunConfig run_config_from(const KeyValues& kv) {
    for (const auto& [k, v] : kv)
        if (!run_keys().count(k)) throw ParameterError("unknown config key '" + k + "'");
    RunConfig c;
    c.profile = profile_from(kv);
    auto num = [&](const std::string& k, double d) { return kv.count(k) ? to_double(k, kv.at(k)) : d; };
    c.grid.r_min = num("grid.r_min", c.grid.r_min);
    c.grid.r_max = num("grid.r_max", c.grid.r_max);
    if (kv.count("grid.points")) c.grid.points = static_cast<int>(to_int("grid.points", kv.at("grid.points")));
    c.E = num("E", c.E);
    c.Gamma = num("Gamma", c.Gamma);
    if (kv.count("h_list")) c.hs = to_list("h_list", kv.at("h_list"));
    if (kv.count("alpha_list")) c.alphas = to_list("alpha_list", kv.at("alpha_list"));
    if (kv.count("out_dir")) c.out_dir = kv.at("out_dir");
    if (kv.count("workers")) c.workers = static_cast<int>(to_int("workers", kv.at("workers")));
    if (kv.count("seed")) {
        const long s = to_int("seed", kv.at("seed"));
        if (s < 0) throw ParameterError("seed must be >= 0");
        c.seed = static_cast<std::uint64_t>(s);
    }
    c.validate();
    return c;
}

inline KeyValues run_config_to(const RunConfig& c) {
    KeyValues kv = profile_to(c.profile);
    kv["grid.r_min"] = format_double(c.grid.r_min);
    kv["grid.r_max"] = format_double(c.grid.r_max);
    kv["grid.points"] = std::to_string(c.grid.points);
    kv["E"] = format_double(c.E);
    kv["Gamma"] = format_double(c.Gamma);
    kv["h_list"] = from_list(c.hs);
    kv["alpha_list"] = from_list(c.alphas);
    kv["out_dir"] = c.out_dir;
    kv["workers"] = std::to_string(c.workers);
    kv["seed"] = std::to_string(c.seed);
    return kv;
}

}  // namespace cusplab::config
