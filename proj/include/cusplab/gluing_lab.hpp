#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "common.hpp"
#include "geometry.hpp"
#include "model_operators.hpp"
#include "tridiagonal.hpp"

namespace cusplab {

// chi_F = S(r - (R_g+1)): supported in (R_g+1, inf), 1 on [R_g+2, inf); chi_C(r) = chi_F(-r); chi_K the rest.
namespace cutoff {
inline double chi_F(double r, double Rg) { return SmoothStep::value(r - (Rg + 1)); }
inline double chi_C(double r, double Rg) { return chi_F(-r, Rg); }
inline double chi_K(double r, double Rg) { return 1.0 - chi_C(r, Rg) - chi_F(r, Rg); }
// shifted copies, equal to 1 on the support of the unshifted ones
inline double chi_C_shift(double r, double Rg) { return chi_C(r - 1, Rg); }
inline double chi_F_shift(double r, double Rg) { return chi_F(r + 1, Rg); }
inline double chi_K_shift(double r, double Rg) { return chi_K(std::abs(r) - 1, Rg); }
}  // namespace cutoff

struct CutoffTriple {
    double R_g = 1.0;
    std::vector<double> grid, chi_C, chi_K, chi_F;
};

inline CutoffTriple build_cutoffs(double R_g, const std::vector<double>& grid) {
    if (!(R_g > 0)) throw ParameterError("R_g must be positive");
    if (grid.empty() || grid.front() > -(R_g + 3) || grid.back() < R_g + 3)
        throw DomainError("cutoff grid must span beyond +-(R_g + 3)");
    CutoffTriple t;
    t.R_g = R_g;
    t.grid = grid;
    for (double r : grid) {
        t.chi_C.push_back(cutoff::chi_C(r, R_g));
        t.chi_F.push_back(cutoff::chi_F(r, R_g));
        t.chi_K.push_back(cutoff::chi_K(r, R_g));
    }
    return t;
}

struct GluingConfig {
    double R_g = 1.0;
    double pad = 8.0;             // domain [-(R_g + pad), R_g + pad]
    double alpha = 0.0;
    WarpProfile profile = WarpProfile::zero_profile();
    double theta0 = 0.7;
    double delta = 1.0;           // both ends scaled with slope delta tan(theta0)
    double scale_offset = 5.0;    // scaling starts at |r| = R_g + scale_offset
    double spacing_ratio = 10.0;  // grid spacing h / spacing_ratio
};

// Per-mode parametrix: models P_j = P - i W_j, G = sum chi~_j R_j chi_j, A_j = [P, chi~_j] R_j chi_j.
// Letters: C = 0, K = 1, F = 2.
class GluingSetup {
public:
    GluingSetup(const GluingConfig& c, double h, cplx lambda) : cfg_(c), h_(h), lambda_(lambda) {
        if (!(h > 0)) throw ParameterError("h must be positive");
        if (!(c.pad >= 3 && c.scale_offset >= 3 && c.scale_offset < c.pad))
            throw ParameterError("gluing needs pad >= 3 and 3 <= scale_offset < pad");
        const double Rg = c.R_g, Rs = Rg + c.scale_offset;
        const double s = c.delta * std::tan(c.theta0);
        const ScalingContour contour = contour_ramps(s, Rs, s, Rs);
        AssembleOptions raw;
        raw.absorb = false;
        op_ = assemble(c.alpha, h, contour, absorbing_profile(Side::funnel, Rg), c.profile,
                       {-(Rg + c.pad), Rg + c.pad, h / c.spacing_ratio}, raw);
        const auto& g = op_.grid;
        n_ = g.size();
        cut_ = build_cutoffs(Rg, g);
        const auto wc = absorbing_profile(Side::cusp, Rg), wf = absorbing_profile(Side::funnel, Rg);
        for (int j = 0; j < 3; ++j) {
            chi_[j].resize(n_);
            tchi_[j].resize(n_);
            std::vector<double> W(n_);
            for (std::size_t i = 0; i < n_; ++i) {
                const double r = g[i];
                chi_[j][i] = j == 0 ? cut_.chi_C[i] : j == 1 ? cut_.chi_K[i] : cut_.chi_F[i];
                tchi_[j][i] = j == 0 ? cutoff::chi_C_shift(r, Rg)
                            : j == 1 ? cutoff::chi_K_shift(r, Rg)
                                     : cutoff::chi_F_shift(r, Rg);
                W[i] = j == 0 ? wc.W(r) : j == 1 ? SmoothStep::value(std::abs(r) - (Rg + 3)) : wf.W(r);
            }
            Tridiagonal Pj = op_.A;
            for (std::size_t i = 0; i < n_; ++i) Pj.diag[i] -= I * W[i];
            lu_[j].emplace(Pj, lambda);
            if (lu_[j]->singular()) throw NearEigenvalueError(lambda, "model operator singular");
            // [P, chi~]: (P chi~ - chi~ P)_{ik} = P_ik (chi~_k - chi~_i), zero diagonal
            comm_[j].diag.assign(n_, 0.0);
            comm_[j].sub.resize(n_ - 1);
            comm_[j].sup.resize(n_ - 1);
            for (std::size_t i = 0; i + 1 < n_; ++i) {
                comm_[j].sup[i] = op_.A.sup[i] * (tchi_[j][i + 1] - tchi_[j][i]);
                comm_[j].sub[i] = op_.A.sub[i] * (tchi_[j][i] - tchi_[j][i + 1]);
            }
            absorber_[j] = std::move(W);
        }
    }

    std::size_t size() const { return n_; }
    double h() const { return h_; }
    cplx lambda() const { return lambda_; }
    const DiscreteOperator& op() const { return op_; }
    const CutoffTriple& cutoffs() const { return cut_; }
    const std::vector<double>& absorber(int j) const { return absorber_[j]; }
    const std::vector<double>& shifted_cutoff(int j) const { return tchi_[j]; }

    static int letter(char c) {
        switch (c) {
            case 'C': return 0;
            case 'K': return 1;
            case 'F': return 2;
        }
        throw ParameterError(std::string("unknown letter '") + c + "'");
    }

    std::vector<cplx> apply_A(int j, std::vector<cplx> v) const {
        for (std::size_t i = 0; i < n_; ++i) v[i] *= chi_[j][i];
        lu_[j]->solve(v);
        return comm_[j].apply(v);
    }
    std::vector<cplx> apply_A_adjoint(int j, const std::vector<cplx>& v) const {
        std::vector<cplx> w = adjoint_apply(comm_[j], v);
        lu_[j]->solve_adjoint(w);
        for (std::size_t i = 0; i < n_; ++i) w[i] *= chi_[j][i];
        return w;
    }
    // word "CKF" is A_C A_K A_F
    std::vector<cplx> apply_word(const std::string& w, std::vector<cplx> v) const {
        for (auto it = w.rbegin(); it != w.rend(); ++it) v = apply_A(letter(*it), std::move(v));
        return v;
    }
    std::vector<cplx> apply_word_adjoint(const std::string& w, std::vector<cplx> v) const {
        for (char c : w) v = apply_A_adjoint(letter(c), v);
        return v;
    }

    using Combination = std::vector<std::pair<std::string, double>>;  // "" is the identity

    std::vector<cplx> apply_combination(const Combination& terms, const std::vector<cplx>& v) const {
        std::vector<cplx> out(n_, 0.0);
        for (const auto& [w, c] : terms) {
            const auto y = apply_word(w, v);
            for (std::size_t i = 0; i < n_; ++i) out[i] += c * y[i];
        }
        return out;
    }
    std::vector<cplx> apply_combination_adjoint(const Combination& terms, const std::vector<cplx>& v) const {
        std::vector<cplx> out(n_, 0.0);
        for (const auto& [w, c] : terms) {
            const auto y = apply_word_adjoint(w, v);
            for (std::size_t i = 0; i < n_; ++i) out[i] += c * y[i];
        }
        return out;
    }

    double norm(const Combination& terms) const {
        return operator_norm([&](const std::vector<cplx>& v) { return apply_combination(terms, v); },
                             [&](const std::vector<cplx>& v) { return apply_combination_adjoint(terms, v); }, n_);
    }
    double word_norm(const std::string& w) const { return norm({{w, 1.0}}); }

    // (I + A) B - I for a correction B given as a combination
    double remainder_norm(const Combination& B) const {
        auto apply = [&](const std::vector<cplx>& v) {
            auto y = apply_combination(B, v);
            auto out = y;
            for (int j = 0; j < 3; ++j) {
                const auto a = apply_A(j, y);
                for (std::size_t i = 0; i < n_; ++i) out[i] += a[i];
            }
            for (std::size_t i = 0; i < n_; ++i) out[i] -= v[i];
            return out;
        };
        auto adj = [&](const std::vector<cplx>& v) {
            auto y = v;
            for (int j = 0; j < 3; ++j) {
                const auto a = apply_A_adjoint(j, v);
                for (std::size_t i = 0; i < n_; ++i) y[i] += a[i];
            }
            auto out = apply_combination_adjoint(B, y);
            for (std::size_t i = 0; i < n_; ++i) out[i] -= v[i];
            return out;
        };
        return operator_norm(apply, adj, n_);
    }

    std::vector<cplx> apply_G(const std::vector<cplx>& v) const {
        std::vector<cplx> out(n_, 0.0);
        for (int j = 0; j < 3; ++j) {
            std::vector<cplx> w = v;
            for (std::size_t i = 0; i < n_; ++i) w[i] *= chi_[j][i];
            lu_[j]->solve(w);
            for (std::size_t i = 0; i < n_; ++i) out[i] += tchi_[j][i] * w[i];
        }
        return out;
    }
    std::vector<cplx> apply_P_minus_lambda(const std::vector<cplx>& v) const {
        auto y = op_.A.apply(v);
        for (std::size_t i = 0; i < n_; ++i) y[i] -= lambda_ * v[i];
        return y;
    }

private:
    static std::vector<cplx> adjoint_apply(const Tridiagonal& T, const std::vector<cplx>& x) {
        const std::size_t n = T.size();
        std::vector<cplx> y(n);
        for (std::size_t j = 0; j < n; ++j) {
            cplx v = std::conj(T.diag[j]) * x[j];
            if (j > 0) v += std::conj(T.sup[j - 1]) * x[j - 1];
            if (j + 1 < n) v += std::conj(T.sub[j]) * x[j + 1];
            y[j] = v;
        }
        return y;
    }

    GluingConfig cfg_;
    double h_;
    cplx lambda_;
    DiscreteOperator op_;
    std::size_t n_ = 0;
    CutoffTriple cut_;
    std::array<std::vector<double>, 3> chi_, tchi_, absorber_;
    std::array<Tridiagonal, 3> comm_;
    std::array<std::optional<TridiagonalLU>, 3> lu_;
};

namespace gluing {
// corrections B_k: I - A, then + (KC + CK + KF), - (CKC + KCK + CKF), + KCKC
inline GluingSetup::Combination correction(int stage) {
    GluingSetup::Combination B{{"", 1.0}};
    if (stage >= 1) B.insert(B.end(), {{"C", -1.0}, {"K", -1.0}, {"F", -1.0}});
    if (stage >= 2) B.insert(B.end(), {{"KC", 1.0}, {"CK", 1.0}, {"KF", 1.0}});
    if (stage >= 3) B.insert(B.end(), {{"CKC", -1.0}, {"KCK", -1.0}, {"CKF", -1.0}});
    if (stage >= 4) B.insert(B.end(), {{"KCKC", 1.0}});
    return B;
}
// (I + A) B_4 - I after the vanishing products are dropped
inline GluingSetup::Combination final_remainder_words() {
    return {{"FK", -1.0},  {"FKC", 1.0},  {"FKF", 1.0},   {"CKCK", -1.0},
            {"FKCK", -1.0}, {"KCKF", -1.0}, {"CKCKC", 1.0}, {"FKCKC", 1.0}};
}
inline const std::vector<std::string>& vanishing_products() {
    static const std::vector<std::string> w{"CC", "KK", "FF", "CF", "FC"};
    return w;
}
}  // namespace gluing

struct ParametrixReport {
    double h = 0.0;
    cplx lambda{0.0, 0.0};
    double first_order_remainder = 0.0;           // ||A_C + A_K + A_F||
    double corrected_remainder = 0.0;             // ||R|| after the fourth correction
    std::array<double, 4> stage_remainders{};     // ||(I + A) B_k - I||, k = 1..4
    double formula_mismatch = 0.0;                // ||R - (word expansion of R)||
    std::map<std::string, double> a_products;
};

inline ParametrixReport apply_parametrix(const GluingSetup& s, bool with_products = true) {
    ParametrixReport rep;
    rep.h = s.h();
    rep.lambda = s.lambda();
    rep.first_order_remainder = s.norm({{"C", 1.0}, {"K", 1.0}, {"F", 1.0}});
    for (int k = 1; k <= 4; ++k) rep.stage_remainders[k - 1] = s.remainder_norm(gluing::correction(k));
    rep.corrected_remainder = rep.stage_remainders[3];
    if (with_products) {
        for (const auto& w : gluing::vanishing_products()) rep.a_products[w] = s.word_norm(w);
        for (const char* w : {"C", "K", "F", "FK", "CKCK", "KCKF"}) rep.a_products[w] = s.word_norm(w);
        // R from its definition minus its word expansion
        auto B = gluing::correction(4);
        auto apply = [&](const std::vector<cplx>& v) {
            auto y = s.apply_combination(B, v);
            auto out = y;
            for (int j = 0; j < 3; ++j) {
                const auto a = s.apply_A(j, y);
                for (std::size_t i = 0; i < out.size(); ++i) out[i] += a[i];
            }
            const auto f = s.apply_combination(gluing::final_remainder_words(), v);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] -= v[i] + f[i];
            return out;
        };
        auto adj = [&](const std::vector<cplx>& v) {
            auto y = v;
            for (int j = 0; j < 3; ++j) {
                const auto a = s.apply_A_adjoint(j, v);
                for (std::size_t i = 0; i < y.size(); ++i) y[i] += a[i];
            }
            auto out = s.apply_combination_adjoint(B, y);
            const auto f = s.apply_combination_adjoint(gluing::final_remainder_words(), v);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] -= v[i] + f[i];
            return out;
        };
        rep.formula_mismatch = operator_norm(apply, adj, s.size());
    }
    return rep;
}

inline ParametrixReport apply_parametrix(const GluingConfig& c, double h, cplx lambda, bool with_products = true) {
    return apply_parametrix(GluingSetup(c, h, lambda), with_products);
}

struct DecayRow {
    double h = 0.0;
    cplx lambda{0.0, 0.0};
    double first_order = 0.0, corrected = 0.0;
    double ratio = std::numeric_limits<double>::quiet_NaN();  // log(R(h)/R(h')) / log(h/h') to the next row
};

// lambda(h) = E' - i Gamma h
inline std::vector<DecayRow> remainder_decay(const GluingConfig& c, const std::vector<double>& hs, double E_prime,
                                             double Gamma, int workers = 0) {
    if (hs.size() < 3) throw ParameterError("remainder decay needs >= 3 values of h");
    for (std::size_t i = 1; i < hs.size(); ++i)
        if (!(hs[i] < hs[i - 1])) throw ParameterError("h values must decrease");
    auto rows = parallel_map(
        hs,
        [&](double h) {
            const cplx lam(E_prime, -Gamma * h);
            const auto rep = apply_parametrix(c, h, lam, false);
            DecayRow r;
            r.h = h;
            r.lambda = lam;
            r.first_order = rep.first_order_remainder;
            r.corrected = rep.corrected_remainder;
            return r;
        },
        workers);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i)
        rows[i].ratio = std::log(rows[i].corrected / rows[i + 1].corrected) / std::log(rows[i].h / rows[i + 1].h);
    return rows;
}

inline void write_glue_csv(std::ostream& os, const std::vector<DecayRow>& rows) {
    os.precision(17);
    os << "h,re_lambda,im_lambda,first_order,corrected,ratio\n";
    for (const auto& r : rows)
        os << r.h << ',' << r.lambda.real() << ',' << r.lambda.imag() << ',' << r.first_order << ',' << r.corrected << ','
           << r.ratio << '\n';
}

}  // namespace cusplab
