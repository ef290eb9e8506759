#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "isoq/fcq.hpp"
#include "isoq/fields.hpp"
#include "isoq/frame.hpp"

namespace isoq {

// Detection outcomes are tri-state: a failed genericity hypothesis
// (gamma_{-d} vanishing on the grid) yields "inconclusive", never "false".

struct RatioTestResult {
    bool verdict = false;
    bool inconclusive = false;
    double shift = 0.0;              // fitted constant s with gamma_{-d-1} = s gamma_{-d}
    double ratio_deviation = 0.0;    // constancy deviation of the ratio field
    double shifted_residual = 0.0;   // max |gamma_{-d-1} - s gamma_{-d}|, relative
    bool have_form = false;
    SpaceFormClass form{SpaceFormKind::euclidean, 0.0};
    double tolerance = 0.0;
    std::string note;
};

namespace detail {
// Null-band width for classifying numerically assembled constant terms.
inline double null_tol_for(const LorentzVector& m, double tol) {
    return tol * std::max(1.0, m.max_abs() * m.max_abs());
}
}  // namespace detail

// gamma_{-d-1}/gamma_{-d} constant with value s implies the shifted series
// p(t) - s t^{-1} p(t) has vanishing gamma at level -d-1, hence type <= d;
// the space form is read off the shifted constant term.
inline RatioTestResult type_d_ratio_test(const FCQSeries& s, int d, double tol) {
    if (d < 1) throw std::invalid_argument("type test needs d >= 1");
    if (s.depth() < d + 1)
        throw std::invalid_argument("type-d ratio test needs series depth at least d+1");
    RatioTestResult res;
    res.tolerance = tol;

    const ScalarField& gd = s.gamma(-d);
    const ScalarField& gd1 = s.gamma(-d - 1);
    const double scale = gd.max_abs();
    if (scale < 1e-12) {
        res.inconclusive = true;
        res.note = "inconclusive: gamma_{-d} is identically zero";
        return res;
    }
    if (gd.min_abs() < 1e-6 * std::max(1.0, scale)) {
        res.inconclusive = true;
        res.note = "inconclusive: gamma_{-d} vanishes on the grid";
        return res;
    }

    std::vector<double> ratio(gd.size());
    for (int j = 0; j < gd.size(); ++j) ratio[j] = gd1.value(j) / gd.value(j);
    ConstancyResult c = constancy_test(ScalarField(gd.grid(), std::move(ratio)), tol);
    res.shift = c.value;
    res.ratio_deviation = c.deviation;

    double worst = 0.0;
    for (int j = 0; j < gd.size(); ++j)
        worst = std::max(worst, std::abs(gd1.value(j) - res.shift * gd.value(j)));
    res.shifted_residual = worst / std::max(1.0, gd1.max_abs());
    res.verdict = c.is_constant && res.shifted_residual < tol;

    if (res.verdict) {
        VectorField p_hat = s.p(-d) - (res.shift * s.p(-d + 1));
        LorentzVector m = p_hat.mean();
        if (m.max_abs() >= 1e-12) {
            res.form = classify_space_form(m, detail::null_tol_for(m, tol));
            res.have_form = true;
        }
    }
    return res;
}

struct NormTestResult {
    bool verdict = false;
    double dev_self = 0.0, val_self = 0.0;    // <p_{-d},p_{-d}>
    bool has_adjacent = false;
    double dev_adjacent = 0.0, val_adjacent = 0.0;  // <p_{-d},p_{-d+1}>, d > 1
    double tolerance = 0.0;
};

// Type <= d iff <p_{-d},p_{-d}> (or, for d > 1, <p_{-d},p_{-d+1}>) is
// constant for the series in hand.
inline NormTestResult type_d_norm_test(const FCQSeries& s, int d, double tol) {
    if (d < 1) throw std::invalid_argument("type test needs d >= 1");
    if (s.depth() < d) throw std::invalid_argument("type-d norm test needs series depth at least d");
    NormTestResult res;
    res.tolerance = tol;
    ConstancyResult self = constancy_test(gram_product(s, -d, -d), tol);
    res.dev_self = self.deviation;
    res.val_self = self.value;
    res.verdict = self.is_constant;
    if (d > 1) {
        ConstancyResult adj = constancy_test(gram_product(s, -d, -d + 1), tol);
        res.has_adjacent = true;
        res.dev_adjacent = adj.deviation;
        res.val_adjacent = adj.value;
        res.verdict = res.verdict || adj.is_constant;
    }
    return res;
}

struct CmcResult {
    bool verdict = false;
    bool inconclusive = false;
    double H = 0.0;
    double residual = 0.0;
    double tolerance = 0.0;
};

// Constant mean curvature in a space form: 2 k_zz + c k = H k for a real
// constant H, fitted by least squares in the v-independent form
// k''/2 + c k - H k.
inline CmcResult cmc_test(const FrameBundle& fb, double tol) {
    CmcResult res;
    res.tolerance = tol;
    if (fb.k.max_abs() < 1e-12) {
        res.inconclusive = true;
        return res;
    }
    ScalarField expr = 0.5 * fb.k.derivative(2) + fb.c * fb.k;
    FitResult fit = fit_constants({fb.k}, expr);
    res.H = -fit.coefficients[0];
    res.residual = fit.residual;
    res.verdict = fit.residual < tol;
    return res;
}

struct MnResult {
    bool verdict = false;
    double value = 0.0;
    double deviation = 0.0;
    double tolerance = 0.0;
};

// Musso-Nicolodi criterion: k_zzbar k + k^4 - k_z k_zbar constant, i.e.
// (k''/4) k + k^4 - (k')^2/4 on v-independent data. Must agree with
// cmc_test on every input.
inline MnResult musso_nicolodi_test(const FrameBundle& fb, double tol) {
    ScalarField k1 = fb.k.derivative(1);
    ScalarField k2 = fb.k.derivative(2);
    ScalarField q = 0.25 * (k2 * fb.k) + (fb.k * fb.k) * (fb.k * fb.k) - 0.25 * (k1 * k1);
    ConstancyResult c = constancy_test(q, tol);
    return {c.is_constant, c.value, c.deviation, tol};
}

struct Type2ConformalResult {
    bool verdict = false;
    double s1 = 0.0, s2 = 0.0;
    double residual = 0.0;
    double tolerance = 0.0;
};

// Conformally invariant type-2 condition:
//   4 k_zzzz + 4 c k_zz + 4 c_z k_z + (2 c_zz + c^2) k
//     + 8 (k_zzbar k + k^4 - k_z k_zbar) k + s1 (2 k_zz + c k) + s2 k = 0,
// realized through u-derivatives and fitted over (s1, s2).
inline Type2ConformalResult type2_conformal_test(const FrameBundle& fb, double tol) {
    ScalarField k1 = fb.k.derivative(1);
    ScalarField k2 = fb.k.derivative(2);
    ScalarField k4 = fb.k.derivative(4);
    ScalarField c1 = fb.c.derivative(1);
    ScalarField c2 = fb.c.derivative(2);
    ScalarField mn = 0.25 * (k2 * fb.k) + (fb.k * fb.k) * (fb.k * fb.k) - 0.25 * (k1 * k1);

    ScalarField fixed = 0.25 * k4 + fb.c * k2 + c1 * k1 + (0.5 * c2 + fb.c * fb.c) * fb.k +
                        8.0 * (mn * fb.k);
    ScalarField b1 = 0.5 * k2 + fb.c * fb.k;
    FitResult fit = fit_constants({b1, fb.k}, fixed);
    return {fit.residual < tol, fit.coefficients[0], fit.coefficients[1], fit.residual, tol};
}

struct ProfileOdeRow {
    std::string name;
    bool verdict = false;
    bool degenerate = false;
    double residual = 0.0;  // RMS for vanishing conditions, deviation for constancy ones
    std::vector<std::pair<std::string, double>> constants;
};

// The explicit profile-curvature conditions, per surface kind. Vanishing
// conditions are least-squares fits over the printed constants; the
// E(vinf) family subtracts the fitted combination and tests the remainder
// for constancy instead of vanishing.
inline std::vector<ProfileOdeRow> profile_ode_tests(const FrameBundle& fb, double tol) {
    const double inv_c = (fb.kind == SurfaceKind::cylinder) ? 0.0 : 1.0 / fb.C;
    const ScalarField& bk = fb.bold_k;
    ScalarField b1 = bk.derivative(1);
    ScalarField b2 = bk.derivative(2);
    ScalarField b4 = bk.derivative(4);
    ScalarField bk3 = bk * bk * bk;
    ScalarField bk5 = bk3 * bk * bk;
    ScalarField ones = ScalarField::constant(fb.grid, 1.0, 0);

    ScalarField t1 = inv_c * bk + 0.5 * bk3 + b2;
    ScalarField t2 = (inv_c * inv_c) * bk + inv_c * bk3 + 0.375 * bk5 + (2.0 * inv_c) * b2 +
                     2.5 * (bk * (b1 * b1) + (bk * bk) * b2) + b4;

    std::vector<ProfileOdeRow> rows;
    {
        FitResult f = fit_constants({bk}, t1);
        rows.push_back({"ode_type1", f.residual < tol, f.degenerate, f.residual,
                        {{"alpha", f.coefficients[0]}}});
    }
    {
        FitResult f = fit_constants({t1, bk}, t2);
        rows.push_back({"ode_type2", f.residual < tol, f.degenerate, f.residual,
                        {{"alpha", f.coefficients[0]}, {"beta", f.coefficients[1]}}});
    }
    if (fb.kind == SurfaceKind::cylinder) {
        {
            ConstancyResult c = constancy_test(bk, tol);
            rows.push_back({"ode_ev1_k_constant", c.is_constant, false, c.deviation,
                            {{"k", c.value}}});
        }
        {
            FitResult f = fit_constants({bk, ones}, t1);
            ScalarField remainder = t1 + f.coefficients[0] * bk;
            ConstancyResult c = constancy_test(remainder, tol);
            rows.push_back({"ode_ev2_constant", c.is_constant, f.degenerate, c.deviation,
                            {{"alpha", f.coefficients[0]}, {"value", c.value}}});
        }
        {
            FitResult f = fit_constants({t1, bk, ones}, t2);
            ScalarField remainder = t2 + f.coefficients[0] * t1 + f.coefficients[1] * bk;
            ConstancyResult c = constancy_test(remainder, tol);
            rows.push_back({"ode_ev3_constant", c.is_constant, f.degenerate, c.deviation,
                            {{"alpha", f.coefficients[0]},
                             {"beta", f.coefficients[1]},
                             {"value", c.value}}});
        }
    }
    return rows;
}

struct LocationResult {
    bool verdict = false;
    bool inconclusive = false;
    double shift = 0.0;
    double vector_deviation = 0.0;          // grid-constancy of p_hat_{-d}
    double comp[2] = {0.0, 0.0};            // pairings with the complement basis
    double norm2 = 0.0;                     // <p_hat, p_hat>
    bool have_form = false;
    SpaceFormClass form{SpaceFormKind::euclidean, 0.0};
    bool ev_inf = false;                    // cylinder: gamma_{-d} constant after shift
    double gamma_deviation = 0.0;
    std::string note;
    double tolerance = 0.0;
};

// Locates the constant term of the shifted series: p_hat_{-d} must be a
// constant ambient vector lying in W (revolution/cone), resp. in
// U + <vinf> (cylinder), so its pairings with the stored complement basis
// vanish. Cylinders additionally test the gamma-constancy criterion for
// membership in E(vinf).
inline LocationResult constant_term_location(const FCQSeries& s, int d, double tol) {
    LocationResult res;
    res.tolerance = tol;
    RatioTestResult ratio = type_d_ratio_test(s, d, tol);
    if (ratio.inconclusive) {
        res.inconclusive = true;
        res.note = ratio.note;
        return res;
    }
    res.shift = ratio.shift;

    const FrameBundle& fb = s.frame();
    VectorField p_hat = s.p(-d) - (res.shift * s.p(-d + 1));
    LorentzVector m = p_hat.mean();
    double dev = 0.0;
    for (int j = 0; j < fb.grid.n; ++j) dev = std::max(dev, (p_hat.value(j) - m).max_abs());
    res.vector_deviation = dev / std::max(1.0, m.max_abs());

    res.comp[0] = std::abs(inner(m, fb.complement_basis[0]));
    res.comp[1] = std::abs(inner(m, fb.complement_basis[1]));
    res.norm2 = inner(m, m);
    if (m.max_abs() >= 1e-12) {
        res.form = classify_space_form(m, detail::null_tol_for(m, tol));
        res.have_form = true;
    }

    if (fb.kind == SurfaceKind::cylinder) {
        ScalarField g_hat = s.gamma(-d) - res.shift * s.gamma(-d + 1);
        ConstancyResult c = constancy_test(g_hat, tol);
        res.ev_inf = c.is_constant;
        res.gamma_deviation = c.deviation;
    }

    res.verdict = ratio.verdict && res.vector_deviation < tol && res.comp[0] < tol &&
                  res.comp[1] < tol;
    return res;
}

}  // namespace isoq
