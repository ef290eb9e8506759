#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "isoq/fields.hpp"

namespace isoq {

enum class ProfileKind { constant, formula, elastic, samples };

struct FormulaTerm {
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;
};

// Closed-form curvature families with exact derivatives of every order.
//   sin:  k(u) = offset + sum_i a_i sin(w_i u + p_i)
//   poly: k(u) = sum_p coeffs[p] u^p
struct FormulaSpec {
    std::string family = "sin";
    double offset = 0.0;
    std::vector<FormulaTerm> terms;
    std::vector<double> coeffs;
};

// Profile curvature generator. The elastic kind integrates
//   k'' = -k/C - k^3/2 - alpha*k + forcing
// (1/C = 0 on cylinders); derivatives of order >= 2 come from repeatedly
// differentiating the ODE, never from stencils, so every order inherits the
// integrator's accuracy. The samples kind caps downstream recursion depth.
struct ProfileSpec {
    ProfileKind kind = ProfileKind::constant;

    double k0 = 0.0;  // constant

    FormulaSpec formula;  // formula

    double alpha = 0.0;  // elastic
    double k_init = 0.0;
    double kp_init = 0.0;
    double forcing = 0.0;

    std::vector<double> sample_values;  // samples
};

// Curvature samples on the grid plus values at half-grid nodes u_j + h/2,
// which the frame integrator consumes as Runge-Kutta midpoints.
struct ProfileData {
    ScalarField k;
    std::vector<double> k_half;
};

namespace detail {

constexpr double kProfileEscape = 1e6;

inline double eval_formula(const FormulaSpec& f, double u, int m) {
    if (f.family == "sin") {
        double acc = (m == 0) ? f.offset : 0.0;
        for (const auto& t : f.terms) {
            double scale = 1.0;
            for (int i = 0; i < m; ++i) scale *= t.omega;
            acc += t.amplitude * scale * std::sin(t.omega * u + t.phase + m * (M_PI / 2.0));
        }
        return acc;
    }
    if (f.family == "poly") {
        double acc = 0.0;
        for (int p = static_cast<int>(f.coeffs.size()) - 1; p >= m; --p) {
            double fall = 1.0;
            for (int i = 0; i < m; ++i) fall *= (p - i);
            acc = acc * u + f.coeffs[p] * fall;  // Horner over u^{p-m}
        }
        return acc;
    }
    throw std::invalid_argument("unknown formula family: " + f.family);
}

// Derivative jet of the elastic solution at one point from its (k, k')
// state: d[m+2] = -inv_c*d[m] - (k^3)^(m)/2 - alpha*d[m] + forcing*[m==0],
// with (k^3)^(m) by two Leibniz convolutions.
inline std::vector<double> elastic_jet(double k, double kp, double inv_c, double alpha,
                                       double forcing, int order) {
    std::vector<double> d(order + 1, 0.0), k2(order + 1, 0.0), k3(order + 1, 0.0);
    d[0] = k;
    if (order >= 1) d[1] = kp;
    std::vector<std::vector<double>> binom(order + 1, std::vector<double>(order + 1, 0.0));
    for (int mm = 0; mm <= order; ++mm) {
        binom[mm][0] = 1.0;
        for (int r = 1; r <= mm; ++r)
            binom[mm][r] = binom[mm - 1][r - 1] + (r <= mm - 1 ? binom[mm - 1][r] : 0.0);
    }
    auto conv = [&](const std::vector<double>& a, const std::vector<double>& b, int m) {
        double acc = 0.0;
        for (int r = 0; r <= m; ++r) acc += binom[m][r] * a[r] * b[m - r];
        return acc;
    };
    for (int m = 0; m + 2 <= order; ++m) {
        k2[m] = conv(d, d, m);
        k3[m] = conv(k2, d, m);
        d[m + 2] = -inv_c * d[m] - 0.5 * k3[m] - alpha * d[m] + (m == 0 ? forcing : 0.0);
    }
    return d;
}

struct ElasticState {
    double k, kp;
};

inline ElasticState elastic_rk4_step(ElasticState y, double h, double inv_c, double alpha,
                                     double forcing) {
    auto f = [&](ElasticState s) {
        return ElasticState{s.kp, -inv_c * s.k - 0.5 * s.k * s.k * s.k - alpha * s.k + forcing};
    };
    const ElasticState k1 = f(y);
    const ElasticState k2 = f({y.k + 0.5 * h * k1.k, y.kp + 0.5 * h * k1.kp});
    const ElasticState k3 = f({y.k + 0.5 * h * k2.k, y.kp + 0.5 * h * k2.kp});
    const ElasticState k4 = f({y.k + h * k3.k, y.kp + h * k3.kp});
    return {y.k + h / 6.0 * (k1.k + 2 * k2.k + 2 * k3.k + k4.k),
            y.kp + h / 6.0 * (k1.kp + 2 * k2.kp + 2 * k3.kp + k4.kp)};
}

// Cubic interpolation at u_j + h/2 from four neighbouring samples.
inline std::vector<double> half_grid_cubic(const GridSpec& g, const std::vector<double>& f) {
    const int n = g.n;
    std::vector<double> half(n - 1, 0.0);
    for (int j = 0; j + 1 < n; ++j) {
        int i0 = j - 1;
        if (!g.periodic) i0 = std::max(0, std::min(n - 4, i0));
        double acc = 0.0;
        static const double w[4] = {-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0};
        if (g.periodic) {
            for (int i = 0; i < 4; ++i) {
                int idx = (i0 + i) % n;
                if (idx < 0) idx += n;
                acc += w[i] * f[idx];
            }
        } else {
            // off-center windows near the ends need their own weights
            const double x0 = (j + 0.5 - i0) * g.spacing();
            double xs[4], ws[4];
            for (int i = 0; i < 4; ++i) xs[i] = i * g.spacing();
            fd::weights(x0, xs, 4, 0, ws);
            for (int i = 0; i < 4; ++i) acc += ws[i] * f[i0 + i];
        }
        half[j] = acc;
    }
    return half;
}

}  // namespace detail

// Generates the profile curvature field with derivative jets up to
// jet_order where the kind allows it. inv_c is the curvature 1/C of the
// surface S carrying the profile (0 for cylinders); only the elastic kind
// reads it.
inline ProfileData generate(const ProfileSpec& p, const GridSpec& g, double inv_c, int jet_order) {
    g.validate();
    const int n = g.n;
    const double h = g.spacing();

    switch (p.kind) {
        case ProfileKind::constant: {
            std::vector<std::vector<double>> jets(jet_order + 1, std::vector<double>(n, 0.0));
            std::fill(jets[0].begin(), jets[0].end(), p.k0);
            return {ScalarField(g, std::move(jets)), std::vector<double>(n - 1, p.k0)};
        }
        case ProfileKind::formula: {
            std::vector<std::vector<double>> jets(jet_order + 1, std::vector<double>(n, 0.0));
            for (int m = 0; m <= jet_order; ++m)
                for (int j = 0; j < n; ++j) jets[m][j] = detail::eval_formula(p.formula, g.point(j), m);
            std::vector<double> half(n - 1);
            for (int j = 0; j + 1 < n; ++j)
                half[j] = detail::eval_formula(p.formula, g.point(j) + 0.5 * h, 0);
            return {ScalarField(g, std::move(jets)), std::move(half)};
        }
        case ProfileKind::elastic: {
            // march at h/2 so the trajectory passes through the half-grid
            std::vector<std::vector<double>> jets(jet_order + 1, std::vector<double>(n, 0.0));
            std::vector<double> half(n - 1, 0.0);
            detail::ElasticState y{p.k_init, p.kp_init};
            for (int s = 0; s <= 2 * (n - 1); ++s) {
                if (std::abs(y.k) > detail::kProfileEscape || !std::isfinite(y.k) ||
                    !std::isfinite(y.kp))
                    throw std::runtime_error("profile escaped: elastic curvature blew up");
                if (s % 2 == 0) {
                    auto d = detail::elastic_jet(y.k, y.kp, inv_c, p.alpha, p.forcing, jet_order);
                    for (int m = 0; m <= jet_order; ++m) jets[m][s / 2] = d[m];
                } else {
                    half[s / 2] = y.k;
                }
                if (s < 2 * (n - 1))
                    y = detail::elastic_rk4_step(y, 0.5 * h, inv_c, p.alpha, p.forcing);
            }
            return {ScalarField(g, std::move(jets)), std::move(half)};
        }
        case ProfileKind::samples: {
            if (static_cast<int>(p.sample_values.size()) != n)
                throw std::invalid_argument("sample profile length does not match grid");
            for (double v : p.sample_values)
                if (!std::isfinite(v)) throw std::invalid_argument("sample profile has non-finite values");
            ScalarField k(g, p.sample_values);
            return {k, detail::half_grid_cubic(g, p.sample_values)};
        }
    }
    throw std::logic_error("unreachable profile kind");
}

// Residual of the defining elastic ODE, reconstructed with stencils from the
// value samples alone (independent of the jet path).
inline double elastic_ode_residual(const ScalarField& k, double inv_c, double alpha,
                                   double forcing) {
    ScalarField k2 = k.fd_derivative(2);
    double worst = 0.0;
    for (int j = 0; j < k.size(); ++j) {
        const double v = k.value(j);
        worst = std::max(std::abs(k2.value(j) + inv_c * v + 0.5 * v * v * v + alpha * v - forcing),
                         worst);
    }
    return worst;
}

}  // namespace isoq
