#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace isoq {

// Vector in R^{4,1}. Components are stored as (x1, x2, x3, x4, x0) with the
// timelike direction e0 last; the pairing is
//   <a,b> = a1*b1 + a2*b2 + a3*b3 + a4*b4 - a0*b0.
struct LorentzVector {
    std::array<double, 5> comp{};

    constexpr double& operator[](std::size_t i) { return comp[i]; }
    constexpr double operator[](std::size_t i) const { return comp[i]; }

    LorentzVector& operator+=(const LorentzVector& o) {
        for (std::size_t i = 0; i < 5; ++i) comp[i] += o.comp[i];
        return *this;
    }
    LorentzVector& operator-=(const LorentzVector& o) {
        for (std::size_t i = 0; i < 5; ++i) comp[i] -= o.comp[i];
        return *this;
    }
    LorentzVector& operator*=(double s) {
        for (double& c : comp) c *= s;
        return *this;
    }

    friend LorentzVector operator+(LorentzVector a, const LorentzVector& b) { return a += b; }
    friend LorentzVector operator-(LorentzVector a, const LorentzVector& b) { return a -= b; }
    friend LorentzVector operator*(double s, LorentzVector a) { return a *= s; }
    friend LorentzVector operator*(LorentzVector a, double s) { return a *= s; }
    friend LorentzVector operator-(LorentzVector a) {
        for (double& c : a.comp) c = -c;
        return a;
    }

    [[nodiscard]] bool finite() const {
        for (double c : comp)
            if (!std::isfinite(c)) return false;
        return true;
    }
    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (double c : comp) m = std::max(m, std::abs(c));
        return m;
    }
};

inline double inner(const LorentzVector& a, const LorentzVector& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3] - a[4] * b[4];
}

// Fixed basis: e1..e4 spacelike, e0 timelike (stored last).
inline LorentzVector basis_e1() { return {{1, 0, 0, 0, 0}}; }
inline LorentzVector basis_e2() { return {{0, 1, 0, 0, 0}}; }
inline LorentzVector basis_e3() { return {{0, 0, 1, 0, 0}}; }
inline LorentzVector basis_e4() { return {{0, 0, 0, 1, 0}}; }
inline LorentzVector basis_e0() { return {{0, 0, 0, 0, 1}}; }

// Null pair used by the cylinder construction: <v0,vinf> = -1 exactly.
inline LorentzVector null_v0() {
    const double s = 1.0 / std::sqrt(2.0);
    return {{0, 0, 0, s, s}};
}
inline LorentzVector null_vinf() {
    const double s = 1.0 / std::sqrt(2.0);
    return {{0, 0, 0, -s, s}};
}

// u ^ v acting as the skew endomorphism (u^v)w = <u,w>v - <v,w>u.
struct WedgeAction {
    LorentzVector u, v;

    [[nodiscard]] LorentzVector apply(const LorentzVector& x) const {
        const double a = inner(u, x);
        const double b = inner(v, x);
        LorentzVector r;
        for (std::size_t i = 0; i < 5; ++i) r[i] = a * v[i] - b * u[i];
        return r;
    }
};

enum class SpaceFormKind { spherical, euclidean, hyperbolic };

struct SpaceFormClass {
    SpaceFormKind kind;
    double curvature;  // -<w,w>
};

inline const char* to_string(SpaceFormKind k) {
    switch (k) {
        case SpaceFormKind::spherical: return "spherical";
        case SpaceFormKind::euclidean: return "euclidean";
        case SpaceFormKind::hyperbolic: return "hyperbolic";
    }
    return "?";
}

// Conic section E(w) carried by a nonzero w: <w,w> < 0 spherical, = 0
// euclidean, > 0 hyperbolic, with sectional curvature -<w,w>. null_tol
// widens the euclidean band for numerically assembled vectors.
inline SpaceFormClass classify_space_form(const LorentzVector& w, double null_tol = 0.0) {
    if (w.max_abs() == 0.0) throw std::invalid_argument("undefined conic section: zero vector");
    const double q = inner(w, w);
    if (std::abs(q) <= null_tol) return {SpaceFormKind::euclidean, 0.0};
    if (q < 0.0) return {SpaceFormKind::spherical, -q};
    if (q > 0.0) return {SpaceFormKind::hyperbolic, -q};
    return {SpaceFormKind::euclidean, 0.0};
}

}  // namespace isoq
