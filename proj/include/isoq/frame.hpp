#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "isoq/fields.hpp"
#include "isoq/lorentz.hpp"
#include "isoq/profiles.hpp"

namespace isoq {

enum class SurfaceKind { revolution, cone, cylinder };

inline const char* to_string(SurfaceKind k) {
    switch (k) {
        case SurfaceKind::revolution: return "revolution";
        case SurfaceKind::cone: return "cone";
        case SurfaceKind::cylinder: return "cylinder";
    }
    return "?";
}

struct SurfaceSpec {
    SurfaceKind kind = SurfaceKind::cylinder;
    double C = 0.0;  // <0 revolution, >0 cone, unused for cylinders
    ProfileSpec profile;
    GridSpec grid;
};

// Conformal frame of a profile surface along the line v = 0, together with
// the closed-form v-derivatives of each frame vector there. All scalar
// invariants (c, k and everything the recursion builds from them) are
// v-independent, so one u-line carries the whole construction.
//
// psi is the normalized null lift (|d psi|^2 = |dz|^2), N the unit normal of
// the central sphere congruence, c the Schwarzian, k the Hopf coefficient
// (kappa = k N, k = bold_k/4). Immutable once built.
struct FrameBundle {
    SurfaceKind kind = SurfaceKind::cylinder;
    double C = 0.0;
    GridSpec grid;

    VectorField psi, psi_u, psi_hat, normal;
    VectorField psi_v, psi_vv, normal_v, psi_hat_v;

    ScalarField c, k, bold_k;

    // ambient decomposition data for the constant-term location test
    std::array<LorentzVector, 2> complement_basis{};  // W-perp, resp. (U+<vinf>)-perp pairing
    LorentzVector v0{}, vinf{};                       // cylinder null pair

    double frenet_drift = 0.0;  // worst Frenet orthonormality drift seen
};

namespace detail {

struct FrenetState {
    LorentzVector phi1, tangent, normal;
};

inline FrenetState frenet_rhs(const FrenetState& y, double bk, double inv_c) {
    FrenetState d;
    d.phi1 = y.tangent;
    d.tangent = bk * y.normal - inv_c * y.phi1;
    d.normal = (-bk) * y.tangent;
    return d;
}

inline FrenetState frenet_rk4_step(const FrenetState& y, double h, double k0, double kh,
                                   double k1, double inv_c) {
    auto add = [](const FrenetState& a, double s, const FrenetState& b) {
        return FrenetState{a.phi1 + s * b.phi1, a.tangent + s * b.tangent, a.normal + s * b.normal};
    };
    const FrenetState f1 = frenet_rhs(y, k0, inv_c);
    const FrenetState f2 = frenet_rhs(add(y, 0.5 * h, f1), kh, inv_c);
    const FrenetState f3 = frenet_rhs(add(y, 0.5 * h, f2), kh, inv_c);
    const FrenetState f4 = frenet_rhs(add(y, h, f3), k1, inv_c);
    FrenetState out = y;
    out.phi1 += (h / 6.0) * (f1.phi1 + 2.0 * f2.phi1 + 2.0 * f3.phi1 + f4.phi1);
    out.tangent += (h / 6.0) * (f1.tangent + 2.0 * f2.tangent + 2.0 * f3.tangent + f4.tangent);
    out.normal += (h / 6.0) * (f1.normal + 2.0 * f2.normal + 2.0 * f3.normal + f4.normal);
    return out;
}

}  // namespace detail

inline FrameBundle build_frame(const SurfaceSpec& spec, int jet_order = 16) {
    spec.grid.validate();
    const int n = spec.grid.n;
    const double h = spec.grid.spacing();

    double inv_c = 0.0;
    if (spec.kind == SurfaceKind::revolution) {
        if (!(spec.C < 0.0))
            throw std::invalid_argument("surface of revolution requires C < 0");
        inv_c = 1.0 / spec.C;
    } else if (spec.kind == SurfaceKind::cone) {
        if (!(spec.C > 0.0)) throw std::invalid_argument("cone requires C > 0");
        inv_c = 1.0 / spec.C;
    }

    ProfileData prof = generate(spec.profile, spec.grid, inv_c, jet_order);
    const ScalarField& bk = prof.k;

    std::vector<LorentzVector> psi(n), psi_u(n), psi_hat(n), normal(n);
    std::vector<LorentzVector> psi_v(n), psi_vv(n), normal_v(n), psi_hat_v(n);
    double drift = 0.0;

    if (spec.kind == SurfaceKind::cylinder) {
        // phi1 is a unit-speed plane curve in U = <e1,e2> with tangent angle
        // theta' = bold_k; phi2(v) = v*e3.
        const LorentzVector v0 = null_v0(), vinf = null_vinf(), e3 = basis_e3();
        double theta = 0.0, x1 = 0.0, x2 = 0.0;
        for (int j = 0; j < n; ++j) {
            const double ct = std::cos(theta), st = std::sin(theta);
            LorentzVector phi1{{x1, x2, 0, 0, 0}};
            LorentzVector tangent{{ct, st, 0, 0, 0}};
            LorentzVector nrm{{-st, ct, 0, 0, 0}};
            const double bkj = bk.value(j);

            LorentzVector ps = phi1 + v0 + 0.5 * inner(phi1, phi1) * vinf;
            psi[j] = ps;
            psi_u[j] = tangent + inner(tangent, phi1) * vinf;
            LorentzVector m = nrm + inner(nrm, phi1) * vinf;
            normal[j] = m + (bkj / 2.0) * ps;
            psi_hat[j] = vinf + (bkj / 2.0) * m + (bkj * bkj / 8.0) * ps;

            psi_v[j] = e3;
            psi_vv[j] = vinf;
            normal_v[j] = (bkj / 2.0) * e3;
            psi_hat_v[j] = (bkj * bkj / 8.0) * e3;

            if (j + 1 < n) {
                // theta and phi1 advance together through one RK4 step:
                // theta' = bold_k(u), phi1' = (cos theta, sin theta)
                const double k0 = bk.value(j), kh = prof.k_half[j], k1 = bk.value(j + 1);
                const double t1 = theta;
                const double t2 = theta + 0.5 * h * k0;
                const double t3 = theta + 0.5 * h * kh;
                const double t4 = theta + h * kh;
                theta += (h / 6.0) * (k0 + 4.0 * kh + k1);
                x1 += (h / 6.0) * (std::cos(t1) + 2.0 * std::cos(t2) + 2.0 * std::cos(t3) +
                                   std::cos(t4));
                x2 += (h / 6.0) * (std::sin(t1) + 2.0 * std::sin(t2) + 2.0 * std::sin(t3) +
                                   std::sin(t4));
            }
        }
    } else {
        const bool rev = spec.kind == SurfaceKind::revolution;
        const double root = std::sqrt(std::abs(spec.C));
        detail::FrenetState y;
        y.phi1 = root * (rev ? basis_e0() : basis_e3());
        y.tangent = basis_e1();
        y.normal = basis_e2();
        const LorentzVector phi2_0 = root * (rev ? basis_e3() : basis_e0());
        const LorentzVector phi2p_0 = basis_e4();
        const LorentzVector phi2pp_0 = inv_c * phi2_0;

        for (int j = 0; j < n; ++j) {
            const double bkj = bk.value(j);
            drift = std::max(drift, std::abs(inner(y.phi1, y.phi1) - spec.C));
            drift = std::max(drift, std::abs(inner(y.tangent, y.tangent) - 1.0));
            drift = std::max(drift, std::abs(inner(y.normal, y.normal) - 1.0));
            drift = std::max(drift, std::abs(inner(y.phi1, y.tangent)));
            drift = std::max(drift, std::abs(inner(y.phi1, y.normal)));
            drift = std::max(drift, std::abs(inner(y.tangent, y.normal)));

            LorentzVector ps = y.phi1 + phi2_0;
            psi[j] = ps;
            psi_u[j] = y.tangent;
            normal[j] = y.normal + (bkj / 2.0) * ps;
            psi_hat[j] = 0.5 * (bkj * bkj / 4.0 - inv_c) * y.phi1 +
                         0.5 * (bkj * bkj / 4.0 + inv_c) * phi2_0 + (bkj / 2.0) * y.normal;

            psi_v[j] = phi2p_0;
            psi_vv[j] = phi2pp_0;
            normal_v[j] = (bkj / 2.0) * phi2p_0;
            psi_hat_v[j] = 0.5 * (bkj * bkj / 4.0 + inv_c) * phi2p_0;

            if (j + 1 < n)
                y = detail::frenet_rk4_step(y, h, bk.value(j), prof.k_half[j], bk.value(j + 1),
                                            inv_c);
        }
        if (drift > 1e-8)
            throw std::runtime_error("frame integration drift exceeds 1e-8: |<phi1,phi1> - C| = " +
                                     std::to_string(drift));
    }

    for (const auto& v : psi)
        if (!v.finite()) throw std::runtime_error("frame assembly produced non-finite values");

    ScalarField k = 0.25 * bk;
    ScalarField c = (spec.kind == SurfaceKind::cylinder) ? 0.25 * (bk * bk)
                                                         : 0.25 * (bk * bk) + 0.5 * inv_c;

    FrameBundle fb{spec.kind,
                   spec.C,
                   spec.grid,
                   VectorField(spec.grid, std::move(psi)),
                   VectorField(spec.grid, std::move(psi_u)),
                   VectorField(spec.grid, std::move(psi_hat)),
                   VectorField(spec.grid, std::move(normal)),
                   VectorField(spec.grid, std::move(psi_v)),
                   VectorField(spec.grid, std::move(psi_vv)),
                   VectorField(spec.grid, std::move(normal_v)),
                   VectorField(spec.grid, std::move(psi_hat_v)),
                   std::move(c),
                   std::move(k),
                   bk};

    switch (spec.kind) {
        case SurfaceKind::revolution:
            fb.complement_basis = {basis_e3(), basis_e4()};
            break;
        case SurfaceKind::cone:
            fb.complement_basis = {basis_e4(), basis_e0()};
            break;
        case SurfaceKind::cylinder:
            // (U + <vinf>)-perp is framed by e3 and vinf itself; the vinf
            // pairing reads off the v0-direction component.
            fb.complement_basis = {basis_e3(), null_vinf()};
            break;
    }
    fb.v0 = null_v0();
    fb.vinf = null_vinf();
    fb.frenet_drift = drift;
    return fb;
}

struct NamedResidual {
    std::string name;
    double value = 0.0;
};

struct FrameInvariantReport {
    std::vector<NamedResidual> entries;
    double max_deviation = 0.0;
};

// Gram relations of the frame at every grid point.
inline FrameInvariantReport frame_invariants(const FrameBundle& fb) {
    FrameInvariantReport rep;
    auto add = [&](const std::string& name, const ScalarField& f, double target) {
        double worst = 0.0;
        for (double x : f.values()) worst = std::max(worst, std::abs(x - target));
        rep.entries.push_back({name, worst});
        rep.max_deviation = std::max(rep.max_deviation, worst);
    };
    add("psi.psi", inner_field(fb.psi, fb.psi), 0.0);
    add("psi_u.psi_u", inner_field(fb.psi_u, fb.psi_u), 1.0);
    add("psi.psi_u", inner_field(fb.psi, fb.psi_u), 0.0);
    add("psi_hat.psi_hat", inner_field(fb.psi_hat, fb.psi_hat), 0.0);
    add("psi_hat.psi", inner_field(fb.psi_hat, fb.psi), -1.0);
    add("psi_hat.psi_u", inner_field(fb.psi_hat, fb.psi_u), 0.0);
    add("N.N", inner_field(fb.normal, fb.normal), 1.0);
    add("N.psi", inner_field(fb.normal, fb.psi), 0.0);
    add("N.psi_u", inner_field(fb.normal, fb.psi_u), 0.0);
    add("N.psi_hat", inner_field(fb.normal, fb.psi_hat), 0.0);
    // v-line relations that make <psi_z,psi_z> = 0 and <psi_z,psi_zbar> = 1/2
    add("psi_v.psi_v", inner_field(fb.psi_v, fb.psi_v), 1.0);
    add("psi_u.psi_v", inner_field(fb.psi_u, fb.psi_v), 0.0);
    add("psi.psi_v", inner_field(fb.psi, fb.psi_v), 0.0);
    add("psi_hat.psi_v", inner_field(fb.psi_hat, fb.psi_v), 0.0);
    add("N.psi_v", inner_field(fb.normal, fb.psi_v), 0.0);
    return rep;
}

struct StructureResiduals {
    double psi_zz = 0.0;      // psi_zz + (c/2) psi - k N
    double psi_zzbar = 0.0;   // psi_zzbar + <kappa,kappa> psi - psi_hat/2
    double psi_hat_u = 0.0;   // u-part of the psi_hat_z equation
    double psi_hat_v = 0.0;   // v-part of the psi_hat_z equation
    double gauss = 0.0;       // c' - 4 (k^2)'

    [[nodiscard]] double max() const {
        return std::max({psi_zz, psi_zzbar, psi_hat_u, psi_hat_v, gauss});
    }
};

// Structure-equation residuals, u-derivatives by stencils on the assembled
// fields and v-derivatives from the stored closed forms. On the v = 0 line
// psi_zz = (psi_uu - psi_vv)/4 and psi_zzbar = (psi_uu + psi_vv)/4 since
// psi_uv = 0 for every product frame.
inline StructureResiduals structure_residuals(const FrameBundle& fb) {
    const int n = fb.grid.n;
    StructureResiduals r;

    VectorField psi_uu = fb.psi.fd_derivative(2);
    VectorField psi_hat_u = fb.psi_hat.fd_derivative(1);
    ScalarField kp = fb.k.fd_derivative(1);
    ScalarField cp = fb.c.fd_derivative(1);
    ScalarField k2 = fb.k * fb.k;
    ScalarField k2p = k2.fd_derivative(1);

    for (int j = 0; j < n; ++j) {
        const double cj = fb.c.value(j), kj = fb.k.value(j);
        LorentzVector a = 0.25 * (psi_uu.value(j) - fb.psi_vv.value(j)) +
                          (0.5 * cj) * fb.psi.value(j) - kj * fb.normal.value(j);
        LorentzVector b = 0.25 * (psi_uu.value(j) + fb.psi_vv.value(j)) +
                          (kj * kj) * fb.psi.value(j) - 0.5 * fb.psi_hat.value(j);
        LorentzVector cu = psi_hat_u.value(j) + (cj + 2.0 * kj * kj) * fb.psi_u.value(j) -
                           (2.0 * kp.value(j)) * fb.normal.value(j);
        LorentzVector cv = fb.psi_hat_v.value(j) - (cj - 2.0 * kj * kj) * fb.psi_v.value(j);
        r.psi_zz = std::max(r.psi_zz, a.max_abs());
        r.psi_zzbar = std::max(r.psi_zzbar, b.max_abs());
        r.psi_hat_u = std::max(r.psi_hat_u, cu.max_abs());
        r.psi_hat_v = std::max(r.psi_hat_v, cv.max_abs());
        r.gauss = std::max(r.gauss, std::abs(cp.value(j) - 4.0 * k2p.value(j)));
    }
    return r;
}

enum class EtaDir { u, v };

// eta along v = 0: eta_du = -psi ^ psi_u, eta_dv = +psi ^ psi_v.
inline LorentzVector eta_apply_point(const FrameBundle& fb, EtaDir dir, int j,
                                     const LorentzVector& x) {
    if (dir == EtaDir::u)
        return WedgeAction{-1.0 * fb.psi.value(j), fb.psi_u.value(j)}.apply(x);
    return WedgeAction{fb.psi.value(j), fb.psi_v.value(j)}.apply(x);
}

inline VectorField eta_apply(const FrameBundle& fb, EtaDir dir, const VectorField& x) {
    require_same_grid(fb.grid, x.grid());
    std::vector<LorentzVector> out(fb.grid.n);
    for (int j = 0; j < fb.grid.n; ++j) out[j] = eta_apply_point(fb, dir, j, x.value(j));
    return {fb.grid, std::move(out)};
}

// Cross-check of the product representation eta = (d phi1 - d phi2) ^ psi
// against the generic -psi ^ (psi_zbar dz + psi_z dzbar), applied to the
// frame vectors. For extrinsic products phi1' = psi_u up to the vinf shear,
// so this pins the sign conventions.
inline double eta_product_form_deviation(const FrameBundle& fb) {
    double worst = 0.0;
    const VectorField* probes[] = {&fb.psi, &fb.psi_u, &fb.psi_hat, &fb.normal, &fb.psi_v};
    for (const VectorField* x : probes)
        for (int j = 0; j < fb.grid.n; ++j) {
            LorentzVector gu = eta_apply_point(fb, EtaDir::u, j, x->value(j));
            LorentzVector pu = WedgeAction{fb.psi_u.value(j), fb.psi.value(j)}.apply(x->value(j));
            LorentzVector gv = eta_apply_point(fb, EtaDir::v, j, x->value(j));
            LorentzVector pv = WedgeAction{-1.0 * fb.psi_v.value(j), fb.psi.value(j)}.apply(x->value(j));
            worst = std::max({worst, (gu - pu).max_abs(), (gv - pv).max_abs()});
        }
    return worst;
}

// d(eta) = 0 on the v = 0 line. With psi_uv = 0,
//   (d eta)(du,dv) x = d/du(eta_dv x) - eta_dv(x_u) + (psi_v ^ psi_u) x,
// everything evaluable from stored closed-form v-data plus stencils.
inline double deta_residual(const FrameBundle& fb) {
    double worst = 0.0;
    const VectorField* probes[] = {&fb.psi, &fb.psi_u, &fb.psi_hat, &fb.normal};
    for (const VectorField* x : probes) {
        VectorField eta_v_x = eta_apply(fb, EtaDir::v, *x);
        VectorField d_eta_v_x = eta_v_x.fd_derivative(1);
        VectorField x_u = x->fd_derivative(1);
        for (int j = 0; j < fb.grid.n; ++j) {
            LorentzVector res = d_eta_v_x.value(j) -
                                eta_apply_point(fb, EtaDir::v, j, x_u.value(j)) +
                                WedgeAction{fb.psi_v.value(j), fb.psi_u.value(j)}.apply(x->value(j));
            worst = std::max(worst, res.max_abs());
        }
    }
    return worst;
}

}  // namespace isoq
