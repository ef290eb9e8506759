#include <doctest.h>

#include <cmath>
#include <random>

#include "isoq/lorentz.hpp"

using namespace isoq;

TEST_CASE("signature (4,1) pairing on the fixed basis") {
    CHECK(inner(basis_e1(), basis_e1()) == 1.0);
    CHECK(inner(basis_e2(), basis_e2()) == 1.0);
    CHECK(inner(basis_e3(), basis_e3()) == 1.0);
    CHECK(inner(basis_e4(), basis_e4()) == 1.0);
    CHECK(inner(basis_e0(), basis_e0()) == -1.0);
    CHECK(inner(basis_e1(), basis_e0()) == 0.0);
}

TEST_CASE("pairing flips sign on the timelike component only") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int t = 0; t < 200; ++t) {
        LorentzVector a, b;
        for (int i = 0; i < 5; ++i) {
            a[i] = dist(rng);
            b[i] = dist(rng);
        }
        double expect = -a[4] * b[4];
        for (int i = 0; i < 4; ++i) expect += a[i] * b[i];
        CHECK(inner(a, b) == doctest::Approx(expect).epsilon(1e-14));
        CHECK(inner(a, b) == inner(b, a));
    }
}

TEST_CASE("cylinder null pair: <v0,v0> = <vinf,vinf> = 0, <v0,vinf> = -1") {
    CHECK(std::abs(inner(null_v0(), null_v0())) < 1e-15);
    CHECK(std::abs(inner(null_vinf(), null_vinf())) < 1e-15);
    CHECK(inner(null_v0(), null_vinf()) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("wedge action on orthonormal pairs") {
    WedgeAction w{basis_e1(), basis_e2()};
    LorentzVector r = w.apply(basis_e1());
    CHECK((r - basis_e2()).max_abs() == 0.0);
    CHECK(w.apply(basis_e3()).max_abs() == 0.0);
}

TEST_CASE("wedge annihilates a null vector orthogonal to both factors") {
    // psi null, <psi, psi_u> = 0: (psi ^ psi_u) psi = 0
    LorentzVector psi{{1, 0, 0, 0, 1}};
    LorentzVector psi_u = basis_e2();
    CHECK(std::abs(inner(psi, psi)) < 1e-15);
    CHECK(std::abs(inner(psi, psi_u)) < 1e-15);
    CHECK(WedgeAction{psi, psi_u}.apply(psi).max_abs() == 0.0);
}

TEST_CASE("wedge actions are skew-adjoint") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
        LorentzVector u, v, w, x;
        for (int i = 0; i < 5; ++i) {
            u[i] = dist(rng);
            v[i] = dist(rng);
            w[i] = dist(rng);
            x[i] = dist(rng);
        }
        WedgeAction a{u, v};
        const double s = inner(a.apply(w), x) + inner(w, a.apply(x));
        CHECK(std::abs(s) < 1e-13);
    }
}

TEST_CASE("space form classification") {
    SpaceFormClass s = classify_space_form(basis_e0());
    CHECK(s.kind == SpaceFormKind::spherical);
    CHECK(s.curvature == doctest::Approx(1.0));

    s = classify_space_form(null_vinf());
    CHECK(s.kind == SpaceFormKind::euclidean);
    CHECK(s.curvature == 0.0);

    s = classify_space_form(basis_e1());
    CHECK(s.kind == SpaceFormKind::hyperbolic);
    CHECK(s.curvature == doctest::Approx(-1.0));

    CHECK_THROWS_AS(classify_space_form(LorentzVector{}), std::invalid_argument);
}

TEST_CASE("classification null band") {
    LorentzVector nearly_null{{1, 0, 0, 0, 1.0 + 1e-9}};
    CHECK(classify_space_form(nearly_null).kind == SpaceFormKind::spherical);
    CHECK(classify_space_form(nearly_null, 1e-6).kind == SpaceFormKind::euclidean);
}
