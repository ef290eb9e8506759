#include <doctest.h>

#include <cmath>
#include <memory>

#include "corpus.hpp"
#include "isoq/fcq.hpp"

using namespace isoq;

namespace {

std::shared_ptr<const FrameBundle> frame_of(const SurfaceSpec& s, int jets = 18) {
    return std::make_shared<const FrameBundle>(build_frame(s, jets));
}

RSeries r_with(std::initializer_list<double> coeff) {
    RSeries r;
    r.coeff = coeff;
    return r;
}

}  // namespace

TEST_CASE("first coefficients reproduce the closed forms") {
    // gamma_{-1} = 2k, delta_{-1} = r_{-1}/2, beta_{-1} = -2k',
    // alpha_{-1} = k'' + 4k^3 (all with r_0 = 1)
    auto fb = frame_of(corpus::elastic_revolution());
    FCQSeries s = extend(fb, r_with({1.0, 0.6}), 2);
    ScalarField kp = fb->k.derivative(1);
    ScalarField kpp = fb->k.derivative(2);
    for (int j = 0; j < fb->grid.n; ++j) {
        const double k = fb->k.value(j);
        CHECK(s.gamma(-1).value(j) == 2.0 * k);
        CHECK(s.delta(-1).value(j) == 0.3);
        CHECK(s.beta(-1).value(j) == doctest::Approx(-2.0 * kp.value(j)).epsilon(1e-13));
        CHECK(s.alpha(-1).value(j) ==
              doctest::Approx(kpp.value(j) + 4.0 * k * k * k).epsilon(1e-12));
        CHECK(s.gamma(0).value(j) == 0.0);
        CHECK(s.delta(0).value(j) == 1.0);
    }
}

TEST_CASE("round cylinder closed-form series values") {
    // bold k = 2: k = 1/2, c = 1, r = (1,0,...):
    //   gamma_{-2} = 4 k_zz + (2c + r_{-1}) k = 1
    //   <p_{-1},p_{-1}> = -1,  delta_{-2} = 1/2
    auto fb = frame_of(corpus::round_cylinder(2.0));
    FCQSeries s = extend(fb, RSeries{}, 6);
    ScalarField g11 = gram_product(s, -1, -1);
    for (int j = 0; j < fb->grid.n; ++j) {
        CHECK(s.gamma(-1).value(j) == 1.0);
        CHECK(s.gamma(-2).value(j) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(g11.value(j) == doctest::Approx(-1.0).epsilon(1e-13));
        CHECK(s.delta(-2).value(j) == doctest::Approx(0.5).epsilon(1e-13));
    }
}

TEST_CASE("flat profile collapses the series onto the normal direction") {
    auto fb = frame_of(corpus::straight_cylinder());
    SUBCASE("default r: everything below the top vanishes") {
        FCQSeries s = extend(fb, RSeries{}, 4);
        for (int i = -1; i >= -4; --i) {
            CHECK(s.gamma(i).max_abs() == 0.0);
            CHECK(s.p(i).max_abs() == 0.0);
        }
    }
    SUBCASE("nonzero r_{-1}: p_{-1} = (r_{-1}/2) N, then the pair sum enters") {
        FCQSeries s = extend(fb, r_with({1.0, 0.6, 0.0}), 3);
        for (int j = 0; j < fb->grid.n; ++j) {
            CHECK((s.p(-1).value(j) - 0.3 * fb->normal.value(j)).max_abs() < 1e-15);
            // delta_{-2} = (r_{-2} - delta_{-1}^2)/2 = -0.045
            CHECK(s.delta(-2).value(j) == doctest::Approx(-0.045).epsilon(1e-14));
        }
        // N is a constant vector here, so every parallelism row is exactly zero
        for (const auto& row : parallelism_residual(s)) {
            CHECK(row.residual_u == 0.0);
            CHECK(row.residual_v == 0.0);
        }
    }
}

TEST_CASE("conservation coefficients are grid-constant and reproduce r") {
    RSeries r = r_with({1.0, 0.25, -0.4, 0.1, 0.0, 0.0, 0.0});
    for (const SurfaceSpec& spec :
         {corpus::round_cylinder(), corpus::elastic_cylinder(), corpus::elastic_revolution(),
          corpus::elastic_cone()}) {
        FCQSeries s = extend(frame_of(spec), r, 6);
        for (const ConservationRow& row : conservation_residual(s)) {
            CAPTURE(row.m);
            CHECK(row.deviation < 1e-12);
            CHECK(row.offset < 1e-12);
        }
    }
}

TEST_CASE("parallelism residuals: analytic profiles") {
    RSeries r = r_with({1.0, 0.25, -0.4, 0.1, 0.0, 0.0, 0.0});
    auto worst = [&](const SurfaceSpec& spec) {
        FCQSeries s = extend(frame_of(spec), r, 6);
        double w = 0.0;
        for (const auto& row : parallelism_residual(s))
            w = std::max({w, row.residual_u, row.residual_v});
        return w;
    };
    CHECK(worst(corpus::round_cylinder()) < 2e-8);
    CHECK(worst(corpus::elastic_cylinder()) < 1e-9);
    CHECK(worst(corpus::elastic_revolution()) < 1e-9);
    CHECK(worst(corpus::elastic_cone()) < 1e-9);
}

TEST_CASE("parallelism residuals: sampled closed profile at depth 4") {
    FCQSeries s = extend(frame_of(corpus::closed_sampled_cylinder()), RSeries{}, 4);
    double w = 0.0;
    for (const auto& row : parallelism_residual(s))
        w = std::max({w, row.residual_u, row.residual_v});
    CHECK(w < 1e-3);
}

TEST_CASE("normal-component consistency certifies the algebraic delta route") {
    FCQSeries cyl = extend(frame_of(corpus::round_cylinder()), RSeries{}, 6);
    for (const auto& row : consistency_q_residual(cyl)) CHECK(row.residual < 1e-12);

    FCQSeries cone = extend(frame_of(corpus::elastic_cone()), r_with({1.0, 0.25}), 4);
    for (const auto& row : consistency_q_residual(cone)) {
        CAPTURE(row.i);
        CHECK(row.residual < 1e-6);
    }
    // i = -1 row is an exact algebraic identity: delta' = 0, gamma'k = gamma k'
    CHECK(consistency_q_residual(cone)[1].residual < 1e-13);
}

TEST_CASE("eta pairing identity") {
    FCQSeries s = extend(frame_of(corpus::elastic_cone()), RSeries{}, 5);
    SUBCASE("antisymmetry: i = j vanishes") {
        CHECK(eta_pairing_identity(s, -2, -2) < 1e-11);
    }
    SUBCASE("(i,j) = (-1,0): both sides vanish since gamma_0 = 0") {
        CHECK(eta_pairing_identity(s, -1, 0) < 1e-11);
    }
    SUBCASE("(i,j) = (-2,-1) on an elastic profile") {
        CHECK(eta_pairing_identity(s, -2, -1) < 1e-8);
    }
    SUBCASE("all pairs to depth -4") {
        for (int i = 0; i >= -4; --i)
            for (int j = 0; j >= -4; --j) CHECK(eta_pairing_identity(s, i, j) < 1e-8);
    }
}

TEST_CASE("eta action on assembled coefficients has the closed form") {
    // eta_du p_i = gamma_i psi_u - gamma_i' psi and eta_dv p_i = -gamma_i psi_v
    auto fb = frame_of(corpus::elastic_cylinder());
    FCQSeries s = extend(fb, RSeries{}, 3);
    for (int i = -1; i >= -3; --i) {
        ScalarField gp = s.gamma(i).derivative(1);
        double worst_u = 0.0, worst_v = 0.0;
        for (int j = 0; j < fb->grid.n; ++j) {
            LorentzVector eu = eta_apply_point(*fb, EtaDir::u, j, s.p(i).value(j));
            LorentzVector expect_u = s.gamma(i).value(j) * fb->psi_u.value(j) -
                                     gp.value(j) * fb->psi.value(j);
            LorentzVector ev = eta_apply_point(*fb, EtaDir::v, j, s.p(i).value(j));
            LorentzVector expect_v = (-s.gamma(i).value(j)) * fb->psi_v.value(j);
            worst_u = std::max(worst_u, (eu - expect_u).max_abs());
            worst_v = std::max(worst_v, (ev - expect_v).max_abs());
        }
        CHECK(worst_u < 1e-9);
        CHECK(worst_v < 1e-9);
    }
}

TEST_CASE("sign flip negates every coefficient bit-for-bit") {
    auto fb = frame_of(corpus::elastic_cone());
    RSeries r = r_with({1.0, 0.25, -0.4});
    FCQSeries plus = extend(fb, r, 5, +1.0);
    FCQSeries minus = extend(fb, r, 5, -1.0);
    for (int i = 0; i >= -5; --i) {
        for (int j = 0; j < fb->grid.n; ++j) {
            CHECK(plus.gamma(i).value(j) == -minus.gamma(i).value(j));
            CHECK(plus.delta(i).value(j) == -minus.delta(i).value(j));
            CHECK(plus.alpha(i).value(j) == -minus.alpha(i).value(j));
            CHECK(plus.beta(i).value(j) == -minus.beta(i).value(j));
            for (int c = 0; c < 5; ++c)
                CHECK(plus.p(i).value(j)[c] == -minus.p(i).value(j)[c]);
        }
    }
}

TEST_CASE("constant shifts keep every residual family small") {
    FCQSeries s = extend(frame_of(corpus::elastic_revolution()), RSeries{}, 5);
    FCQSeries sh = shift(s, 0.37);
    CHECK(sh.gamma(0).max_abs() == 0.0);
    for (const auto& row : conservation_residual(sh)) {
        CHECK(row.deviation < 1e-12);
        CHECK(row.offset < 1e-12);
    }
    for (const auto& row : parallelism_residual(sh))
        CHECK(std::max(row.residual_u, row.residual_v) < 1e-8);
    for (const auto& row : consistency_q_residual(sh)) CHECK(row.residual < 1e-8);
}

TEST_CASE("property sweep: random smooth profiles keep every residual family small") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> amp(0.2, 0.5), om(0.7, 2.0), ph(0.0, 6.28);
    for (int t = 0; t < 12; ++t) {
        ProfileSpec p;
        p.kind = ProfileKind::formula;
        p.formula.family = "sin";
        p.formula.offset = 1.3;
        p.formula.terms = {{amp(rng), om(rng), ph(rng)}, {amp(rng) * 0.5, om(rng), ph(rng)}};
        const SurfaceKind kind = t % 3 == 0 ? SurfaceKind::revolution
                                            : (t % 3 == 1 ? SurfaceKind::cone : SurfaceKind::cylinder);
        const double C =
            kind == SurfaceKind::revolution ? -1.0 : (kind == SurfaceKind::cone ? 1.0 : 0.0);
        CAPTURE(t);
        FCQSeries s = extend(
            frame_of(corpus::surface_with(kind, C, p, corpus::grid_open(512, 0.0, 3.0)), 16),
            r_with({1.0, 0.3, -0.2, 0.05, 0.0}), 4);
        for (const auto& row : parallelism_residual(s))
            CHECK(std::max(row.residual_u, row.residual_v) < 1e-6);
        for (const auto& row : conservation_residual(s)) {
            CHECK(row.deviation < 1e-12);
            CHECK(row.offset < 1e-12);
        }
        for (const auto& row : consistency_q_residual(s)) CHECK(row.residual < 1e-6);
    }
}

TEST_CASE("recursion guards") {
    auto fb = frame_of(corpus::round_cylinder());
    CHECK_THROWS_WITH_AS(extend(fb, r_with({-1.0}), 3), "r0 must be positive",
                         std::invalid_argument);
    CHECK_THROWS_AS(extend(fb, RSeries{}, 0), std::invalid_argument);

    auto sampled = frame_of(corpus::closed_sampled_cylinder());
    CHECK_THROWS_WITH_AS(extend(sampled, RSeries{}, 5),
                         doctest::Contains("insufficient smoothness"), std::runtime_error);
}

TEST_CASE("gram product of the zero coefficient row vanishes") {
    FCQSeries s = extend(frame_of(corpus::straight_cylinder()), RSeries{}, 3);
    // p_{-1} = 0 here, so any pairing against it is identically zero
    CHECK(gram_product(s, -1, -1).max_abs() == 0.0);
    CHECK(gram_product(s, -1, 0).max_abs() == 0.0);
    // <p_0,p_0> = r_0
    CHECK(gram_product(s, 0, 0).value(0) == 1.0);
}
