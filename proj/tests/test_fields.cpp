#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "isoq/fields.hpp"

using namespace isoq;

namespace {

ScalarField sample_function(const GridSpec& g, double (*f)(double)) {
    std::vector<double> v(g.n);
    for (int j = 0; j < g.n; ++j) v[j] = f(g.point(j));
    return {g, std::move(v)};
}

}  // namespace

TEST_CASE("grid invariants") {
    CHECK_THROWS(GridSpec{8, 0.0, 1.0, false}.validate());
    CHECK_THROWS(GridSpec{32, 1.0, 1.0, false}.validate());
    GridSpec p{64, 0.0, 1.0, true};
    CHECK(p.spacing() == doctest::Approx(1.0 / 64));
    GridSpec o{64, 0.0, 1.0, false};
    CHECK(o.spacing() == doctest::Approx(1.0 / 63));
}

TEST_CASE("derivative of sin on a periodic grid is cos to fourth order") {
    auto worst_err = [](int n) {
        GridSpec g{n, 0.0, 2.0 * M_PI, true};
        ScalarField f = sample_function(g, [](double u) { return std::sin(u); });
        ScalarField d = f.fd_derivative(1);
        double worst = 0.0;
        for (int j = 0; j < g.n; ++j)
            worst = std::max(worst, std::abs(d.value(j) - std::cos(g.point(j))));
        return worst;
    };
    const double h = 2.0 * M_PI / 256;
    CHECK(worst_err(256) < 2.0 * h * h * h * h / 30.0);  // classic 5-point bound
    CHECK(worst_err(128) / worst_err(256) > 10.0);       // fourth-order decay
}

TEST_CASE("derivatives of a constant vanish exactly at every order") {
    GridSpec g{64, -1.0, 3.0, false};
    ScalarField f = ScalarField::constant(g, 3.0, 0);
    for (int m = 1; m <= 4; ++m) {
        ScalarField d = f.fd_derivative(m);
        for (int j = 0; j < g.n; ++j) CHECK(d.value(j) == 0.0);
    }
}

TEST_CASE("second derivative of u^2 is exactly 2 including boundary rows") {
    GridSpec g{48, 0.0, 1.0, false};
    ScalarField f = sample_function(g, [](double u) { return u * u; });
    ScalarField d = f.fd_derivative(2);
    for (int j = 0; j < g.n; ++j) CHECK(d.value(j) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("iterated first derivatives agree with the direct second derivative") {
    // O(h^4) composition; the constant is dominated by the one-sided
    // boundary rows, so assert the order by halving h as well.
    auto worst_err = [](int n) {
        GridSpec g{n, 0.0, 3.0, false};
        ScalarField f = sample_function(g, [](double u) { return std::sin(2.0 * u) + u * u; });
        ScalarField d11 = f.fd_derivative(1).fd_derivative(1);
        ScalarField d2 = f.fd_derivative(2);
        double worst = 0.0;
        for (int j = 0; j < g.n; ++j) worst = std::max(worst, std::abs(d11.value(j) - d2.value(j)));
        return worst;
    };
    CHECK(worst_err(200) < 5e-5);
    CHECK(worst_err(100) / worst_err(200) > 8.0);
}

TEST_CASE("jet arithmetic propagates exact derivatives") {
    GridSpec g{100, 0.0, 2.0, false};
    const int J = 6;
    std::vector<std::vector<double>> jets(J + 1, std::vector<double>(g.n));
    for (int m = 0; m <= J; ++m)
        for (int j = 0; j < g.n; ++j)
            jets[m][j] = std::pow(2.0, m) * std::sin(2.0 * g.point(j) + m * M_PI / 2.0);
    ScalarField f(g, jets);  // sin(2u) with exact jets
    CHECK(f.source() == DerivSource::analytic);

    // (f*f)' = 2 f f' pointwise, through the Leibniz jets
    ScalarField sq = f * f;
    ScalarField d = sq.derivative(1);
    for (int j = 0; j < g.n; ++j)
        CHECK(d.value(j) ==
              doctest::Approx(2.0 * std::sin(2.0 * g.point(j)) * 2.0 * std::cos(2.0 * g.point(j)))
                  .epsilon(1e-12));

    // analytic and stencil paths agree to fourth order
    ScalarField dfd = f.fd_derivative(2);
    ScalarField dan = f.derivative(2);
    double worst = 0.0;
    for (int j = 0; j < g.n; ++j) worst = std::max(worst, std::abs(dfd.value(j) - dan.value(j)));
    const double h = g.spacing();
    CHECK(worst < 100.0 * h * h * h * h * 32.0);  // 100 h^4 max|f^(5)| bound
}

TEST_CASE("constancy test") {
    GridSpec g{32, 0.0, 1.0, false};
    ConstancyResult r = constancy_test(ScalarField::constant(g, 3.0, 0), 1e-10);
    CHECK(r.is_constant);
    CHECK(r.value == doctest::Approx(3.0));
    CHECK(r.deviation == 0.0);

    // linear ramp on [0,1]: mean 1/2, worst excursion 1/2, normalizer max(1,1/2)
    ScalarField ramp = sample_function(g, [](double u) { return u; });
    r = constancy_test(ramp, 1e-8);
    CHECK_FALSE(r.is_constant);
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.deviation == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("least-squares constants") {
    GridSpec g{64, 0.0, 2.0, false};
    ScalarField k = sample_function(g, [](double u) { return 1.0 + 0.5 * std::sin(u); });

    SUBCASE("collinear target fits to zero residual") {
        FitResult f = fit_constants({k}, -3.0 * k);
        CHECK(f.coefficients[0] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(f.residual < 1e-12);
        CHECK_FALSE(f.degenerate);
    }
    SUBCASE("non-collinear target leaves a residual") {
        FitResult f = fit_constants({k}, k * k);
        CHECK(f.residual > 1e-3);
    }
    SUBCASE("two independent basis fields recover both constants") {
        ScalarField s = sample_function(g, [](double u) { return std::sin(u); });
        ScalarField c = sample_function(g, [](double u) { return std::cos(u); });
        FitResult f = fit_constants({s, c}, -2.0 * s + 3.0 * c);
        CHECK(f.coefficients[0] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(f.coefficients[1] == doctest::Approx(-3.0).epsilon(1e-12));
        CHECK(f.residual < 1e-12);
    }
    SUBCASE("rank-deficient normal equations flag degenerate, return minimum norm") {
        FitResult f = fit_constants({k, 2.0 * k}, -3.0 * k);
        CHECK(f.degenerate);
        // minimum-norm solution of c1 + 2 c2 = 3
        CHECK(f.coefficients[0] == doctest::Approx(0.6).epsilon(1e-10));
        CHECK(f.coefficients[1] == doctest::Approx(1.2).epsilon(1e-10));
        CHECK(f.residual < 1e-10);
    }
}

TEST_CASE("csv export uses 17 significant digits and round-trips") {
    GridSpec g{16, 0.0, 1.0, false};
    std::vector<double> v(g.n);
    for (int j = 0; j < g.n; ++j) v[j] = (j + 1) / 3.0;
    ScalarField f(g, v);
    std::ostringstream os;
    write_csv(os, f);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    CHECK(header == "u,value");
    std::istringstream again(os.str());
    std::vector<double> back = read_csv_column(again, "value");
    REQUIRE(back.size() == v.size());
    for (int j = 0; j < g.n; ++j) CHECK(back[j] == v[j]);
}
