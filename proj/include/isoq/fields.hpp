#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isoq/lorentz.hpp"

namespace isoq {

// 1-D profile grid in u. Periodic grids cover [u_min, u_max) with spacing
// (u_max-u_min)/n; open grids cover [u_min, u_max] with spacing
// (u_max-u_min)/(n-1).
struct GridSpec {
    int n = 0;
    double u_min = 0.0;
    double u_max = 0.0;
    bool periodic = false;

    void validate() const {
        if (n < 16) throw std::invalid_argument("grid: n must be at least 16");
        if (!(u_max > u_min)) throw std::invalid_argument("grid: u_max must exceed u_min");
    }
    [[nodiscard]] double spacing() const {
        return periodic ? (u_max - u_min) / n : (u_max - u_min) / (n - 1);
    }
    [[nodiscard]] double point(int j) const { return u_min + j * spacing(); }

    bool operator==(const GridSpec&) const = default;
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b) {
    if (!(a == b)) throw std::invalid_argument("field grids do not match");
}

namespace fd {

// Fornberg's recursion: weights for the m-th derivative at x0 from nodes
// x[0..n). Exact for polynomials of degree < n.
inline void weights(double x0, const double* x, int n, int m, double* w) {
    std::vector<double> c(static_cast<std::size_t>(n) * (m + 1), 0.0);
    auto C = [&](int i, int j) -> double& { return c[static_cast<std::size_t>(i) * (m + 1) + j]; };
    double c1 = 1.0;
    double c4 = x[0] - x0;
    C(0, 0) = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int s = mn; s >= 1; --s)
                    C(i, s) = c1 * (s * C(i - 1, s - 1) - c5 * C(i - 1, s)) / c2;
                C(i, 0) = -c1 * c5 * C(i - 1, 0) / c2;
            }
            for (int s = mn; s >= 1; --s) C(j, s) = (c4 * C(j, s) - s * C(j, s - 1)) / c3;
            C(j, 0) = c4 * C(j, 0) / c3;
        }
        c1 = c2;
    }
    for (int i = 0; i < n; ++i) w[i] = C(i, m);
}

// Stencil widths at 4th-order accuracy (5th near boundaries, where the
// extra node costs nothing and buys a smaller error constant).
inline int central_width(int m) { return (m % 2 == 1) ? m + 4 : m + 3; }
inline int edge_width(int m) { return m + 5; }

// m-th derivative of samples on g, order-4 stencils, periodic wrap or
// one-sided rows at open boundaries. Constants are annihilated exactly:
// the weight at the evaluation node absorbs the zero-sum defect.
inline std::vector<double> derivative_samples(const GridSpec& g, std::span<const double> f, int m) {
    if (m < 1 || m > 4)
        throw std::invalid_argument("finite-difference derivative order must be in 1..4");
    const int n = g.n;
    const double h = g.spacing();
    const int wc = central_width(m);
    const int we = edge_width(m);
    if (n < (g.periodic ? wc : std::max(wc, we)))
        throw std::invalid_argument("grid too small for the requested stencil");

    auto make = [&](double x0, int npts, std::vector<double>& w, int own) {
        std::vector<double> x(npts);
        for (int i = 0; i < npts; ++i) x[i] = i * h;
        w.assign(npts, 0.0);
        weights(x0, x.data(), npts, m, w.data());
        double s = 0.0;
        for (double wi : w) s += wi;
        w[own] -= s;
    };

    // The accumulation subtracts the center sample first: constants map to
    // an exact zero and the cancellation error of near-equal samples drops.
    std::vector<double> out(n, 0.0);
    const int p = wc / 2;
    std::vector<double> w;
    make(p * h, wc, w, p);

    if (g.periodic) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int i = 0; i < wc; ++i) {
                int idx = (j + i - p) % n;
                if (idx < 0) idx += n;
                acc += w[i] * (f[idx] - f[j]);
            }
            out[j] = acc;
        }
        return out;
    }

    for (int j = p; j < n - p; ++j) {
        double acc = 0.0;
        for (int i = 0; i < wc; ++i) acc += w[i] * (f[j - p + i] - f[j]);
        out[j] = acc;
    }
    std::vector<double> wb;
    for (int j = 0; j < p; ++j) {
        make(j * h, we, wb, j);
        double acc = 0.0;
        for (int i = 0; i < we; ++i) acc += wb[i] * (f[i] - f[j]);
        out[j] = acc;
    }
    for (int j = n - p; j < n; ++j) {
        const int start = n - we;
        make((j - start) * h, we, wb, j - start);
        double acc = 0.0;
        for (int i = 0; i < we; ++i) acc += wb[i] * (f[start + i] - f[j]);
        out[j] = acc;
    }
    return out;
}

}  // namespace fd

enum class DerivSource { analytic, finite_difference };

// Real v-independent function sampled along the profile grid. A field may
// carry a derivative jet: jet(m)[j] is the exact m-th derivative at grid
// node j. Arithmetic propagates jets (Leibniz), so fields built from
// analytic generators keep exact derivatives to the available order.
// Fields are immutable after construction.
class ScalarField {
public:
    ScalarField(GridSpec g, std::vector<double> samples) : grid_(g) {
        g.validate();
        if (static_cast<int>(samples.size()) != g.n)
            throw std::invalid_argument("sample count does not match grid");
        jets_.push_back(std::move(samples));
    }
    ScalarField(GridSpec g, std::vector<std::vector<double>> jets) : grid_(g) {
        g.validate();
        if (jets.empty()) throw std::invalid_argument("field needs at least value samples");
        for (const auto& row : jets)
            if (static_cast<int>(row.size()) != g.n)
                throw std::invalid_argument("jet row size does not match grid");
        jets_ = std::move(jets);
    }

    static ScalarField constant(const GridSpec& g, double value, int jet_order = 6) {
        std::vector<std::vector<double>> jets(jet_order + 1, std::vector<double>(g.n, 0.0));
        std::fill(jets[0].begin(), jets[0].end(), value);
        return {g, std::move(jets)};
    }

    [[nodiscard]] const GridSpec& grid() const { return grid_; }
    [[nodiscard]] int size() const { return grid_.n; }
    [[nodiscard]] int jet_order() const { return static_cast<int>(jets_.size()) - 1; }
    [[nodiscard]] DerivSource source() const {
        return jet_order() >= 1 ? DerivSource::analytic : DerivSource::finite_difference;
    }

    [[nodiscard]] double value(int j) const { return jets_[0][j]; }
    [[nodiscard]] const std::vector<double>& values() const { return jets_[0]; }
    [[nodiscard]] double jet(int m, int j) const { return jets_[m][j]; }

    // m-th derivative field. Uses the attached jet as far as it reaches and
    // finishes with 4th-order stencils; a pure-FD request can be forced with
    // fd_derivative. The FD tail is limited to order 4 per pass.
    [[nodiscard]] ScalarField derivative(int m) const {
        if (m < 0) throw std::invalid_argument("derivative order must be non-negative");
        if (m == 0) return *this;
        const int ja = std::min(m, jet_order());
        std::vector<std::vector<double>> shifted(jets_.begin() + ja, jets_.end());
        ScalarField out(grid_, std::move(shifted));
        int rest = m - ja;
        while (rest > 0) {
            const int step = std::min(rest, 4);
            out = ScalarField(grid_, fd::derivative_samples(grid_, out.values(), step));
            rest -= step;
        }
        return out;
    }

    [[nodiscard]] ScalarField fd_derivative(int m) const {
        if (m < 1 || m > 4)
            throw std::invalid_argument("finite-difference derivative order must be in 1..4");
        return {grid_, fd::derivative_samples(grid_, jets_[0], m)};
    }

    [[nodiscard]] bool finite() const {
        for (const auto& row : jets_)
            for (double x : row)
                if (!std::isfinite(x)) return false;
        return true;
    }
    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (double x : jets_[0]) m = std::max(m, std::abs(x));
        return m;
    }
    [[nodiscard]] double min_abs() const {
        double m = std::abs(jets_[0][0]);
        for (double x : jets_[0]) m = std::min(m, std::abs(x));
        return m;
    }
    [[nodiscard]] double mean() const {
        double s = 0.0;
        for (double x : jets_[0]) s += x;
        return s / grid_.n;
    }

    friend ScalarField operator+(const ScalarField& a, const ScalarField& b) {
        return combine(a, b, +1.0);
    }
    friend ScalarField operator-(const ScalarField& a, const ScalarField& b) {
        return combine(a, b, -1.0);
    }
    friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
        require_same_grid(a.grid_, b.grid_);
        const int n = a.grid_.n;
        const int J = std::min(a.jet_order(), b.jet_order());
        std::vector<std::vector<double>> jets(J + 1, std::vector<double>(n, 0.0));
        std::vector<std::vector<double>> binom(J + 1, std::vector<double>(J + 1, 0.0));
        for (int mm = 0; mm <= J; ++mm) {
            binom[mm][0] = 1.0;
            for (int r = 1; r <= mm; ++r)
                binom[mm][r] = binom[mm - 1][r - 1] + (r <= mm - 1 ? binom[mm - 1][r] : 0.0);
        }
        for (int mm = 0; mm <= J; ++mm)
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int r = 0; r <= mm; ++r) acc += binom[mm][r] * a.jets_[r][j] * b.jets_[mm - r][j];
                jets[mm][j] = acc;
            }
        return {a.grid_, std::move(jets)};
    }
    friend ScalarField operator*(double s, const ScalarField& a) {
        std::vector<std::vector<double>> jets = a.jets_;
        for (auto& row : jets)
            for (double& x : row) x *= s;
        return {a.grid_, std::move(jets)};
    }
    friend ScalarField operator*(const ScalarField& a, double s) { return s * a; }
    friend ScalarField operator-(const ScalarField& a) { return -1.0 * a; }
    friend ScalarField operator+(const ScalarField& a, double s) {
        std::vector<std::vector<double>> jets = a.jets_;
        for (double& x : jets[0]) x += s;
        return {a.grid_, std::move(jets)};
    }
    friend ScalarField operator+(double s, const ScalarField& a) { return a + s; }
    friend ScalarField operator-(const ScalarField& a, double s) { return a + (-s); }

private:
    static ScalarField combine(const ScalarField& a, const ScalarField& b, double sign) {
        require_same_grid(a.grid_, b.grid_);
        const int J = std::min(a.jet_order(), b.jet_order());
        std::vector<std::vector<double>> jets(J + 1, std::vector<double>(a.grid_.n, 0.0));
        for (int mm = 0; mm <= J; ++mm)
            for (int j = 0; j < a.grid_.n; ++j) jets[mm][j] = a.jets_[mm][j] + sign * b.jets_[mm][j];
        return {a.grid_, std::move(jets)};
    }

    GridSpec grid_;
    std::vector<std::vector<double>> jets_;
};

// Ambient-vector field along the profile. Values only; derivatives of
// assembled vector fields are always taken by finite differences.
class VectorField {
public:
    VectorField(GridSpec g, std::vector<LorentzVector> samples)
        : grid_(g), samples_(std::move(samples)) {
        g.validate();
        if (static_cast<int>(samples_.size()) != g.n)
            throw std::invalid_argument("sample count does not match grid");
    }
    static VectorField constant(const GridSpec& g, const LorentzVector& v) {
        return {g, std::vector<LorentzVector>(g.n, v)};
    }

    [[nodiscard]] const GridSpec& grid() const { return grid_; }
    [[nodiscard]] int size() const { return grid_.n; }
    [[nodiscard]] const LorentzVector& value(int j) const { return samples_[j]; }

    [[nodiscard]] ScalarField component(int c) const {
        std::vector<double> v(grid_.n);
        for (int j = 0; j < grid_.n; ++j) v[j] = samples_[j][c];
        return {grid_, std::move(v)};
    }

    [[nodiscard]] VectorField fd_derivative(int m) const {
        std::vector<LorentzVector> out(grid_.n);
        for (int c = 0; c < 5; ++c) {
            std::vector<double> comp(grid_.n);
            for (int j = 0; j < grid_.n; ++j) comp[j] = samples_[j][c];
            auto d = fd::derivative_samples(grid_, comp, m);
            for (int j = 0; j < grid_.n; ++j) out[j][c] = d[j];
        }
        return {grid_, std::move(out)};
    }

    [[nodiscard]] bool finite() const {
        for (const auto& v : samples_)
            if (!v.finite()) return false;
        return true;
    }
    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (const auto& v : samples_) m = std::max(m, v.max_abs());
        return m;
    }
    [[nodiscard]] LorentzVector mean() const {
        LorentzVector m{};
        for (const auto& v : samples_) m += v;
        return m * (1.0 / grid_.n);
    }

    friend VectorField operator+(VectorField a, const VectorField& b) {
        require_same_grid(a.grid_, b.grid_);
        for (int j = 0; j < a.grid_.n; ++j) a.samples_[j] += b.samples_[j];
        return a;
    }
    friend VectorField operator-(VectorField a, const VectorField& b) {
        require_same_grid(a.grid_, b.grid_);
        for (int j = 0; j < a.grid_.n; ++j) a.samples_[j] -= b.samples_[j];
        return a;
    }
    friend VectorField operator*(const ScalarField& s, const VectorField& v) {
        require_same_grid(s.grid(), v.grid_);
        std::vector<LorentzVector> out(v.grid_.n);
        for (int j = 0; j < v.grid_.n; ++j) out[j] = s.value(j) * v.samples_[j];
        return {v.grid_, std::move(out)};
    }
    friend VectorField operator*(double s, VectorField v) {
        for (auto& x : v.samples_) x *= s;
        return v;
    }

private:
    GridSpec grid_;
    std::vector<LorentzVector> samples_;
};

inline ScalarField inner_field(const VectorField& a, const VectorField& b) {
    require_same_grid(a.grid(), b.grid());
    std::vector<double> v(a.grid().n);
    for (int j = 0; j < a.grid().n; ++j) v[j] = inner(a.value(j), b.value(j));
    return {a.grid(), std::move(v)};
}

struct ConstancyResult {
    bool is_constant = false;
    double value = 0.0;
    double deviation = 0.0;
};

// Mean and the worst relative excursion from it, normalized by max(1,|mean|)
// so near-zero fields do not blow the ratio up.
inline ConstancyResult constancy_test(const ScalarField& f, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("constancy tolerance must be positive");
    const double mean = f.mean();
    double dev = 0.0;
    for (double x : f.values()) dev = std::max(dev, std::abs(x - mean));
    dev /= std::max(1.0, std::abs(mean));
    return {dev < tol, mean, dev};
}

struct FitResult {
    std::vector<double> coefficients;
    double residual = 0.0;
    bool degenerate = false;
};

namespace detail {

// Cyclic Jacobi eigendecomposition of a small symmetric matrix. A is k*k
// row-major; on return V holds eigenvectors in columns, eval the values.
inline void sym_eig(std::vector<double> A, int k, std::vector<double>& V, std::vector<double>& eval) {
    V.assign(static_cast<std::size_t>(k) * k, 0.0);
    for (int i = 0; i < k; ++i) V[static_cast<std::size_t>(i) * k + i] = 1.0;
    auto a = [&](int i, int j) -> double& { return A[static_cast<std::size_t>(i) * k + j]; };
    auto v = [&](int i, int j) -> double& { return V[static_cast<std::size_t>(i) * k + j]; };
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-300) break;
        for (int p = 0; p < k; ++p)
            for (int q = p + 1; q < k; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < k; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < k; ++i) {
                    const double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (int i = 0; i < k; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
    }
    eval.assign(k, 0.0);
    for (int i = 0; i < k; ++i) eval[i] = a(i, i);
}

}  // namespace detail

// Least-squares constants c minimizing ||target + sum_i c_i basis_i||_2 over
// the grid. Rank-deficient normal equations are flagged and resolved by the
// minimum-norm solution (eigenvalue cutoff at 1e-12 of the largest).
inline FitResult fit_constants(std::span<const ScalarField> basis, const ScalarField& target) {
    if (basis.empty()) throw std::invalid_argument("fit_constants: empty basis");
    const int k = static_cast<int>(basis.size());
    const int n = target.size();
    for (const auto& b : basis) require_same_grid(b.grid(), target.grid());

    std::vector<double> G(static_cast<std::size_t>(k) * k, 0.0), rhs(k, 0.0);
    for (int a = 0; a < k; ++a) {
        for (int b = a; b < k; ++b) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += basis[a].value(j) * basis[b].value(j);
            G[static_cast<std::size_t>(a) * k + b] = s;
            G[static_cast<std::size_t>(b) * k + a] = s;
        }
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += basis[a].value(j) * target.value(j);
        rhs[a] = -s;
    }

    std::vector<double> V, eval;
    detail::sym_eig(G, k, V, eval);
    double lmax = 0.0;
    for (double l : eval) lmax = std::max(lmax, std::abs(l));
    const double cutoff = 1e-12 * lmax;

    FitResult res;
    res.coefficients.assign(k, 0.0);
    for (int i = 0; i < k; ++i) {
        if (std::abs(eval[i]) <= cutoff) {
            res.degenerate = true;
            continue;
        }
        double proj = 0.0;
        for (int a = 0; a < k; ++a) proj += V[static_cast<std::size_t>(a) * k + i] * rhs[a];
        proj /= eval[i];
        for (int a = 0; a < k; ++a)
            res.coefficients[a] += proj * V[static_cast<std::size_t>(a) * k + i];
    }

    double ss = 0.0;
    for (int j = 0; j < n; ++j) {
        double e = target.value(j);
        for (int a = 0; a < k; ++a) e += res.coefficients[a] * basis[a].value(j);
        ss += e * e;
    }
    res.residual = std::sqrt(ss / n);
    return res;
}

inline FitResult fit_constants(std::initializer_list<ScalarField> basis, const ScalarField& target) {
    std::vector<ScalarField> b(basis);
    return fit_constants(std::span<const ScalarField>(b), target);
}

namespace detail {
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
}  // namespace detail

inline void write_csv(std::ostream& os, const ScalarField& f, const std::string& value_name = "value") {
    os << "u," << value_name << "\n";
    for (int j = 0; j < f.size(); ++j)
        os << detail::format_double(f.grid().point(j)) << ',' << detail::format_double(f.value(j))
           << "\n";
}

// Reads one named column from a CSV with a header row.
inline std::vector<double> read_csv_column(std::istream& is, const std::string& column) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("csv: empty input");
    int col = -1, idx = 0;
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
        if (cell == column) col = idx;
        ++idx;
    }
    if (col < 0) throw std::runtime_error("csv: column '" + column + "' not found");
    std::vector<double> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string item;
        int i = 0;
        bool got = false;
        while (std::getline(row, item, ',')) {
            if (i == col) {
                out.push_back(std::stod(item));
                got = true;
                break;
            }
            ++i;
        }
        if (!got) throw std::runtime_error("csv: short row");
    }
    return out;
}

}  // namespace isoq
