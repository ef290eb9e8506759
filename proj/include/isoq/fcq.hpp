#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "isoq/fields.hpp"
#include "isoq/frame.hpp"

namespace isoq {

// Prescribed conservation series r(t) = sum_{i<=0} r_i t^i with r_0 > 0.
// coeff[idx] holds r_{-idx}; absent coefficients are zero.
struct RSeries {
    std::vector<double> coeff{1.0};

    void validate() const {
        if (coeff.empty() || !(coeff[0] > 0.0))
            throw std::invalid_argument("r0 must be positive");
        for (double x : coeff)
            if (!std::isfinite(x)) throw std::invalid_argument("r(t) has non-finite coefficients");
    }
    [[nodiscard]] double r(int i) const {
        if (i > 0) return 0.0;
        const std::size_t idx = static_cast<std::size_t>(-i);
        return idx < coeff.size() ? coeff[idx] : 0.0;
    }
};

// Truncated formal conserved quantity p(t) = sum_{0 >= i >= -D} p_i t^i in
// codimension 1, written over the frame as
//   p_i = alpha_i psi + beta_i psi_u + gamma_i psi_hat + delta_i N
// (beta_i is real here, so the conjugate pair collapses onto psi_u).
// Built by extend(); immutable afterwards.
class FCQSeries {
public:
    FCQSeries(std::shared_ptr<const FrameBundle> frame, RSeries r, int depth, double sign)
        : frame_(std::move(frame)), r_(std::move(r)), depth_(depth), sign_(sign) {}

    [[nodiscard]] int depth() const { return depth_; }
    [[nodiscard]] double sign() const { return sign_; }
    [[nodiscard]] const RSeries& r() const { return r_; }
    [[nodiscard]] const FrameBundle& frame() const { return *frame_; }
    [[nodiscard]] std::shared_ptr<const FrameBundle> frame_ptr() const { return frame_; }

    [[nodiscard]] const ScalarField& gamma(int i) const { return at(gammas_, i); }
    [[nodiscard]] const ScalarField& delta(int i) const { return at(deltas_, i); }
    [[nodiscard]] const ScalarField& alpha(int i) const { return at(alphas_, i); }
    [[nodiscard]] const ScalarField& beta(int i) const { return at(betas_, i); }
    [[nodiscard]] const VectorField& p(int i) const {
        if (i > 0 || -i >= static_cast<int>(ps_.size()))
            throw std::out_of_range("series index outside truncation");
        return ps_[static_cast<std::size_t>(-i)];
    }

    friend FCQSeries extend(std::shared_ptr<const FrameBundle>, RSeries, int, double);
    friend FCQSeries shift(const FCQSeries&, double);

private:
    std::vector<ScalarField> gammas_, deltas_, alphas_, betas_;
    std::vector<VectorField> ps_;

    template <class V>
    [[nodiscard]] const ScalarField& at(const V& v, int i) const {
        if (i > 0 || -i >= static_cast<int>(v.size()))
            throw std::out_of_range("series index outside truncation");
        return v[static_cast<std::size_t>(-i)];
    }

    std::shared_ptr<const FrameBundle> frame_;
    RSeries r_;
    int depth_;
    double sign_;
};

// <p_i,p_j> from the frame Gram matrix (<psi,psi_hat> = -1, <psi_u,psi_u> = 1,
// <N,N> = 1, all other pairings zero):
//   <p_i,p_j> = -alpha_i gamma_j - gamma_i alpha_j + beta_i beta_j + delta_i delta_j.
inline ScalarField gram_product(const FCQSeries& s, int i, int j) {
    return -1.0 * (s.alpha(i) * s.gamma(j)) - s.gamma(i) * s.alpha(j) + s.beta(i) * s.beta(j) +
           s.delta(i) * s.delta(j);
}

namespace detail {
inline VectorField assemble_p(const FrameBundle& fb, const ScalarField& a, const ScalarField& b,
                              const ScalarField& g, const ScalarField& d) {
    return a * fb.psi + b * fb.psi_u + g * fb.psi_hat + d * fb.normal;
}
}  // namespace detail

// Builds the truncated series for the prescribed r(t). The construction is
// fully algebraic in codimension 1:
//   gamma_{i-1} = gamma_i''/2 + c gamma_i + 2 delta_i k
//   delta_{i-1} = (r_{i-1} - sum_{k,l<0, k+l=i-1} <p_k,p_l>) / (2 delta_0)
//   beta_i = -gamma_i',  alpha_i = gamma_i''/2 + 2 k^2 gamma_i
// with delta_0 = sign*sqrt(r_0), p_0 = delta_0 N. The normal-component ODE
// is not integrated; it becomes the consistency residual below.
inline FCQSeries extend(std::shared_ptr<const FrameBundle> frame, RSeries r, int depth,
                        double sign = +1.0) {
    r.validate();
    if (depth < 1) throw std::invalid_argument("depth must be at least 1");
    if (sign != 1.0 && sign != -1.0) throw std::invalid_argument("sign must be +1 or -1");
    const FrameBundle& fb = *frame;
    if (fb.k.jet_order() == 0 && depth > 4)
        throw std::runtime_error(
            "insufficient smoothness: sampled profiles cap the recursion depth at 4");

    const GridSpec& g = fb.grid;
    const int J = fb.k.jet_order();
    const double delta0 = sign * std::sqrt(r.r(0));

    FCQSeries s(frame, r, depth, sign);
    const ScalarField zero = ScalarField::constant(g, 0.0, J);
    s.gammas_.push_back(zero);
    s.alphas_.push_back(zero);
    s.betas_.push_back(zero);
    s.deltas_.push_back(ScalarField::constant(g, delta0, J));
    s.ps_.push_back(detail::assemble_p(fb, zero, zero, zero, s.deltas_[0]));

    const ScalarField k2 = fb.k * fb.k;
    for (int i = 0; i > -depth; --i) {
        const ScalarField& gi = s.gamma(i);
        const ScalarField& di = s.delta(i);

        ScalarField gnext = 0.5 * gi.derivative(2) + fb.c * gi + 2.0 * (di * fb.k);

        ScalarField acc = ScalarField::constant(g, 0.0, J);
        for (int a = -1; a >= i; --a) acc = acc + gram_product(s, a, i - 1 - a);
        ScalarField dnext =
            (1.0 / (2.0 * delta0)) * (ScalarField::constant(g, s.r().r(i - 1), J) - acc);

        ScalarField bnext = -1.0 * gnext.derivative(1);
        ScalarField anext = 0.5 * gnext.derivative(2) + 2.0 * (k2 * gnext);
        VectorField pnext = detail::assemble_p(fb, anext, bnext, gnext, dnext);
        if (!gnext.finite() || !dnext.finite() || !pnext.finite())
            throw std::runtime_error("non-finite field values in the series recursion");

        s.gammas_.push_back(std::move(gnext));
        s.deltas_.push_back(std::move(dnext));
        s.betas_.push_back(std::move(bnext));
        s.alphas_.push_back(std::move(anext));
        s.ps_.push_back(std::move(pnext));
    }
    return s;
}

// p(t) - s t^{-1} p(t), coefficient-wise. Depth is preserved (p_1 = 0) and
// the conservation series becomes (1 - s t^{-1})^2 r(t).
inline FCQSeries shift(const FCQSeries& src, double sh) {
    RSeries r2;
    r2.coeff.assign(src.r().coeff.size() + 2, 0.0);
    for (int m = 0; m <= static_cast<int>(r2.coeff.size()) - 1; ++m)
        r2.coeff[m] = src.r().r(-m) - 2.0 * sh * src.r().r(-m + 1) + sh * sh * src.r().r(-m + 2);

    FCQSeries out(src.frame_ptr(), r2, src.depth(), src.sign());
    const FrameBundle& fb = src.frame();
    for (int i = 0; i >= -src.depth(); --i) {
        const bool top = (i == 0);
        auto mix = [&](const ScalarField& lo, const ScalarField& hi) {
            return top ? lo : lo - sh * hi;
        };
        out.gammas_.push_back(mix(src.gamma(i), src.gamma(std::min(i + 1, 0))));
        out.deltas_.push_back(mix(src.delta(i), src.delta(std::min(i + 1, 0))));
        out.alphas_.push_back(mix(src.alpha(i), src.alpha(std::min(i + 1, 0))));
        out.betas_.push_back(mix(src.beta(i), src.beta(std::min(i + 1, 0))));
        out.ps_.push_back(detail::assemble_p(fb, out.alphas_.back(), out.betas_.back(),
                                             out.gammas_.back(), out.deltas_.back()));
    }
    return out;
}

struct ConservationRow {
    int m = 0;
    double value = 0.0;       // mean of the assembled coefficient of (p(t),p(t))
    double deviation = 0.0;   // constancy deviation over the grid
    double offset = 0.0;      // |mean - r_m|
};

// Coefficients of (p(t),p(t)) that the truncation fully determines
// (0 >= m >= -D); each must be grid-constant and equal to r_m.
inline std::vector<ConservationRow> conservation_residual(const FCQSeries& s) {
    std::vector<ConservationRow> rows;
    for (int m = 0; m >= -s.depth(); --m) {
        ScalarField acc = ScalarField::constant(s.frame().grid, 0.0, 0);
        for (int a = std::max(-s.depth(), m); a <= 0; ++a) {
            const int b = m - a;
            if (b > 0 || b < -s.depth()) continue;
            acc = acc + gram_product(s, a, b);
        }
        ConstancyResult c = constancy_test(acc, 1.0);
        rows.push_back({m, c.value, c.deviation, std::abs(c.value - s.r().r(m))});
    }
    return rows;
}

struct ParallelismRow {
    int i = 0;
    double residual_u = 0.0;
    double residual_v = 0.0;
};

// Max-norm rows of (d + t eta)p(t) = 0: for -D < i <= 0, the t^i coefficient
// d p_i + eta p_{i-1} in both coordinate directions. The u-part uses
// stencils on the assembled vector fields; the v-part is exact at v = 0
// through the stored frame v-derivatives, since the recursion coefficients
// are v-independent.
inline std::vector<ParallelismRow> parallelism_residual(const FCQSeries& s) {
    const FrameBundle& fb = s.frame();
    std::vector<ParallelismRow> rows;
    for (int i = 0; i > -s.depth(); --i) {
        VectorField du = s.p(i).fd_derivative(1);
        double worst_u = 0.0, worst_v = 0.0;
        for (int j = 0; j < fb.grid.n; ++j) {
            LorentzVector ru = du.value(j) + eta_apply_point(fb, EtaDir::u, j, s.p(i - 1).value(j));
            LorentzVector dv = s.alpha(i).value(j) * fb.psi_v.value(j) +
                               s.gamma(i).value(j) * fb.psi_hat_v.value(j) +
                               s.delta(i).value(j) * fb.normal_v.value(j);
            LorentzVector rv = dv + eta_apply_point(fb, EtaDir::v, j, s.p(i - 1).value(j));
            worst_u = std::max(worst_u, ru.max_abs());
            worst_v = std::max(worst_v, rv.max_abs());
        }
        rows.push_back({i, worst_u, worst_v});
    }
    return rows;
}

struct ConsistencyRow {
    int i = 0;
    double residual = 0.0;
};

// The normal-component equation D_z q_i = 2 gamma_{i,zbar} kappa
// - 2 gamma_i D_zbar kappa was never enforced (delta_i is algebraic), so
//   |delta_i'/2 - (gamma_i' k - gamma_i k')|
// certifies that the algebraic route solved it. All derivatives here are
// stencil-based to stay independent of the construction path.
inline std::vector<ConsistencyRow> consistency_q_residual(const FCQSeries& s) {
    const FrameBundle& fb = s.frame();
    ScalarField kp = fb.k.fd_derivative(1);
    std::vector<ConsistencyRow> rows;
    for (int i = 0; i >= -s.depth(); --i) {
        ScalarField dp = s.delta(i).fd_derivative(1);
        ScalarField gp = s.gamma(i).fd_derivative(1);
        double worst = 0.0;
        for (int j = 0; j < fb.grid.n; ++j)
            worst = std::max(worst,
                             std::abs(0.5 * dp.value(j) - (gp.value(j) * fb.k.value(j) -
                                                           s.gamma(i).value(j) * kp.value(j))));
        rows.push_back({i, worst});
    }
    return rows;
}

// <eta_dz p_i, p_j> = gamma_{i,zbar} gamma_j - gamma_i gamma_{j,zbar},
// checked in real and imaginary parts. On v-independent data the real form
// is <eta_du p_i, p_j>/2 = (gamma_i' gamma_j - gamma_i gamma_j')/2 and the
// imaginary part of the left side must vanish.
inline double eta_pairing_identity(const FCQSeries& s, int i, int j) {
    const FrameBundle& fb = s.frame();
    ScalarField gip = s.gamma(i).derivative(1);
    ScalarField gjp = s.gamma(j).derivative(1);
    double worst = 0.0;
    for (int jj = 0; jj < fb.grid.n; ++jj) {
        const double lhs_re =
            0.5 * inner(eta_apply_point(fb, EtaDir::u, jj, s.p(i).value(jj)), s.p(j).value(jj));
        const double lhs_im =
            -0.5 * inner(eta_apply_point(fb, EtaDir::v, jj, s.p(i).value(jj)), s.p(j).value(jj));
        const double rhs =
            0.5 * (gip.value(jj) * s.gamma(j).value(jj) - s.gamma(i).value(jj) * gjp.value(jj));
        worst = std::max({worst, std::abs(lhs_re - rhs), std::abs(lhs_im)});
    }
    return worst;
}

}  // namespace isoq
