#pragma once

// Debiasing stage.
//
//   beta_tilde = beta_hat + lambda L^{-1} kappa
//
// Inference uses the whitened design W = L^{-1} X^T (p x n). Then
// L^{-1} S L^{-T} = W W^T / n, so the variance of coordinate j is
// sigma^2 ||W_j||^2 / n and a contrast d needs only u = L^{-T} d and ||X u||.

#include "moce/core.hpp"
#include "moce/distributions.hpp"
#include "moce/expand.hpp"
#include "moce/lasso.hpp"
#include "moce/linalg.hpp"

#include <cmath>
#include <memory>
#include <optional>

namespace moce {

struct MoceOptions {
    linalg::ComplementSolver solver = linalg::ComplementSolver::automatic;
    double blockwise_tolerance = 1e-10;  ///< relative agreement of the two estimator forms
};

struct MoceFit {
    Vector beta_tilde;
    Vector beta_hat;
    Vector kappa;
    double lambda = 0.0;
    ExpandedModel expanded;
    double sigma_hat = 0.0;
    bool sigma_degenerate = false;
    Vector se;                     ///< sqrt(sigma^2 [L^{-1} S L^{-T}]_jj / n)
    std::vector<bool> zero_variance;
    double blockwise_gap = 0.0;    ///< max |combined - blockwise|, for auditing
    std::shared_ptr<const linalg::RidgeBlockFactor> factor;
    Matrix whitened;               ///< L^{-1} X^T
    Matrix x;                      ///< standardized design, kept for contrast variances

    Index n() const noexcept { return x.rows(); }
    Index p() const noexcept { return x.cols(); }
};

namespace detail {

// Per-block update, written out separately from the combined form.
inline Vector blockwise_estimate(const linalg::RidgeBlockFactor& f, const Vector& beta_hat, const Vector& kappa,
                                 double lambda)
{
    const Vector ka = gather(kappa, f.expanded());
    const Vector za = f.solve_expanded(ka);
    Vector out = beta_hat;
    Vector top = gather(beta_hat, f.expanded()) + lambda * za;
    scatter(top, f.expanded(), out);
    if (f.c() > 0) {
        const Vector kc = gather(kappa, f.complement());
        const Vector corr = f.solve_complement(kc) - f.solve_complement(f.cross(za));
        Vector bottom = gather(beta_hat, f.complement()) + lambda * corr;
        scatter(bottom, f.complement(), out);
    }
    return out;
}

} // namespace detail

/// Debias a converged LASSO fit over the given expanded model. The combined
/// form is cross-checked against the blockwise form; disagreement beyond
/// `blockwise_tolerance` (relative to max(1, |beta_tilde|_inf)) throws.
inline MoceFit moce_fit(const Dataset& data, const LassoFit& fit, const ExpandedModel& expanded,
                        const MoceOptions& opt = {})
{
    detail::require(fit.beta.size() == data.p(), "moce_fit: fit does not match the dataset");
    detail::require(!expanded.indices.empty() && expanded.indices.back() < data.p(),
                    "moce_fit: expanded model does not match the dataset");

    MoceFit m;
    m.kappa = subgradient_kappa(data, fit);
    m.beta_hat = fit.beta;
    m.lambda = fit.lambda;
    m.expanded = expanded;
    const auto sig = estimate_sigma(data, fit);
    m.sigma_hat = sig.sigma;
    m.sigma_degenerate = sig.degenerate;
    m.x = data.x;

    m.factor = std::make_shared<const linalg::RidgeBlockFactor>(data.x, expanded.indices, expanded.tau_a,
                                                                 expanded.tau_c, opt.solver);
    m.beta_tilde = m.beta_hat + m.lambda * m.factor->apply_inverse(m.kappa);

    const Vector blockwise = detail::blockwise_estimate(*m.factor, m.beta_hat, m.kappa, m.lambda);
    m.blockwise_gap = (m.beta_tilde - blockwise).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, m.beta_tilde.cwiseAbs().maxCoeff());
    if (!(m.blockwise_gap <= opt.blockwise_tolerance * scale))
        throw NumericalError("moce_fit: blockwise and combined estimators disagree by " +
                             std::to_string(m.blockwise_gap));

    m.whitened = m.factor->apply_inverse(Matrix(data.x.transpose()));
    const double n = static_cast<double>(data.n());
    m.se = m.sigma_hat * m.whitened.rowwise().norm() / n;
    m.zero_variance.resize(static_cast<std::size_t>(data.p()));
    for (Index j = 0; j < data.p(); ++j) m.zero_variance[static_cast<std::size_t>(j)] = !(m.se(j) > 0.0);
    return m;
}

/// sigma^2 [L^{-1} S L^{-T}]_jj for each target, via the whitened design.
inline Vector moce_covariance(const MoceFit& m, const IndexSet& targets)
{
    Vector v(static_cast<Index>(targets.size()));
    const double s2 = m.sigma_hat * m.sigma_hat;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const Index j = targets[k];
        detail::require(j >= 0 && j < m.p(), "moce_covariance: index out of range");
        v(static_cast<Index>(k)) = s2 * m.whitened.row(j).squaredNorm() / static_cast<double>(m.n());
    }
    return v;
}

/// Unit-norm direction with bounded support.
struct Contrast {
    Vector d;
    Index support_size = 0;

    /// Validates ||d|| = 1 to 1e-10 and support <= cap (default floor(n/2) supplied by caller).
    static Contrast make(Vector d, Index support_cap)
    {
        detail::require(d.allFinite(), "contrast: non-finite entries");
        detail::require(std::abs(d.norm() - 1.0) <= 1e-10, "contrast: direction must have unit norm");
        Contrast c;
        c.support_size = static_cast<Index>((d.array() != 0.0).count());
        detail::require(c.support_size <= support_cap,
                        "contrast: support " + std::to_string(c.support_size) + " exceeds cap " +
                            std::to_string(support_cap));
        c.d = std::move(d);
        return c;
    }

    static Contrast normalized(const Vector& v, Index support_cap)
    {
        const double nv = v.norm();
        detail::require(nv > 0.0, "contrast: zero direction");
        return make(v / nv, support_cap);
    }
};

inline Index default_support_cap(Index n) { return n / 2; }

/// sigma^2 d^T L^{-1} S L^{-T} d through u = L^{-T} d: sigma^2 ||X u||^2 / n.
inline double moce_covariance(const MoceFit& m, const Contrast& c)
{
    detail::require(c.d.size() == m.p(), "moce_covariance: contrast has wrong length");
    const Vector u = m.factor->apply_inverse_transpose(c.d);
    return m.sigma_hat * m.sigma_hat * (m.x * u).squaredNorm() / static_cast<double>(m.n());
}

/// [L^{-1} S L^{-T}]_GG assembled through |G| transposed factor applications.
inline Matrix sandwich_block(const MoceFit& m, const IndexSet& group)
{
    Matrix e = Matrix::Zero(m.p(), static_cast<Index>(group.size()));
    for (std::size_t k = 0; k < group.size(); ++k) {
        detail::require(group[k] >= 0 && group[k] < m.p(), "sandwich_block: index out of range");
        e(group[k], static_cast<Index>(k)) = 1.0;
    }
    const Matrix w = m.x * m.factor->apply_inverse_transpose(e);
    Matrix out = w.transpose() * w / static_cast<double>(m.n());
    return 0.5 * (out + out.transpose());
}

struct Intervals {
    double level = 0.0;
    double critical = 0.0;
    Vector estimate;
    Vector se;
    Vector lower;
    Vector upper;
    std::vector<bool> degenerate;  ///< zero variance: a point interval
};

inline Intervals confidence_intervals(const MoceFit& m, double level)
{
    Intervals ci;
    ci.level = level;
    ci.critical = dist::two_sided_critical(level);
    ci.estimate = m.beta_tilde;
    ci.se = m.se;
    ci.lower = m.beta_tilde - ci.critical * m.se;
    ci.upper = m.beta_tilde + ci.critical * m.se;
    ci.degenerate = m.zero_variance;
    return ci;
}

/// Map standardized-scale intervals to raw column units (divide by each
/// column's scale); the inverse multiplies back.
inline Intervals rescale_intervals(const Intervals& ci, const Vector& column_scale, bool to_raw)
{
    detail::require(column_scale.size() == ci.estimate.size(), "rescale_intervals: length mismatch");
    const Vector f = to_raw ? Vector(column_scale.cwiseInverse()) : column_scale;
    Intervals out = ci;
    out.estimate = ci.estimate.cwiseProduct(f);
    out.se = ci.se.cwiseProduct(f);
    out.lower = ci.lower.cwiseProduct(f);
    out.upper = ci.upper.cwiseProduct(f);
    return out;
}

struct ContrastInference {
    double estimate = 0.0;
    double se = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool degenerate = false;
};

inline ContrastInference linear_contrast(const MoceFit& m, const Contrast& c, double level)
{
    const double z = dist::two_sided_critical(level);
    ContrastInference r;
    r.estimate = c.d.dot(m.beta_tilde);
    const double v2 = moce_covariance(m, c);
    r.degenerate = !(v2 > 0.0);
    r.se = r.degenerate ? 0.0 : std::sqrt(v2 / static_cast<double>(m.n()));
    r.lower = r.estimate - z * r.se;
    r.upper = r.estimate + z * r.se;
    return r;
}

struct Remainder {
    Vector expanded_part;    ///< on the expanded set
    Vector complement_part;  ///< on its complement
};

/// Bias left after debiasing when the truth is known:
///   beta_tilde - beta_star = L^{-1} X^T eps / n + r,   r = (I - L^{-1} S)(beta_hat - beta_star).
/// Blockwise, with delta = beta_hat - beta_star:
///   r_a = Sig_aa^{-1} (tau_a delta_a - S_ac delta_c)
///   r_c = Sig_cc^{-1} tau_c delta_c - Sig_cc^{-1} S_ca r_a
inline Remainder remainder_terms(const MoceFit& m, const Vector& beta_star)
{
    detail::require(beta_star.size() == m.p(), "remainder_terms: wrong length");
    const auto& f = *m.factor;
    const Vector delta = m.beta_hat - beta_star;
    const Vector da = detail::gather(delta, f.expanded());
    Remainder r;
    if (f.c() == 0) {
        r.expanded_part = f.solve_expanded(f.tau_a() * da);
        r.complement_part = Vector(0);
        return r;
    }
    const Vector dc = detail::gather(delta, f.complement());
    r.expanded_part = f.solve_expanded(f.tau_a() * da - f.cross_transpose(dc));
    r.complement_part = f.solve_complement(f.tau_c() * dc - f.cross(r.expanded_part));
    return r;
}

} // namespace moce
