#pragma once

// Simultaneous tests of H0: beta_G = 0 from a debiased fit.
//
//   W1  = n b^T V^{-1} b / sigma^2                            ~ chi2(g)
//   Wbs = (n b^T b - sigma^2 tr V) / (sigma^2 sqrt(2 tr V^2))  ~ N(0,1)
//
// with b = beta_tilde_G and V = [L^{-1} S L^{-T}]_GG. Wbs is standardized by
// sigma^2: under H0, n b^T b has mean sigma^2 tr V and variance 2 sigma^4 tr V^2.

#include "moce/core.hpp"
#include "moce/debias.hpp"
#include "moce/distributions.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <optional>

namespace moce {

enum class TestKind { w1, wbs };

inline const char* to_string(TestKind k) { return k == TestKind::w1 ? "W1" : "Wbs"; }

inline constexpr double kW1ConditionLimit = 1e12;

struct GroupTest {
    TestKind kind = TestKind::w1;
    IndexSet group;
    Index g = 0;
    double gamma = 0.0;           ///< g / n
    double statistic = 0.0;
    const char* reference = "";   ///< "chi-square" or "standard normal"
    double df = 0.0;              ///< chi-square degrees of freedom (W1)
    double p_value = 1.0;         ///< upper tail
    double p_value_two_sided = 1.0;  ///< Wbs only; diagnostics
    double sigma = 0.0;           ///< scale used in the statistic
    std::map<double, bool> reject_at;

    bool rejects(double level) const { return p_value < level; }
};

namespace detail {

inline void check_group(const MoceFit& m, const IndexSet& group)
{
    require(!group.empty(), "group test: group is empty");
    require(is_sorted_unique(group), "group test: group indices must be distinct");
    require(group.front() >= 0 && group.back() < m.p(), "group test: group index out of range");
    require(static_cast<Index>(group.size()) < m.n(), "group test: group size must be smaller than n");
}

inline void fill_decisions(GroupTest& t, const std::vector<double>& levels)
{
    for (double a : levels) t.reject_at[a] = t.rejects(a);
}

inline const std::vector<double>& default_levels()
{
    static const std::vector<double> v{0.01, 0.05, 0.10};
    return v;
}

} // namespace detail

/// Classical Wald statistic. Throws NumericalError when the group covariance
/// is singular or its condition number exceeds 1e12; use Wbs then.
inline GroupTest wald_w1(const MoceFit& m, IndexSet group, std::optional<double> sigma = std::nullopt,
                         const std::vector<double>& levels = detail::default_levels())
{
    std::sort(group.begin(), group.end());
    detail::check_group(m, group);
    GroupTest t;
    t.kind = TestKind::w1;
    t.g = static_cast<Index>(group.size());
    t.gamma = static_cast<double>(t.g) / static_cast<double>(m.n());
    t.reference = "chi-square";
    t.df = static_cast<double>(t.g);
    t.sigma = sigma.value_or(m.sigma_hat);
    if (!(t.sigma > 0.0)) throw NumericalError("W1: residual scale is zero");

    const Matrix v = sandwich_block(m, group);
    Eigen::SelfAdjointEigenSolver<Matrix> es(v);
    if (es.info() != Eigen::Success) throw NumericalError("W1: eigensolver failed");
    const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(t.g - 1);
    if (!(lo > 0.0) || hi / lo > kW1ConditionLimit)
        throw NumericalError("W1: group covariance is singular or ill-conditioned (condition " +
                             std::to_string(lo > 0.0 ? hi / lo : INFINITY) + "); use the Wbs test");

    const Vector b = detail::gather(m.beta_tilde, group);
    const Vector proj = es.eigenvectors().transpose() * b;
    const double quad = (proj.array().square() / es.eigenvalues().array()).sum();
    t.statistic = static_cast<double>(m.n()) * quad / (t.sigma * t.sigma);
    t.p_value = dist::chi_square_upper_tail(t.statistic, t.df);
    t.group = std::move(group);
    detail::fill_decisions(t, levels);
    return t;
}

/// Trace-normalized statistic, one-sided upper-tail normal reference.
inline GroupTest wald_wbs(const MoceFit& m, IndexSet group, std::optional<double> sigma = std::nullopt,
                          const std::vector<double>& levels = detail::default_levels())
{
    std::sort(group.begin(), group.end());
    detail::check_group(m, group);
    GroupTest t;
    t.kind = TestKind::wbs;
    t.g = static_cast<Index>(group.size());
    t.gamma = static_cast<double>(t.g) / static_cast<double>(m.n());
    t.reference = "standard normal";
    t.sigma = sigma.value_or(m.sigma_hat);
    if (!(t.sigma > 0.0)) throw NumericalError("Wbs: residual scale is zero");

    const Matrix v = sandwich_block(m, group);
    const double tr = v.trace();
    const double tr2 = v.squaredNorm();  // tr(V^2) for symmetric V
    if (!(tr2 > 0.0)) throw NumericalError("Wbs: degenerate group (zero trace)");

    const Vector b = detail::gather(m.beta_tilde, group);
    const double s2 = t.sigma * t.sigma;
    t.statistic = (static_cast<double>(m.n()) * b.squaredNorm() - s2 * tr) / (s2 * std::sqrt(2.0 * tr2));
    t.p_value = dist::normal_upper_tail(t.statistic);
    t.p_value_two_sided = std::min(1.0, 2.0 * dist::normal_upper_tail(std::abs(t.statistic)));
    t.group = std::move(group);
    detail::fill_decisions(t, levels);
    return t;
}

} // namespace moce
