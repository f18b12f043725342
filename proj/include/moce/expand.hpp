#pragma once

// Expansion stage: grow the LASSO selection into a model of size a_tilde
// before debiasing, then pick the two ridge levels.

#include "moce/core.hpp"
#include "moce/lasso.hpp"
#include "moce/linalg.hpp"
#include "moce/rng.hpp"

#include <cmath>
#include <span>
#include <string>

namespace moce {

inline constexpr double kDefaultExpansionConstant = 8.0;

/// sqrt(2 log p) / n.
inline double lambda_s(Index p, Index n)
{
    detail::require(p >= 2, "lambda_s: p must be at least 2");
    detail::require(n >= 1, "lambda_s: n must be positive");
    return std::sqrt(2.0 * std::log(static_cast<double>(p))) / static_cast<double>(n);
}

/// C * min(1 / sqrt(a_hat n), lambda_s); an empty selection takes the lambda_s arm.
inline double lambda_a(Index a_hat, Index n, Index p, double C)
{
    detail::require(n >= 1, "lambda_a: n must be positive");
    detail::require(a_hat >= 0, "lambda_a: a_hat must be nonnegative");
    detail::require(C >= 4.0 && C <= 12.0, "lambda_a: C must lie in [4, 12]");
    const double ls = lambda_s(p, n);
    if (a_hat == 0) return C * ls;
    return C * std::min(1.0 / std::sqrt(static_cast<double>(a_hat) * static_cast<double>(n)), ls);
}

/// floor(n (1 - lambda_a / lambda_max)) clamped to [1, n - 1].
inline Index expanded_size(Index n, double lambda_a_value, double lambda_max_value, bool* clamped = nullptr)
{
    detail::require(lambda_max_value > 0.0, "expanded_size: lambda_max must be positive");
    detail::require(n >= 2, "expanded_size: n must be at least 2");
    const double raw = std::floor(static_cast<double>(n) * (1.0 - lambda_a_value / lambda_max_value));
    const Index lo = 1, hi = n - 1;
    Index out = raw < static_cast<double>(lo) ? lo : (raw > static_cast<double>(hi) ? hi : static_cast<Index>(raw));
    if (clamped) *clamped = static_cast<double>(out) != raw;
    return out;
}

struct RidgeLevels {
    double tau_a = 0.0;
    double tau_c = 0.0;
    bool tau_c_degenerate = false;  ///< a block had no nonzero singular value
};

/// tau_a = 1e-8 sqrt(log p) / n and
/// tau_c = 1e-4 sqrt(rho_max(S_aa) rho_max(S_cc)), computed from the column
/// blocks of X so S is never formed.
inline RidgeLevels select_tau(const Eigen::Ref<const Matrix>& x, const IndexSet& expanded)
{
    const Index n = x.rows(), p = x.cols();
    detail::require(p >= 2, "select_tau: p must be at least 2");
    RidgeLevels r;
    r.tau_a = 1e-8 * std::sqrt(std::log(static_cast<double>(p))) / static_cast<double>(n);
    const auto sa = linalg::gram_extreme_singular_values(detail::gather_columns(x, expanded), n);
    const auto sc = linalg::gram_extreme_singular_values(detail::gather_columns(x, detail::complement(expanded, p)), n);
    if (sa.zero_rank || sc.zero_rank) {
        r.tau_c = 1e-4;
        r.tau_c_degenerate = true;
    } else {
        r.tau_c = 1e-4 * std::sqrt(sa.rho_max * sc.rho_max);
    }
    return r;
}

struct ExpandedModel {
    IndexSet indices;         ///< the expanded set, ascending
    Index a_tilde = 0;
    double lambda_s = 0.0;
    double lambda_a = 0.0;
    double lambda_max = 0.0;
    double tau_a = 0.0;
    double tau_c = 0.0;
    bool tau_c_degenerate = false;

    IndexSet selected;        ///< nonzero at lambda_a, union the LASSO active set
    IndexSet injected;        ///< random draws from the zero set at lambda_s
    IndexSet filled_by_order; ///< fill taken by path entry order when the zero set ran out
    bool truncated = false;   ///< selected part exceeded a_tilde and was cut by entry order
    bool size_clamped = false;
    std::uint64_t seed = 0;

    IndexSet complement(Index p) const { return detail::complement(indices, p); }

    /// Signals missed by the expanded model: A minus the expanded set.
    IndexSet false_negatives(const IndexSet& truth) const
    {
        IndexSet out;
        std::set_difference(truth.begin(), truth.end(), indices.begin(), indices.end(), std::back_inserter(out));
        return out;
    }

    /// Nulls outside the expanded model.
    IndexSet true_negatives(const IndexSet& truth, Index p) const
    {
        const IndexSet c = complement(p);
        IndexSet out;
        std::set_difference(c.begin(), c.end(), truth.begin(), truth.end(), std::back_inserter(out));
        return out;
    }
};

namespace detail {

inline IndexSet nonzero_set(const Eigen::Ref<const Vector>& b)
{
    IndexSet out;
    for (Index j = 0; j < b.size(); ++j)
        if (b(j) != 0.0) out.push_back(j);
    return out;
}

// LASSO at an arbitrary lambda, warm-started from the nearest grid point above it.
inline Vector solve_on_path(const Dataset& data, const LassoPath& path, double lambda, const LassoOptions& opt)
{
    if (lambda >= path.lambda_max()) return Vector::Zero(data.p());
    Index k = 0;
    while (k + 1 < path.lambda_grid.size() && path.lambda_grid(k + 1) >= lambda) ++k;
    if (path.lambda_grid(k) == lambda) return path.betas.col(k);
    return fit_lasso(data, lambda, Vector(path.betas.col(k)), opt).beta;
}

} // namespace detail

/// Build the expanded set:
///   1. the deterministic part D = {nonzero at lambda_a} union (LASSO active set);
///   2. if |D| > a_tilde keep the earliest path entrants of D;
///   3. otherwise fill to a_tilde with uniform draws, without replacement, from
///      predictors that are zero at lambda_s and not in D;
///   4. if that pool is too small, take the rest by path entry order.
inline ExpandedModel build_expanded_model(const LassoPath& path, const LassoFit& fit, const Dataset& data,
                                          double C, std::uint64_t seed, const LassoOptions& opt = {})
{
    const Index n = data.n(), p = data.p();
    detail::require(path.betas.rows() == p && fit.beta.size() == p, "build_expanded_model: dimension mismatch");
    detail::require(p >= 2, "build_expanded_model: need at least 2 predictors");

    ExpandedModel m;
    m.seed = seed;
    m.lambda_max = path.lambda_max();
    m.lambda_s = lambda_s(p, n);
    m.lambda_a = lambda_a(fit.a_hat, n, p, C);
    m.a_tilde = std::min(expanded_size(n, m.lambda_a, m.lambda_max, &m.size_clamped), p);

    const IndexSet at_a = detail::nonzero_set(detail::solve_on_path(data, path, m.lambda_a, opt));
    std::set_union(at_a.begin(), at_a.end(), fit.active_set.begin(), fit.active_set.end(),
                   std::back_inserter(m.selected));

    std::vector<Index> rank(static_cast<std::size_t>(p));
    for (std::size_t r = 0; r < path.entry_order.size(); ++r)
        rank[static_cast<std::size_t>(path.entry_order[r])] = static_cast<Index>(r);
    auto by_entry = [&](Index a, Index b) { return rank[static_cast<std::size_t>(a)] < rank[static_cast<std::size_t>(b)]; };

    const auto a_t = static_cast<std::size_t>(m.a_tilde);
    if (m.selected.size() > a_t) {
        IndexSet keep = m.selected;
        std::stable_sort(keep.begin(), keep.end(), by_entry);
        keep.resize(a_t);
        std::sort(keep.begin(), keep.end());
        m.indices = std::move(keep);
        m.truncated = true;
    } else {
        const std::size_t need = a_t - m.selected.size();
        const IndexSet at_s = detail::nonzero_set(detail::solve_on_path(data, path, m.lambda_s, opt));
        IndexSet taken = m.selected;
        IndexSet pool;
        for (Index j = 0; j < p; ++j)
            if (!std::binary_search(at_s.begin(), at_s.end(), j) && !std::binary_search(taken.begin(), taken.end(), j))
                pool.push_back(j);
        const std::size_t k = std::min(need, pool.size());
        Rng rng(seed);
        m.injected = rng.sample(std::span<const Index>(pool), k);
        std::sort(m.injected.begin(), m.injected.end());

        IndexSet merged;
        std::set_union(taken.begin(), taken.end(), m.injected.begin(), m.injected.end(), std::back_inserter(merged));
        if (k < need) {
            for (Index j : path.entry_order) {
                if (m.filled_by_order.size() == need - k) break;
                if (!std::binary_search(merged.begin(), merged.end(), j)) m.filled_by_order.push_back(j);
            }
            std::sort(m.filled_by_order.begin(), m.filled_by_order.end());
            IndexSet all;
            std::set_union(merged.begin(), merged.end(), m.filled_by_order.begin(), m.filled_by_order.end(),
                           std::back_inserter(all));
            merged = std::move(all);
        }
        m.indices = std::move(merged);
    }

    const auto tau = select_tau(data.x, m.indices);
    m.tau_a = tau.tau_a;
    m.tau_c = tau.tau_c;
    m.tau_c_degenerate = tau.tau_c_degenerate;
    return m;
}

/// Population diagnostics available only when the true coefficients are known.
struct SignalStrength {
    Index a_star = 0;     ///< smallest integer with sum_j min(|b_j|, lambda_s sigma) <= a_star lambda_s sigma
    IndexSet signal_set;  ///< {j : |b_j| > lambda_s sigma}
};

inline SignalStrength signal_strength(const Eigen::Ref<const Vector>& beta_star, double lambda_s_value, double sigma)
{
    detail::require(lambda_s_value > 0.0 && sigma > 0.0, "signal_strength: thresholds must be positive");
    const double t = lambda_s_value * sigma;
    SignalStrength s;
    double total = 0.0;
    for (Index j = 0; j < beta_star.size(); ++j) {
        total += std::min(std::abs(beta_star(j)), t);
        if (std::abs(beta_star(j)) > t) s.signal_set.push_back(j);
    }
    s.a_star = static_cast<Index>(std::ceil(total / t - 1e-12));
    return s;
}

} // namespace moce
