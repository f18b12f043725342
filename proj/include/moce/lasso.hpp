#pragma once

// Contraction stage. Objective (1/2n)||y - X b||^2 + lambda ||b||_1 solved by
// cyclic coordinate descent with naive residual updates.
//
// For column x_j with c_j = ||x_j||^2 / n the exact coordinate minimizer is
//   b_j <- soft(x_j^T r / n + c_j b_j, lambda) / c_j
// so the same code serves unit-norm columns (c_j = 1/n) and unit-variance
// columns (c_j = 1).

#include "moce/core.hpp"
#include "moce/rng.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

namespace moce {

enum class ColumnScaling {
    unit_norm,      ///< ||x_j||_2 = 1
    unit_variance,  ///< ||x_j||_2 = sqrt(n), so S_jj = 1
};

inline const char* to_string(ColumnScaling s)
{
    return s == ColumnScaling::unit_norm ? "unit_norm" : "unit_variance";
}

/// Centered and scaled design plus what is needed to map back to raw units.
struct Dataset {
    Matrix x;  ///< n x p, constant columns removed
    Vector y;  ///< centered
    ColumnScaling scaling = ColumnScaling::unit_norm;

    Vector column_mean;    ///< raw mean of each kept column
    Vector column_scale;   ///< raw column = mean + scale * standardized column
    double y_mean = 0.0;
    IndexSet kept;         ///< raw column index of each kept column
    IndexSet dropped;      ///< raw indices of constant columns
    Index raw_p = 0;

    Index n() const noexcept { return x.rows(); }
    Index p() const noexcept { return x.cols(); }

    /// Target column norm for this scaling.
    double unit() const noexcept
    {
        return scaling == ColumnScaling::unit_norm ? 1.0 : std::sqrt(static_cast<double>(n()));
    }
};

/// Center every column and y, scale columns per `scaling`. Columns whose
/// centered norm is negligible are dropped and listed in `dropped`.
inline Dataset standardize(const Eigen::Ref<const Matrix>& raw_x, const Eigen::Ref<const Vector>& raw_y,
                           ColumnScaling scaling = ColumnScaling::unit_norm)
{
    using detail::require;
    const Index n = raw_x.rows();
    require(n >= 2, "standardize: need at least 2 observations");
    require(raw_y.size() == n, "standardize: X has " + std::to_string(n) + " rows but y has " +
                                   std::to_string(raw_y.size()) + " entries");
    require(raw_x.cols() >= 1, "standardize: design has no columns");
    require(raw_x.allFinite(), "standardize: X contains NaN or Inf");
    require(raw_y.allFinite(), "standardize: y contains NaN or Inf");

    Dataset d;
    d.scaling = scaling;
    d.raw_p = raw_x.cols();
    const double target = scaling == ColumnScaling::unit_norm ? 1.0 : std::sqrt(static_cast<double>(n));

    std::vector<double> means, scales;
    for (Index j = 0; j < raw_x.cols(); ++j) {
        const double mean = raw_x.col(j).mean();
        const Vector c = raw_x.col(j).array() - mean;
        const double norm = c.norm();
        const double ref = std::max(1.0, raw_x.col(j).cwiseAbs().maxCoeff()) * std::sqrt(static_cast<double>(n));
        if (!(norm > 1e-12 * ref)) {
            d.dropped.push_back(j);
            continue;
        }
        d.kept.push_back(j);
        means.push_back(mean);
        scales.push_back(norm / target);
    }
    require(!d.kept.empty(), "standardize: every column is constant");

    const Index p = static_cast<Index>(d.kept.size());
    d.x.resize(n, p);
    d.column_mean.resize(p);
    d.column_scale.resize(p);
    for (Index k = 0; k < p; ++k) {
        const auto sk = static_cast<std::size_t>(k);
        d.column_mean(k) = means[sk];
        d.column_scale(k) = scales[sk];
        d.x.col(k) = (raw_x.col(d.kept[sk]).array() - means[sk]) / scales[sk];
    }
    d.y_mean = raw_y.mean();
    d.y = raw_y.array() - d.y_mean;
    return d;
}

/// Wrap an already standardized design without touching it (tests, simulation).
inline Dataset dataset_from_standardized(Matrix x, Vector y, ColumnScaling scaling)
{
    detail::require(x.rows() == y.size(), "dataset: row count mismatch");
    Dataset d;
    d.scaling = scaling;
    d.raw_p = x.cols();
    d.column_mean = Vector::Zero(x.cols());
    d.column_scale = Vector::Ones(x.cols());
    d.kept.resize(static_cast<std::size_t>(x.cols()));
    std::iota(d.kept.begin(), d.kept.end(), Index{0});
    d.x = std::move(x);
    d.y = std::move(y);
    return d;
}

struct LassoOptions {
    double tolerance = 1e-7;  ///< max |coefficient change| over a full sweep
    int max_sweeps = 10000;
    bool record_objective = false;
    /// When positive, converge on max_j c_j (change_j)^2 < this instead
    /// (glmnet's rule; used for cross-validation fold paths).
    double weighted_tolerance = 0.0;
};

struct LassoFit {
    Vector beta;
    double lambda = 0.0;
    IndexSet active_set;
    Index a_hat = 0;
    Vector kappa;             ///< clipped subgradient; see subgradient_kappa
    double kkt_overshoot = 0; ///< max(|raw kappa_j| - 1, 0) before clipping
    double sigma_hat = 0.0;
    bool sigma_degenerate = false;
    bool converged = false;
    int iterations = 0;       ///< coordinate sweeps, full and active-set
    double objective = 0.0;
    std::vector<double> objective_trace;  ///< after every sweep when requested
};

inline double soft_threshold(double z, double t)
{
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

inline double lasso_objective(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y,
                              const Eigen::Ref<const Vector>& beta, double lambda)
{
    const double n = static_cast<double>(x.rows());
    return (y - x * beta).squaredNorm() / (2.0 * n) + lambda * beta.lpNorm<1>();
}

namespace detail {

struct CdResult {
    bool converged = false;
    int sweeps = 0;
};

// Coordinate descent on raw arrays. `beta` is the warm start and the result;
// `resid` must equal y - X beta on entry and is kept in sync.
inline CdResult coordinate_descent(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& col_sq,
                                   double lambda, Vector& beta, Vector& resid, const LassoOptions& opt,
                                   std::vector<double>* trace = nullptr)
{
    const Index p = x.cols();
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    const bool weighted = opt.weighted_tolerance > 0.0;
    const double tol = weighted ? opt.weighted_tolerance : opt.tolerance;
    CdResult out;

    auto update = [&](Index j) -> double {
        const double cj = col_sq(j);
        if (cj <= 0.0) return 0.0;
        const double old = beta(j);
        const double z = x.col(j).dot(resid) * inv_n + cj * old;
        const double nw = soft_threshold(z, lambda) / cj;
        const double delta = nw - old;
        if (delta != 0.0) {
            resid.noalias() -= delta * x.col(j);
            beta(j) = nw;
        }
        return weighted ? cj * delta * delta : std::abs(delta);
    };
    auto record = [&] {
        if (trace) trace->push_back(resid.squaredNorm() * 0.5 * inv_n + lambda * beta.lpNorm<1>());
    };

    std::vector<Index> active;
    while (out.sweeps < opt.max_sweeps) {
        double full = 0.0;
        for (Index j = 0; j < p; ++j) full = std::max(full, update(j));
        ++out.sweeps;
        record();
        if (full < tol) {
            out.converged = true;
            return out;
        }
        active.clear();
        for (Index j = 0; j < p; ++j)
            if (beta(j) != 0.0) active.push_back(j);
        while (out.sweeps < opt.max_sweeps) {
            double change = 0.0;
            for (Index j : active) change = std::max(change, update(j));
            ++out.sweeps;
            record();
            if (change < tol) break;
        }
    }
    return out;
}

inline Vector column_sq_norms(const Eigen::Ref<const Matrix>& x)
{
    return x.colwise().squaredNorm().transpose() / static_cast<double>(x.rows());
}

// Raw subgradient (1/(n lambda)) X^T r, then clip and pin the active signs.
inline Vector kappa_from_residual(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& resid,
                                  const Eigen::Ref<const Vector>& beta, double lambda, double& overshoot)
{
    Vector k = x.transpose() * resid / (static_cast<double>(x.rows()) * lambda);
    overshoot = 0.0;
    for (Index j = 0; j < k.size(); ++j) {
        if (beta(j) != 0.0) {
            overshoot = std::max(overshoot, std::abs(k(j) - (beta(j) > 0 ? 1.0 : -1.0)));
            k(j) = beta(j) > 0 ? 1.0 : -1.0;
        } else {
            overshoot = std::max(overshoot, std::abs(k(j)) - 1.0);
            k(j) = std::clamp(k(j), -1.0, 1.0);
        }
    }
    overshoot = std::max(overshoot, 0.0);
    return k;
}

} // namespace detail

inline constexpr double kKktSlack = 1e-6;

struct SigmaEstimate {
    double sigma = 0.0;
    bool degenerate = false;  ///< a_hat >= n; denominator floored at 1
};

/// sigma^2 = ||y - X beta||^2 / (n - a_hat).
inline SigmaEstimate estimate_sigma(const Dataset& data, const LassoFit& fit)
{
    const double rss = (data.y - data.x * fit.beta).squaredNorm();
    const Index dof = data.n() - fit.a_hat;
    SigmaEstimate s;
    s.degenerate = dof < 1;
    s.sigma = std::sqrt(rss / static_cast<double>(std::max<Index>(dof, 1)));
    return s;
}

/// Minimize the objective at one lambda. Non-convergence returns the last
/// iterate with converged = false.
inline LassoFit fit_lasso(const Dataset& data, double lambda, const std::optional<Vector>& warm_start = std::nullopt,
                          const LassoOptions& opt = {})
{
    detail::require(lambda > 0.0 && std::isfinite(lambda), "fit_lasso: lambda must be positive");
    LassoFit fit;
    fit.lambda = lambda;
    fit.beta = Vector::Zero(data.p());
    if (warm_start) {
        detail::require(warm_start->size() == data.p(), "fit_lasso: warm start has wrong length");
        fit.beta = *warm_start;
    }
    Vector resid = data.y - data.x * fit.beta;
    const Vector col_sq = detail::column_sq_norms(data.x);
    if (opt.record_objective) fit.objective_trace.push_back(lasso_objective(data.x, data.y, fit.beta, lambda));
    const auto cd = detail::coordinate_descent(data.x, col_sq, lambda, fit.beta, resid, opt,
                                               opt.record_objective ? &fit.objective_trace : nullptr);
    fit.converged = cd.converged;
    fit.iterations = cd.sweeps;
    fit.kappa = detail::kappa_from_residual(data.x, resid, fit.beta, lambda, fit.kkt_overshoot);

    // The subgradient is the gradient divided by lambda, so at small lambda a
    // converged iterate can still miss the 1e-6 KKT slack. Polish with a
    // tighter tolerance until it does.
    LassoOptions polish = opt;
    polish.weighted_tolerance = 0.0;
    while (fit.converged && fit.kkt_overshoot > 0.1 * kKktSlack && polish.tolerance > 1e-13) {
        polish.tolerance *= 0.01;
        polish.max_sweeps = opt.max_sweeps - fit.iterations;
        if (polish.max_sweeps <= 0) break;
        const auto more = detail::coordinate_descent(data.x, col_sq, lambda, fit.beta, resid, polish,
                                                     opt.record_objective ? &fit.objective_trace : nullptr);
        fit.iterations += more.sweeps;
        fit.converged = more.converged;
        resid = data.y - data.x * fit.beta;
        fit.kappa = detail::kappa_from_residual(data.x, resid, fit.beta, lambda, fit.kkt_overshoot);
    }

    for (Index j = 0; j < data.p(); ++j)
        if (fit.beta(j) != 0.0) fit.active_set.push_back(j);
    fit.a_hat = static_cast<Index>(fit.active_set.size());
    fit.objective = resid.squaredNorm() / (2.0 * static_cast<double>(data.n())) + lambda * fit.beta.lpNorm<1>();
    const auto s = estimate_sigma(data, fit);
    fit.sigma_hat = s.sigma;
    fit.sigma_degenerate = s.degenerate;
    return fit;
}

/// kappa = X^T (y - X beta) / (n lambda), clipped to [-1, 1] and set to
/// sign(beta_j) on the active set. Throws when the raw value overshoots by
/// more than 1e-6, which means the solver stopped too early.
inline Vector subgradient_kappa(const Dataset& data, const LassoFit& fit)
{
    double overshoot = 0.0;
    Vector k = detail::kappa_from_residual(data.x, data.y - data.x * fit.beta, fit.beta, fit.lambda, overshoot);
    if (overshoot > kKktSlack)
        throw NumericalError("KKT violation: subgradient overshoots by " + std::to_string(overshoot) +
                             " at lambda " + std::to_string(fit.lambda) + "; tighten the solver tolerance");
    return k;
}

struct LassoPath {
    Vector lambda_grid;        ///< strictly decreasing, lambda_max first
    Matrix betas;              ///< p x grid_size
    std::vector<int> entry_step;  ///< first grid index with beta_j != 0, -1 if never
    IndexSet entry_order;      ///< all predictors: entrants by entry step, then the rest by index
    std::vector<bool> converged;

    double lambda_max() const { return lambda_grid(0); }
};

inline double lambda_max(const Dataset& data)
{
    return (data.x.transpose() * data.y).cwiseAbs().maxCoeff() / static_cast<double>(data.n());
}

/// `size` log-spaced values from lmax down to lmax * ratio.
inline Vector log_grid(double lmax, Index size, double ratio = 1e-3)
{
    Vector g(size);
    for (Index k = 0; k < size; ++k)
        g(k) = lmax * std::pow(ratio, static_cast<double>(k) / static_cast<double>(size - 1));
    g(0) = lmax;
    return g;
}

namespace detail {

inline IndexSet order_by_entry(const Matrix& betas, std::vector<int>& step)
{
    const Index p = betas.rows();
    step.assign(static_cast<std::size_t>(p), -1);
    for (Index j = 0; j < p; ++j)
        for (Index k = 0; k < betas.cols(); ++k)
            if (betas(j, k) != 0.0) {
                step[static_cast<std::size_t>(j)] = static_cast<int>(k);
                break;
            }
    IndexSet order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Index{0});
    // same step: larger magnitude at entry first
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        const int sa = step[static_cast<std::size_t>(a)], sb = step[static_cast<std::size_t>(b)];
        if ((sa < 0) != (sb < 0)) return sb < 0;
        if (sa < 0) return false;
        if (sa != sb) return sa < sb;
        return std::abs(betas(a, sa)) > std::abs(betas(b, sb));
    });
    return order;
}

} // namespace detail

inline LassoPath lasso_path(const Dataset& data, Index grid_size = 100, const LassoOptions& opt = {})
{
    detail::require(grid_size >= 2, "lasso_path: grid size must be at least 2");
    const double lmax = lambda_max(data);
    detail::require(lmax > 0.0, "lasso_path: lambda_max is 0 (response orthogonal to every column); path is degenerate");
    LassoPath path;
    path.lambda_grid = log_grid(lmax, grid_size);
    path.betas = Matrix::Zero(data.p(), grid_size);
    path.converged.assign(static_cast<std::size_t>(grid_size), true);

    const Vector col_sq = detail::column_sq_norms(data.x);
    Vector beta = Vector::Zero(data.p());
    Vector resid = data.y;
    // The head is zero by construction of lambda_max; no solve needed.
    for (Index k = 1; k < grid_size; ++k) {
        const auto cd = detail::coordinate_descent(data.x, col_sq, path.lambda_grid(k), beta, resid, opt);
        path.converged[static_cast<std::size_t>(k)] = cd.converged;
        path.betas.col(k) = beta;
    }
    path.entry_order = detail::order_by_entry(path.betas, path.entry_step);
    return path;
}

struct CvResult {
    double lambda = 0.0;
    Index index = 0;
    Vector mean_error;  ///< per grid point, averaged over all held-out rows
    Index reached = 0;  ///< grid points evaluated by every fold
};

/// Saturation rule for fold paths: stop once the training R^2 exceeds
/// `max_r2`, or improves by less than `min_gain` times its value between
/// consecutive grid points.
struct PathStop {
    double max_r2 = 0.999;
    double min_gain = 1e-5;
    bool enabled = true;
};

/// K-fold cross-validation over the path grid. Rows are assigned to folds by a
/// seeded permutation (fold = position mod K). Each training split is
/// re-centered with its own means; columns are not rescaled. Selection is the
/// minimum mean held-out squared error, earliest (largest lambda) on ties,
/// over the grid prefix that every fold reached before saturating. Fold paths
/// converge on glmnet's weighted rule, 1e-7 times the training variance of y,
/// unless `opt` sets one.
inline CvResult cross_validate(const Dataset& data, int folds, const LassoPath& path, std::uint64_t seed,
                               const LassoOptions& opt = {}, const PathStop& stop = {})
{
    const Index n = data.n();
    detail::require(folds >= 2, "cross_validate: need at least 2 folds");
    detail::require(n >= folds, "cross_validate: fewer rows than folds");
    const Index g = path.lambda_grid.size();
    detail::require(g >= 1, "cross_validate: empty grid");

    CvResult out;
    out.mean_error = Vector::Zero(g);
    out.reached = g;
    if (g == 1) {
        out.lambda = path.lambda_grid(0);
        return out;
    }

    std::vector<Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Index{0});
    Rng rng(seed);
    const auto perm = rng.sample(std::span<const Index>(rows), rows.size());
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < perm.size(); ++i) fold_of[static_cast<std::size_t>(perm[i])] = static_cast<int>(i % folds);

    for (int f = 0; f < folds; ++f) {
        IndexSet tr, te;
        for (Index i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
        detail::require(!te.empty() && !tr.empty(), "cross_validate: fold " + std::to_string(f) + " has zero rows");

        Matrix xtr = detail::gather_rows(data.x, tr);
        Vector ytr = detail::gather(data.y, tr);
        const Vector mx = xtr.colwise().mean().transpose();
        const double my = ytr.mean();
        xtr.rowwise() -= mx.transpose();
        ytr.array() -= my;
        Matrix xte = detail::gather_rows(data.x, te);
        xte.rowwise() -= mx.transpose();
        const Vector yte = detail::gather(data.y, te).array() - my;

        const Vector col_sq = detail::column_sq_norms(xtr);
        const double tss = ytr.squaredNorm();
        LassoOptions fold_opt = opt;
        if (fold_opt.weighted_tolerance <= 0.0)
            fold_opt.weighted_tolerance = 1e-7 * std::max(tss / static_cast<double>(tr.size()), 1e-300);
        Vector beta = Vector::Zero(data.p());
        Vector resid = ytr;
        double r2_prev = 0.0;
        Index k = 0;
        for (; k < g; ++k) {
            detail::coordinate_descent(xtr, col_sq, path.lambda_grid(k), beta, resid, fold_opt);
            out.mean_error(k) += (yte - xte * beta).squaredNorm();
            if (!stop.enabled || tss <= 0.0 || k == 0) continue;
            const double r2 = 1.0 - resid.squaredNorm() / tss;
            const bool saturated = r2 > stop.max_r2 || r2 - r2_prev < stop.min_gain * r2;
            r2_prev = r2;
            if (saturated) {
                ++k;
                break;
            }
        }
        out.reached = std::min(out.reached, k);
    }
    out.mean_error /= static_cast<double>(n);
    out.mean_error.head(out.reached).minCoeff(&out.index);
    out.lambda = path.lambda_grid(out.index);
    return out;
}

} // namespace moce
