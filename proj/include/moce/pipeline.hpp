#pragma once

// Path, cross-validation, LASSO fit, expansion and debiasing in one call.

#include "moce/debias.hpp"
#include "moce/expand.hpp"
#include "moce/lasso.hpp"
#include "moce/rng.hpp"

#include <optional>

namespace moce {

// Purpose tags for derive_seed.
inline constexpr std::uint64_t kTagCrossValidation = 1;
inline constexpr std::uint64_t kTagInjection = 2;

struct PipelineOptions {
    std::optional<double> lambda;  ///< fixed tuning value; cross-validate when empty
    int cv_folds = 10;
    Index grid_size = 100;
    double C = kDefaultExpansionConstant;
    std::uint64_t seed = 0;
    std::optional<double> tau_a;   ///< overrides
    std::optional<double> tau_c;
    LassoOptions lasso;
    MoceOptions moce;
};

struct PipelineResult {
    LassoPath path;
    std::optional<CvResult> cv;
    LassoFit lasso;
    ExpandedModel expanded;
    MoceFit moce;
};

inline PipelineResult run_pipeline(const Dataset& data, const PipelineOptions& opt)
{
    PipelineResult r;
    r.path = lasso_path(data, opt.grid_size, opt.lasso);
    double lambda = 0.0;
    Vector warm = Vector::Zero(data.p());
    if (opt.lambda) {
        detail::require(*opt.lambda > 0.0, "pipeline: lambda must be positive");
        lambda = *opt.lambda;
        Index k = 0;
        while (k + 1 < r.path.lambda_grid.size() && r.path.lambda_grid(k + 1) >= lambda) ++k;
        if (lambda < r.path.lambda_max()) warm = r.path.betas.col(k);
    } else {
        r.cv = cross_validate(data, opt.cv_folds, r.path, derive_seed(opt.seed, 0, kTagCrossValidation), opt.lasso);
        lambda = r.cv->lambda;
        warm = r.path.betas.col(r.cv->index);
    }
    r.lasso = fit_lasso(data, lambda, warm, opt.lasso);
    if (!r.lasso.converged)
        throw NumericalError("pipeline: LASSO did not converge within " + std::to_string(opt.lasso.max_sweeps) +
                             " sweeps");
    r.expanded = build_expanded_model(r.path, r.lasso, data, opt.C, derive_seed(opt.seed, 0, kTagInjection), opt.lasso);
    if (opt.tau_a) {
        detail::require(*opt.tau_a > 0.0, "pipeline: tau_a must be positive");
        r.expanded.tau_a = *opt.tau_a;
    }
    if (opt.tau_c) {
        detail::require(*opt.tau_c > 0.0, "pipeline: tau_c must be positive");
        r.expanded.tau_c = *opt.tau_c;
        r.expanded.tau_c_degenerate = false;
    }
    r.moce = moce_fit(data, r.lasso, r.expanded, opt.moce);
    return r;
}

} // namespace moce
