#pragma once

#include "moce/core.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

namespace moce::dist {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

inline double normal_quantile(double prob)
{
    detail::require(prob > 0.0 && prob < 1.0, "normal_quantile: probability must lie in (0,1)");
    return boost::math::quantile(boost::math::normal_distribution<double>{}, prob);
}

/// z_{1-eta/2} for a two-sided interval at confidence `level` = 1 - eta.
inline double two_sided_critical(double level)
{
    detail::require(level > 0.0 && level < 1.0, "confidence level must lie in (0,1)");
    return normal_quantile(0.5 + 0.5 * level);
}

/// P(chi2_df > x).
inline double chi_square_upper_tail(double x, double df)
{
    detail::require(df > 0.0, "chi-square degrees of freedom must be positive");
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

} // namespace moce::dist
