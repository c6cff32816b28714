#pragma once

#include "iqmeta/random_stream.hpp"

namespace iqmeta {

struct FQuantileRequest {
    double prob = 0.5;
    double df1 = 1.0;  ///< numerator degrees of freedom
    double df2 = 1.0;  ///< denominator degrees of freedom
};

/// P(X <= x) for X ~ F(df1, df2).
double f_cdf(double x, double df1, double df2);

/// Quantile of the F distribution. Inverts the regularized incomplete beta
/// function, then verifies the CDF to within 1e-12 and falls back to bracketed
/// bisection if it is not. Throws InputError on an invalid request and
/// NumericalError if the fallback fails to converge.
double f_quantile(const FQuantileRequest& req);

inline double f_quantile(double prob, double df1, double df2) {
    return f_quantile(FQuantileRequest{prob, df1, df2});
}

/// P(X <= x) for X ~ chi-square(df).
double chi_square_cdf(double x, double df);

/// One draw from N(mean, variance). variance == 0 returns `mean` without
/// advancing the stream. Throws InputError on negative variance.
double sample_normal(double mean, double variance, RandomStream& stream);

}  // namespace iqmeta
