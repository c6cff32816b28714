#include "iqmeta/distributions.hpp"

#include <cmath>
#include <string>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "iqmeta/model.hpp"

namespace iqmeta {

namespace {

constexpr double kCdfTolerance = 1e-12;
constexpr int kBisectionCap = 2000;

void check_df(double df1, double df2) {
    if (!(df1 > 0.0) || !(df2 > 0.0) || !std::isfinite(df1) || !std::isfinite(df2)) {
        throw InputError("F distribution degrees of freedom must be finite and > 0");
    }
}

// x from the incomplete-beta variate b and its complement 1 - b; using the
// complement keeps precision in the upper tail where b -> 1.
double f_from_beta(double b, double one_minus_b, double df1, double df2) {
    return (df2 * b) / (df1 * one_minus_b);
}

double bisect_quantile(double p, double df1, double df2, double hint) {
    double lo = 0.0;
    double hi = (std::isfinite(hint) && hint > 0.0) ? hint : 1.0;
    int guard = 0;
    while (f_cdf(hi, df1, df2) < p) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 2000) {
            throw NumericalError("f_quantile: failed to bracket the quantile");
        }
    }
    for (int it = 0; it < kBisectionCap; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) {
            return mid;
        }
        const double c = f_cdf(mid, df1, df2);
        if (std::abs(c - p) <= kCdfTolerance * 1e-2) {
            return mid;
        }
        (c < p ? lo : hi) = mid;
    }
    throw NumericalError("f_quantile: bisection did not converge");
}

}  // namespace

double f_cdf(double x, double df1, double df2) {
    check_df(df1, df2);
    if (std::isnan(x)) {
        throw InputError("f_cdf: x is NaN");
    }
    if (x <= 0.0) {
        return 0.0;
    }
    if (std::isinf(x)) {
        return 1.0;
    }
    const double a = df1 / 2.0;
    const double b = df2 / 2.0;
    const double d1x = df1 * x;
    // Pick the form that avoids cancellation in 1 - t.
    if (d1x <= df2) {
        return boost::math::ibeta(a, b, d1x / (d1x + df2));
    }
    return boost::math::ibetac(b, a, df2 / (d1x + df2));
}

double f_quantile(const FQuantileRequest& req) {
    check_df(req.df1, req.df2);
    if (!(req.prob > 0.0 && req.prob < 1.0)) {
        throw InputError("f_quantile: prob must lie in (0, 1), got " + std::to_string(req.prob));
    }
    const double a = req.df1 / 2.0;
    const double b = req.df2 / 2.0;
    double complement = 0.0;
    const double beta_var = boost::math::ibeta_inv(a, b, req.prob, &complement);
    double x = f_from_beta(beta_var, complement, req.df1, req.df2);

    if (std::isfinite(x) && x > 0.0 &&
        std::abs(f_cdf(x, req.df1, req.df2) - req.prob) <= kCdfTolerance) {
        return x;
    }
    return bisect_quantile(req.prob, req.df1, req.df2, x);
}

double chi_square_cdf(double x, double df) {
    if (!(df > 0.0)) {
        throw InputError("chi-square degrees of freedom must be > 0");
    }
    if (x <= 0.0) {
        return 0.0;
    }
    return boost::math::gamma_p(df / 2.0, x / 2.0);
}

double sample_normal(double mean, double variance, RandomStream& stream) {
    if (!(variance >= 0.0)) {
        throw InputError("sample_normal: variance must be >= 0");
    }
    if (variance == 0.0) {
        return mean;
    }
    return mean + std::sqrt(variance) * stream.standard_normal();
}

}  // namespace iqmeta
