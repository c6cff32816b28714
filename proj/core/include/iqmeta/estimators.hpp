#pragma once

#include <cstddef>

#include "iqmeta/model.hpp"

namespace iqmeta {

// Estimators assume a dataset that passed validate_meta / validate_raw.

/// Arguments of the population heterogeneity measures.
struct MeasureInputs {
    double between_var = 0.0;  ///< tau^2
    double error_var = 1.0;    ///< common error variance, or within-study variance for ICC_HT
};

/// True intrinsic heterogeneity tau^2 / (tau^2 + common error variance).
double icc_ma_true(const MeasureInputs& in);

/// Higgins-Thompson measure tau^2 / (tau^2 + within-study variance). Depends
/// on study sample size through the within-study variance.
double icc_ht_true(const MeasureInputs& in);

struct CochranQ {
    double q = 0.0;
    double sum_w = 0.0;
    double sum_wy = 0.0;
    double weighted_mean = 0.0;  ///< sum_wy / sum_w
};

/// Cochran's Q with weights 1 / var_effect.
CochranQ cochran_q(const MetaDataset& dataset);

/// max((Q - (k - 1)) / Q, 0); Q == 0 gives 0.
double i_squared_from_q(double q, std::size_t k);
double i_squared(const MetaDataset& dataset);

/// (sum n_i - sum n_i^2 / sum n_i) / (k - 1). Equals n when all sizes are n.
double adjusted_sample_size(const MetaDataset& dataset);

struct MeanSquares {
    double msb = 0.0;         ///< sum n_i (y_i - ybar)^2 / (k - 1)
    double msw = 0.0;         ///< sum n_i (n_i - 1) var_i / (N - k)
    double grand_mean = 0.0;  ///< ybar = sum n_i y_i / N
};

/// Between- and within-population mean squares rebuilt from summary data.
MeanSquares mean_squares(const MetaDataset& dataset);

/// Truncated moment estimator shared by every IQ variant:
/// max((msb - msw) / (msb + (n - 1) msw), 0).
double icc_from_mean_squares(double msb, double msw, double n);

/// IQ statistic using the adjusted sample size; valid for balanced and
/// unbalanced designs.
double iq_point(const MetaDataset& dataset);

/// 100(1 - alpha)% interval for ICC_MA, F quantiles on (k - 1, N - k) degrees
/// of freedom with the adjusted sample size in place of n. Exact when
/// balanced, approximate otherwise. Both limits are truncated at 0.
Interval iq_ci(const MetaDataset& dataset, double alpha);

/// Interval limits from an F ratio, quantiles and a (possibly adjusted)
/// sample size.
Interval icc_interval(double f_ratio, double f_lower_q, double f_upper_q, double n);

/// Balanced-design forms written with the common n, the plain mean of the
/// effects and MSW = n * mean(var_i). Throw InputError when sizes differ.
double iq_point_balanced(const MetaDataset& dataset);
Interval iq_ci_balanced(const MetaDataset& dataset, double alpha);

struct J2Options {
    double tol = 1e-5;
    long max_iter = 10000;
};

/// Fixed-point ML estimate of (mu, tau^2, sigma^2) from effects and sizes
/// only, and the J^2 statistic built from it.
///
/// The reported within-study variances are ignored entirely; each study
/// contributes y_i with variance tau^2 + sigma^2 / n_i. Never throws on
/// non-convergence; see J2Result flags.
J2Result j2_estimate(const MetaDataset& dataset, const J2Options& options = {});

/// Per-group sample mean and squared standard error of the mean. Throws
/// ValidationError for a group with fewer than 2 observations. The result is
/// not validated: constant groups yield var_effect == 0.
MetaDataset summarize_raw(const RawDataset& raw);

struct AnovaIcc {
    double icc = 0.0;
    double msb = 0.0;
    double msw = 0.0;
    double nbar = 0.0;
    /// MSW == 0; icc is 1 if MSB > 0 and 0 otherwise.
    bool degenerate = false;
};

/// Classical truncated one-way ANOVA ICC estimator computed directly from the
/// observations (SSB and SSW sums of squares).
AnovaIcc anova_icc_raw(const RawDataset& raw);

struct AssessOptions {
    double alpha = 0.05;
    bool with_j2 = true;
    J2Options j2;
};

/// Runs every estimator on one dataset. Validates first.
HeterogeneityReport assess(const MetaDataset& dataset, const AssessOptions& options = {});

}  // namespace iqmeta
