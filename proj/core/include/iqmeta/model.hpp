#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace iqmeta {

/// Bad user input: malformed files, invalid datasets, out-of-range options.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A dataset violated a type invariant. `index()` is the 0-based study (or
/// group) index at fault, when one exists.
class ValidationError : public InputError {
public:
    explicit ValidationError(const std::string& what,
                             std::optional<std::size_t> index = std::nullopt)
        : InputError(what), index_(index) {}

    std::optional<std::size_t> index() const noexcept { return index_; }

private:
    std::optional<std::size_t> index_;
};

/// An internal numerical routine failed (root finder did not converge, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One study of a meta-analysis.
///
/// `var_effect` is the squared standard error of `effect`, i.e.
/// sum_j (y_ij - y_i)^2 / (n_i (n_i - 1)). It is *not* the sample variance
/// of the individual observations; multiply by `size` to get that.
struct StudySummary {
    double effect = 0.0;
    long size = 0;
    double var_effect = 0.0;

    friend bool operator==(const StudySummary&, const StudySummary&) = default;
};

struct MetaDataset {
    std::vector<StudySummary> studies;
    /// Empty, or one unique label per study.
    std::vector<std::string> labels;

    std::size_t k() const noexcept { return studies.size(); }
    long total_size() const noexcept;
    bool balanced() const noexcept;

    friend bool operator==(const MetaDataset&, const MetaDataset&) = default;
};

/// Individual observations grouped by study.
struct RawDataset {
    std::vector<std::vector<double>> groups;

    std::size_t k() const noexcept { return groups.size(); }
};

/// Parameters of the one-way random-effects model
///   y_ij = mu + delta_i + xi_ij,  delta_i ~ N(0, between_var),
///   xi_ij ~ N(0, error_var).
struct PopulationTruth {
    double grand_mean = 0.0;
    double between_var = 0.0;
    double error_var = 1.0;
};

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

/// Output of the fixed-point maximum likelihood iteration behind J^2.
struct J2Result {
    double mu_hat = 0.0;
    double tau2_hat = 0.0;
    double sigma2_hat = 0.0;
    /// Untruncated tau2 / (tau2 + sigma2). NaN when that ratio is undefined.
    double j2_raw = 0.0;
    /// max(j2_raw, 0), or 0 when j2_raw is undefined.
    double j2 = 0.0;
    long iterations = 0;
    bool converged = false;
    /// Iteration hit a non-finite value and reverted to the previous iterate.
    bool aborted_nan = false;
    /// All study sizes equal; the MLE of (tau2, sigma2) need not be unique.
    bool identifiability_warning = false;
};

struct HeterogeneityReport {
    std::size_t k = 0;
    double alpha = 0.05;

    // Inverse-variance side.
    double q_stat = 0.0;
    double sum_w = 0.0;
    double sum_wy = 0.0;
    double i2_point = 0.0;

    // ANOVA side.
    double grand_mean = 0.0;  ///< size-weighted mean of the effects
    double msb = 0.0;
    double msw = 0.0;
    double nbar = 0.0;
    double f_ratio = 0.0;
    double iq_point = 0.0;
    std::optional<Interval> iq_ci;

    std::optional<J2Result> j2;
};

/// Returns `dataset` unchanged, or throws ValidationError naming the first
/// offending study.
const MetaDataset& validate_meta(const MetaDataset& dataset);

/// Throws ValidationError unless there are >= 2 groups of >= 2 finite
/// observations each.
const RawDataset& validate_raw(const RawDataset& raw);

/// Throws ValidationError unless between_var >= 0 and error_var > 0.
const PopulationTruth& validate_truth(const PopulationTruth& truth);

}  // namespace iqmeta
