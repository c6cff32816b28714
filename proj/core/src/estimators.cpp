#include "iqmeta/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iqmeta/distributions.hpp"

namespace iqmeta {

namespace {

double measure_ratio(const MeasureInputs& in) {
    if (!(in.between_var >= 0.0) || !std::isfinite(in.between_var)) {
        throw ValidationError("between-study variance must be finite and >= 0");
    }
    if (!(in.error_var > 0.0) || !std::isfinite(in.error_var)) {
        throw ValidationError("error variance must be finite and > 0");
    }
    return in.between_var / (in.between_var + in.error_var);
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InputError("alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
}

Interval ci_with(double msb, double msw, double n, double df1, double df2, double alpha) {
    check_alpha(alpha);
    const double f_hi = f_quantile(1.0 - alpha / 2.0, df1, df2);
    const double f_lo = f_quantile(alpha / 2.0, df1, df2);
    return icc_interval(msb / msw, f_lo, f_hi, n);
}

double require_balanced(const MetaDataset& dataset) {
    if (!dataset.balanced()) {
        throw InputError("balanced form requested for a dataset with unequal study sizes");
    }
    return static_cast<double>(dataset.studies.front().size);
}

}  // namespace

double icc_ma_true(const MeasureInputs& in) { return measure_ratio(in); }

double icc_ht_true(const MeasureInputs& in) { return measure_ratio(in); }

CochranQ cochran_q(const MetaDataset& dataset) {
    CochranQ out;
    for (const auto& s : dataset.studies) {
        const double w = 1.0 / s.var_effect;
        out.sum_w += w;
        out.sum_wy += w * s.effect;
    }
    out.weighted_mean = out.sum_wy / out.sum_w;
    for (const auto& s : dataset.studies) {
        const double d = s.effect - out.weighted_mean;
        out.q += d * d / s.var_effect;
    }
    return out;
}

double i_squared_from_q(double q, std::size_t k) {
    if (q <= 0.0) {
        return 0.0;
    }
    return std::max((q - static_cast<double>(k - 1)) / q, 0.0);
}

double i_squared(const MetaDataset& dataset) {
    return i_squared_from_q(cochran_q(dataset).q, dataset.k());
}

double adjusted_sample_size(const MetaDataset& dataset) {
    double total = 0.0;
    double total_sq = 0.0;
    for (const auto& s : dataset.studies) {
        const double n = static_cast<double>(s.size);
        total += n;
        total_sq += n * n;
    }
    return (total - total_sq / total) / static_cast<double>(dataset.k() - 1);
}

MeanSquares mean_squares(const MetaDataset& dataset) {
    const double k = static_cast<double>(dataset.k());
    double total = 0.0;
    double weighted = 0.0;
    for (const auto& s : dataset.studies) {
        total += static_cast<double>(s.size);
        weighted += static_cast<double>(s.size) * s.effect;
    }
    MeanSquares out;
    out.grand_mean = weighted / total;
    double ssb = 0.0;
    double ssw = 0.0;
    for (const auto& s : dataset.studies) {
        const double n = static_cast<double>(s.size);
        const double d = s.effect - out.grand_mean;
        ssb += n * d * d;
        ssw += n * (n - 1.0) * s.var_effect;
    }
    out.msb = ssb / (k - 1.0);
    out.msw = ssw / (total - k);
    return out;
}

double icc_from_mean_squares(double msb, double msw, double n) {
    return std::max((msb - msw) / (msb + (n - 1.0) * msw), 0.0);
}

double iq_point(const MetaDataset& dataset) {
    const MeanSquares ms = mean_squares(dataset);
    return icc_from_mean_squares(ms.msb, ms.msw, adjusted_sample_size(dataset));
}

Interval icc_interval(double f_ratio, double f_lower_q, double f_upper_q, double n) {
    const double r_lo = f_ratio / f_upper_q;
    const double r_hi = f_ratio / f_lower_q;
    Interval ci;
    ci.lower = std::max((r_lo - 1.0) / (n + r_lo - 1.0), 0.0);
    ci.upper = std::max((r_hi - 1.0) / (n + r_hi - 1.0), 0.0);
    return ci;
}

Interval iq_ci(const MetaDataset& dataset, double alpha) {
    const MeanSquares ms = mean_squares(dataset);
    const double k = static_cast<double>(dataset.k());
    const double total = static_cast<double>(dataset.total_size());
    return ci_with(ms.msb, ms.msw, adjusted_sample_size(dataset), k - 1.0, total - k, alpha);
}

namespace {

MeanSquares balanced_mean_squares(const MetaDataset& dataset, double n) {
    const double k = static_cast<double>(dataset.k());
    double sum_y = 0.0;
    double sum_var = 0.0;
    for (const auto& s : dataset.studies) {
        sum_y += s.effect;
        sum_var += s.var_effect;
    }
    MeanSquares out;
    out.grand_mean = sum_y / k;
    double ss = 0.0;
    for (const auto& s : dataset.studies) {
        const double d = s.effect - out.grand_mean;
        ss += d * d;
    }
    out.msb = n * ss / (k - 1.0);
    out.msw = n * sum_var / k;
    return out;
}

}  // namespace

double iq_point_balanced(const MetaDataset& dataset) {
    const double n = require_balanced(dataset);
    const MeanSquares ms = balanced_mean_squares(dataset, n);
    return icc_from_mean_squares(ms.msb, ms.msw, n);
}

Interval iq_ci_balanced(const MetaDataset& dataset, double alpha) {
    const double n = require_balanced(dataset);
    const double k = static_cast<double>(dataset.k());
    const MeanSquares ms = balanced_mean_squares(dataset, n);
    return ci_with(ms.msb, ms.msw, n, k - 1.0, k * n - k, alpha);
}

MetaDataset summarize_raw(const RawDataset& raw) {
    MetaDataset out;
    out.studies.reserve(raw.k());
    for (std::size_t i = 0; i < raw.k(); ++i) {
        const auto& g = raw.groups[i];
        if (g.size() < 2) {
            throw ValidationError("group " + std::to_string(i + 1) +
                                      ": needs at least 2 observations",
                                  i);
        }
        const double n = static_cast<double>(g.size());
        double sum = 0.0;
        for (double v : g) {
            sum += v;
        }
        const double mean = sum / n;
        double ss = 0.0;
        for (double v : g) {
            ss += (v - mean) * (v - mean);
        }
        out.studies.push_back({mean, static_cast<long>(g.size()), ss / (n * (n - 1.0))});
    }
    return out;
}

AnovaIcc anova_icc_raw(const RawDataset& raw) {
    validate_raw(raw);
    const double k = static_cast<double>(raw.k());
    double total = 0.0;
    double total_sq = 0.0;
    double grand_sum = 0.0;
    for (const auto& g : raw.groups) {
        const double n = static_cast<double>(g.size());
        total += n;
        total_sq += n * n;
        for (double v : g) {
            grand_sum += v;
        }
    }
    const double grand_mean = grand_sum / total;

    double ssb = 0.0;
    double ssw = 0.0;
    for (const auto& g : raw.groups) {
        double sum = 0.0;
        for (double v : g) {
            sum += v;
        }
        const double mean = sum / static_cast<double>(g.size());
        ssb += static_cast<double>(g.size()) * (mean - grand_mean) * (mean - grand_mean);
        for (double v : g) {
            ssw += (v - mean) * (v - mean);
        }
    }

    AnovaIcc out;
    out.msb = ssb / (k - 1.0);
    out.msw = ssw / (total - k);
    out.nbar = (total - total_sq / total) / (k - 1.0);
    if (out.msw == 0.0) {
        out.degenerate = true;
        out.icc = out.msb > 0.0 ? 1.0 : 0.0;
        return out;
    }
    out.icc = icc_from_mean_squares(out.msb, out.msw, out.nbar);
    return out;
}

HeterogeneityReport assess(const MetaDataset& dataset, const AssessOptions& options) {
    validate_meta(dataset);
    check_alpha(options.alpha);

    HeterogeneityReport r;
    r.k = dataset.k();
    r.alpha = options.alpha;

    const CochranQ q = cochran_q(dataset);
    r.q_stat = q.q;
    r.sum_w = q.sum_w;
    r.sum_wy = q.sum_wy;
    r.i2_point = i_squared_from_q(q.q, r.k);

    const MeanSquares ms = mean_squares(dataset);
    r.grand_mean = ms.grand_mean;
    r.msb = ms.msb;
    r.msw = ms.msw;
    r.nbar = adjusted_sample_size(dataset);
    r.f_ratio = ms.msb / ms.msw;
    r.iq_point = icc_from_mean_squares(ms.msb, ms.msw, r.nbar);
    r.iq_ci = iq_ci(dataset, options.alpha);

    if (options.with_j2) {
        r.j2 = j2_estimate(dataset, options.j2);
    }
    return r;
}

}  // namespace iqmeta
