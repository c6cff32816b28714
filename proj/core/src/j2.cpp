#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "iqmeta/estimators.hpp"

namespace iqmeta {

namespace {

struct Iterate {
    double mu;
    double sigma2;
    double tau2;

    bool finite() const { return std::isfinite(mu) && std::isfinite(sigma2) && std::isfinite(tau2); }
};

}  // namespace

// Each study has marginal variance tau2 + sigma2 * w_i with w_i = 1 / n_i.
// Updates are applied in sequence (mu, then sigma2, then tau2), each using the
// freshest values of the parameters already updated in this sweep.
J2Result j2_estimate(const MetaDataset& dataset, const J2Options& options) {
    const std::size_t k = dataset.k();
    std::vector<double> w(k);
    std::vector<double> y(k);
    double sum_inv_w = 0.0;
    double sum_y_inv_w = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        w[i] = 1.0 / static_cast<double>(dataset.studies[i].size);
        y[i] = dataset.studies[i].effect;
        sum_inv_w += 1.0 / w[i];
        sum_y_inv_w += y[i] / w[i];
    }

    Iterate cur{sum_y_inv_w / sum_inv_w, 0.0, 0.0};
    for (std::size_t i = 0; i < k; ++i) {
        cur.sigma2 += (y[i] - cur.mu) * (y[i] - cur.mu) / w[i];
    }
    cur.sigma2 /= static_cast<double>(k);

    J2Result out;
    out.identifiability_warning = dataset.balanced();

    while (out.iterations < options.max_iter) {
        const Iterate prev = cur;

        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double v = cur.tau2 + cur.sigma2 * w[i];
            num += y[i] / v;
            den += 1.0 / v;
        }
        cur.mu = num / den;

        num = 0.0;
        den = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double v = cur.tau2 + cur.sigma2 * w[i];
            const double d = y[i] - cur.mu;
            num += (d * d * w[i] - w[i] * cur.tau2) / (v * v);
            den += (w[i] * w[i]) / (v * v);
        }
        const double sigma2_next = num / den;

        num = 0.0;
        den = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double v = cur.tau2 + sigma2_next * w[i];
            const double d = y[i] - cur.mu;
            num += (d * d - sigma2_next * w[i]) / (v * v);
            den += 1.0 / (v * v);
        }
        cur.sigma2 = sigma2_next;
        cur.tau2 = num / den;

        ++out.iterations;
        if (!cur.finite()) {
            cur = prev;
            out.aborted_nan = true;
            break;
        }
        if (std::abs(cur.mu - prev.mu) <= options.tol &&
            std::abs(cur.sigma2 - prev.sigma2) <= options.tol &&
            std::abs(cur.tau2 - prev.tau2) <= options.tol) {
            out.converged = true;
            break;
        }
    }

    out.mu_hat = cur.mu;
    out.tau2_hat = cur.tau2;
    out.sigma2_hat = cur.sigma2;
    const double total = cur.tau2 + cur.sigma2;
    out.j2_raw = (total != 0.0) ? cur.tau2 / total : std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(out.j2_raw)) {
        // Negative sigma2 estimates can push the ratio above 1.
        out.j2 = std::clamp(out.j2_raw, 0.0, 1.0);
    } else {
        out.j2 = 0.0;
        out.converged = false;
    }
    return out;
}

}  // namespace iqmeta
