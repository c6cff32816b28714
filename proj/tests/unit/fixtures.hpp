#pragma once

#include <random>
#include <vector>

#include "iqmeta/model.hpp"

namespace iqmeta::fixtures {

/// Ten-study stem-cell stroke meta-analysis (NIHSS point difference).
inline MetaDataset stroke_trials() {
    MetaDataset d;
    d.studies = {{-3.10, 8, 1.81},  {-6.30, 11, 3.16}, {-9.40, 10, 0.53}, {-14.20, 20, 3.04},
                 {-7.00, 12, 1.40}, {-9.00, 10, 1.60}, {-3.40, 6, 2.41},  {-2.20, 5, 1.15},
                 {-1.40, 5, 0.97},  {-2.00, 5, 1.06}};
    d.labels = {"Wang (2013)",      "Prasad (2012)",  "Moniche (2012)", "Friedrich (2012)",
                "Honmou (2011)",    "Savitz (2011)",  "Battistella (2011)",
                "Suarez (2009)",    "Savitz (2005)",  "Bang (2005)"};
    return d;
}

/// Random raw dataset: k in [k_lo, k_hi], group sizes in [n_lo, n_hi],
/// observations with group offsets so both mean squares are non-trivial.
inline RawDataset random_raw(std::mt19937_64& rng, int k_lo = 2, int k_hi = 10, int n_lo = 2,
                             int n_hi = 30, bool balanced = false) {
    std::uniform_int_distribution<int> kd(k_lo, k_hi);
    std::uniform_int_distribution<int> nd(n_lo, n_hi);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> spread(0.1, 5.0);
    RawDataset raw;
    const int k = kd(rng);
    const int common = nd(rng);
    const double offset_sd = spread(rng);
    const double noise_sd = spread(rng);
    for (int i = 0; i < k; ++i) {
        const int n = balanced ? common : nd(rng);
        const double offset = offset_sd * z(rng);
        std::vector<double> g(static_cast<std::size_t>(n));
        for (auto& v : g) {
            v = offset + noise_sd * z(rng);
        }
        raw.groups.push_back(std::move(g));
    }
    return raw;
}

/// Random valid summary dataset.
inline MetaDataset random_meta(std::mt19937_64& rng, bool balanced = false) {
    std::uniform_int_distribution<int> kd(2, 15);
    std::uniform_int_distribution<long> nd(2, 200);
    std::normal_distribution<double> y(0.0, 3.0);
    std::uniform_real_distribution<double> v(0.05, 5.0);
    MetaDataset d;
    const int k = kd(rng);
    const long common = nd(rng);
    for (int i = 0; i < k; ++i) {
        d.studies.push_back({y(rng), balanced ? common : nd(rng), v(rng)});
    }
    return d;
}

}  // namespace iqmeta::fixtures
