#include "iqmeta/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace iqmeta {

long MetaDataset::total_size() const noexcept {
    return std::accumulate(studies.begin(), studies.end(), 0L,
                           [](long acc, const StudySummary& s) { return acc + s.size; });
}

bool MetaDataset::balanced() const noexcept {
    return std::all_of(studies.begin(), studies.end(), [this](const StudySummary& s) {
        return s.size == studies.front().size;
    });
}

const MetaDataset& validate_meta(const MetaDataset& dataset) {
    const std::size_t k = dataset.k();
    if (k < 2) {
        throw ValidationError("k < 2: a meta-analysis needs at least 2 studies, got " +
                              std::to_string(k));
    }
    for (std::size_t i = 0; i < k; ++i) {
        const StudySummary& s = dataset.studies[i];
        const std::string where = "study " + std::to_string(i + 1);
        if (!std::isfinite(s.effect)) {
            throw ValidationError(where + ": effect is not finite", i);
        }
        if (s.size < 2) {
            throw ValidationError(where + ": size must be >= 2, got " + std::to_string(s.size), i);
        }
        if (!(s.var_effect > 0.0) || !std::isfinite(s.var_effect)) {
            throw ValidationError(where + ": var_effect must be finite and > 0", i);
        }
    }
    if (!dataset.labels.empty()) {
        if (dataset.labels.size() != k) {
            throw ValidationError("label count " + std::to_string(dataset.labels.size()) +
                                  " does not match study count " + std::to_string(k));
        }
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < k; ++i) {
            if (!seen.insert(dataset.labels[i]).second) {
                throw ValidationError("duplicate study label '" + dataset.labels[i] + "'", i);
            }
        }
    }
    return dataset;
}

const RawDataset& validate_raw(const RawDataset& raw) {
    if (raw.k() < 2) {
        throw ValidationError("k < 2: need at least 2 groups, got " + std::to_string(raw.k()));
    }
    for (std::size_t i = 0; i < raw.k(); ++i) {
        const auto& g = raw.groups[i];
        if (g.size() < 2) {
            throw ValidationError("group " + std::to_string(i + 1) +
                                      ": needs at least 2 observations",
                                  i);
        }
        if (!std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); })) {
            throw ValidationError("group " + std::to_string(i + 1) + ": non-finite observation",
                                  i);
        }
    }
    return raw;
}

const PopulationTruth& validate_truth(const PopulationTruth& truth) {
    if (!std::isfinite(truth.grand_mean)) {
        throw ValidationError("grand mean must be finite");
    }
    if (!(truth.between_var >= 0.0) || !std::isfinite(truth.between_var)) {
        throw ValidationError("between-study variance must be finite and >= 0");
    }
    if (!(truth.error_var > 0.0) || !std::isfinite(truth.error_var)) {
        throw ValidationError("error variance must be finite and > 0");
    }
    return truth;
}

}  // namespace iqmeta
