#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iqmeta/estimators.hpp"
#include "iqmeta/model.hpp"
#include "iqmeta/random_stream.hpp"

namespace iqmeta {

enum class Statistic { iq, i2, j2 };

std::string_view statistic_name(Statistic s) noexcept;  // "IQ", "I2", "J2"

/// How per-study sizes are derived from the base size n of a grid cell.
class SizePattern {
public:
    enum class Kind { balanced, unbalanced, custom };

    /// n_i = n for every study.
    static SizePattern balanced() { return SizePattern(Kind::balanced, {}); }
    /// n_i = i * n, i = 1..k.
    static SizePattern unbalanced() { return SizePattern(Kind::unbalanced, {}); }
    /// n_i = multipliers[i] * n; k is fixed by the multiplier count.
    static SizePattern custom(std::vector<long> multipliers);

    Kind kind() const noexcept { return kind_; }
    std::string name() const;
    std::vector<long> sizes(long n, std::size_t k) const;

private:
    SizePattern(Kind kind, std::vector<long> multipliers)
        : kind_(kind), multipliers_(std::move(multipliers)) {}

    Kind kind_;
    std::vector<long> multipliers_;
};

struct SimulationConfig {
    double mu = 0.0;
    double sigma2 = 100.0;
    std::vector<double> tau2_list{6.0, 60.0};
    std::vector<std::size_t> k_list{3, 10};
    std::vector<SizePattern> patterns{SizePattern::balanced()};
    std::vector<long> n_grid{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    long replications = 10000;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    std::vector<Statistic> statistics{Statistic::iq, Statistic::i2, Statistic::j2};
    /// Evaluate J^2 on balanced cells too (its MLE may be non-unique there).
    bool j2_balanced = false;
    J2Options j2;
    /// Worker threads; results do not depend on this.
    unsigned threads = 1;
};

/// Throws InputError on an invalid configuration.
void validate_config(const SimulationConfig& config);

struct SimulationCell {
    std::size_t pattern_index = 0;
    double tau2 = 0.0;
    std::size_t k = 0;
    long n = 0;
};

/// Cells in output order: tau2, then k, then pattern, then n.
std::vector<SimulationCell> enumerate_cells(const SimulationConfig& config);

struct StatisticSummary {
    Statistic statistic = Statistic::iq;
    double mean = 0.0;
    /// Sample SD / sqrt(M); NaN when fewer than 2 replications were evaluated.
    double mc_se = 0.0;
    long evaluated = 0;
};

struct CellResult {
    SimulationCell cell;
    std::string pattern;
    double icc_ma_truth = 0.0;
    std::vector<StatisticSummary> statistics;
    /// Share of replications whose IQ interval contained icc_ma_truth.
    std::optional<double> coverage;
    /// Share of J^2 fits that did not converge (cap reached or NaN abort).
    std::optional<double> j2_nonconvergence_rate;
    /// Replications skipped because summarized data failed validation.
    long degenerate_replications = 0;

    const StatisticSummary* find(Statistic s) const;
};

struct SimulationResult {
    std::vector<CellResult> cells;
};

/// Draws delta_i ~ N(0, tau2) per study, then y_ij = mu + delta_i + xi_ij,
/// xi_ij ~ N(0, sigma2).
RawDataset generate_replication(const PopulationTruth& truth, std::span<const long> sizes,
                                RandomStream& stream);

/// Statistics evaluated on one cell (J^2 only when applicable to the cell).
std::vector<Statistic> statistics_for_cell(const SimulationConfig& config,
                                           const SimulationCell& cell);

/// Runs all replications of one cell. `cell_index` selects the random
/// substreams.
CellResult run_cell(const SimulationConfig& config, const SimulationCell& cell,
                    std::uint32_t cell_index);

SimulationResult run_experiment(const SimulationConfig& config);

}  // namespace iqmeta
