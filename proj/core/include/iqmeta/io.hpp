#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iqmeta/model.hpp"
#include "iqmeta/simulation.hpp"

namespace iqmeta::io {

/// Shortest decimal text that parses back to exactly `v`; "NA" for NaN.
std::string format_full(double v);

/// Fixed 4-decimal rendering used in text reports.
std::string format_fixed4(double v);

/// Reads a summary CSV with header `study,y,n,var_y`: label, effect size,
/// sample size, and squared standard error of the effect (SE^2, not the SD).
/// Throws InputError with the 1-based line number on malformed input and
/// ValidationError when the dataset fails validate_meta.
MetaDataset parse_summary_csv(std::istream& in);
MetaDataset parse_summary_csv(const std::filesystem::path& path);

/// Writes the same format with full-precision numbers.
void write_summary_csv(const MetaDataset& dataset, std::ostream& out);

/// "iq,i2,j2" (any order, case-insensitive) -> statistics. Throws InputError
/// on unknown names or an empty list.
std::vector<Statistic> parse_statistics(std::string_view list);

enum class OutputFormat { text, structured };

struct AnalysisRequest {
    std::filesystem::path input_path;
    double alpha = 0.05;
    std::vector<Statistic> statistics{Statistic::iq, Statistic::i2, Statistic::j2};
    OutputFormat output_format = OutputFormat::text;
    double j2_tol = 1e-5;
    long j2_max_iter = 10000;
};

std::string render_text(const HeterogeneityReport& report, std::span<const Statistic> stats);

/// JSON document; every field keyed by an ASCII name and labelled with its
/// conventional symbol. Numbers are written at full precision.
std::string render_structured(const HeterogeneityReport& report,
                              std::span<const Statistic> stats);

struct AnalysisOutput {
    HeterogeneityReport report;
    std::string rendered;
};

AnalysisOutput analyze(const AnalysisRequest& request);

/// Flat `key=value` file; `#` starts a comment. Keys: mu, sigma2, tau2_list,
/// k_list, pattern, n_start, n_stop, n_step, replications, alpha, seed,
/// statistics, j2_balanced, j2_tol, j2_max_iter. Unknown or repeated keys
/// throw InputError.
SimulationConfig parse_simulation_config(std::istream& in);
SimulationConfig parse_simulation_config(const std::filesystem::path& path);

/// Header `tau2,k,pattern,n,statistic,mean,mc_se,truth,coverage,nonconv_rate`,
/// one row per (cell, statistic). Non-applicable fields are empty; an
/// undefined MC standard error is written as NA.
void write_simulation_csv(const SimulationResult& result, std::ostream& out);

/// Parses `config_path`, applies overrides, runs the experiment and writes the
/// CSV to `out_path`.
SimulationResult simulate(const std::filesystem::path& config_path,
                          const std::filesystem::path& out_path,
                          std::optional<std::uint64_t> seed_override = std::nullopt,
                          std::optional<unsigned> threads = std::nullopt);

struct DensityPoint {
    std::string study;
    double x = 0.0;
    double density = 0.0;
};

/// Normal densities with mean y_i and variance n_i * var_i (the implied
/// population distribution of each study), sampled at `points` evenly spaced
/// abscissae over mean +/- 4 SD.
std::vector<DensityPoint> population_curves(const MetaDataset& dataset, int points = 401);

/// Header `study,x,density`.
void write_population_curves(std::span<const DensityPoint> curves, std::ostream& out);

void popcurves(const std::filesystem::path& input_path, const std::filesystem::path& out_path);

}  // namespace iqmeta::io
