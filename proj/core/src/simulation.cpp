#include "iqmeta/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "iqmeta/distributions.hpp"

namespace iqmeta {

std::string_view statistic_name(Statistic s) noexcept {
    switch (s) {
        case Statistic::iq: return "IQ";
        case Statistic::i2: return "I2";
        case Statistic::j2: return "J2";
    }
    return "?";
}

SizePattern SizePattern::custom(std::vector<long> multipliers) {
    if (multipliers.size() < 2) {
        throw InputError("custom size pattern needs at least 2 studies");
    }
    if (std::any_of(multipliers.begin(), multipliers.end(), [](long m) { return m < 1; })) {
        throw InputError("custom size pattern multipliers must be >= 1");
    }
    return SizePattern(Kind::custom, std::move(multipliers));
}

std::string SizePattern::name() const {
    switch (kind_) {
        case Kind::balanced: return "balanced";
        case Kind::unbalanced: return "unbalanced";
        case Kind::custom: return "custom";
    }
    return "?";
}

std::vector<long> SizePattern::sizes(long n, std::size_t k) const {
    std::vector<long> out;
    switch (kind_) {
        case Kind::balanced:
            out.assign(k, n);
            break;
        case Kind::unbalanced:
            for (std::size_t i = 1; i <= k; ++i) {
                out.push_back(static_cast<long>(i) * n);
            }
            break;
        case Kind::custom:
            for (long m : multipliers_) {
                out.push_back(m * n);
            }
            break;
    }
    return out;
}

void validate_config(const SimulationConfig& config) {
    validate_truth({config.mu, 0.0, config.sigma2});
    if (config.tau2_list.empty() || config.k_list.empty() || config.patterns.empty()) {
        throw InputError("tau2_list, k_list and pattern must be non-empty");
    }
    for (double t : config.tau2_list) {
        if (!(t >= 0.0) || !std::isfinite(t)) {
            throw InputError("tau2 values must be finite and >= 0");
        }
    }
    for (std::size_t k : config.k_list) {
        if (k < 2) {
            throw InputError("k values must be >= 2");
        }
    }
    if (config.n_grid.empty()) {
        throw InputError("n grid must be non-empty");
    }
    for (long n : config.n_grid) {
        if (n < 2) {
            throw InputError("every base size in the n grid must be >= 2");
        }
    }
    if (config.replications < 1) {
        throw InputError("replications must be >= 1");
    }
    if (config.replications > std::numeric_limits<std::uint32_t>::max()) {
        throw InputError("replications exceed the random substream range");
    }
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
        throw InputError("alpha must lie in (0, 1)");
    }
    if (!(config.j2.tol > 0.0) || config.j2.max_iter < 1) {
        throw InputError("J2 tolerance must be > 0 and max_iter >= 1");
    }
}

std::vector<SimulationCell> enumerate_cells(const SimulationConfig& config) {
    std::vector<SimulationCell> cells;
    for (double tau2 : config.tau2_list) {
        for (std::size_t k : config.k_list) {
            for (std::size_t p = 0; p < config.patterns.size(); ++p) {
                for (long n : config.n_grid) {
                    cells.push_back({p, tau2, k, n});
                }
            }
        }
    }
    return cells;
}

const StatisticSummary* CellResult::find(Statistic s) const {
    for (const auto& st : statistics) {
        if (st.statistic == s) {
            return &st;
        }
    }
    return nullptr;
}

RawDataset generate_replication(const PopulationTruth& truth, std::span<const long> sizes,
                                RandomStream& stream) {
    RawDataset raw;
    raw.groups.reserve(sizes.size());
    for (long n : sizes) {
        const double study_mean = truth.grand_mean + sample_normal(0.0, truth.between_var, stream);
        std::vector<double> g(static_cast<std::size_t>(n));
        for (double& v : g) {
            v = sample_normal(study_mean, truth.error_var, stream);
        }
        raw.groups.push_back(std::move(g));
    }
    return raw;
}

std::vector<Statistic> statistics_for_cell(const SimulationConfig& config,
                                           const SimulationCell& cell) {
    const bool balanced =
        config.patterns[cell.pattern_index].kind() == SizePattern::Kind::balanced;
    std::vector<Statistic> out;
    for (Statistic s : {Statistic::iq, Statistic::i2, Statistic::j2}) {
        if (std::find(config.statistics.begin(), config.statistics.end(), s) ==
            config.statistics.end()) {
            continue;
        }
        if (s == Statistic::j2 && balanced && !config.j2_balanced) {
            continue;
        }
        out.push_back(s);
    }
    return out;
}

namespace {

struct Replicate {
    bool valid = false;
    double iq = 0.0;
    double i2 = 0.0;
    double j2 = 0.0;
    bool ci_hit = false;
    bool j2_converged = false;
};

template <typename Fn>
void parallel_for(long count, unsigned threads, Fn&& body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (threads == 1) {
        for (long i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<long> next{0};
    constexpr long kChunk = 64;
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (long start = next.fetch_add(kChunk); start < count;
                 start = next.fetch_add(kChunk)) {
                const long stop = std::min(count, start + kChunk);
                for (long i = start; i < stop; ++i) {
                    body(i);
                }
            }
        });
    }
}

StatisticSummary summarize(Statistic s, const std::vector<Replicate>& reps,
                           double Replicate::*field) {
    StatisticSummary out;
    out.statistic = s;
    double sum = 0.0;
    for (const auto& r : reps) {
        if (r.valid) {
            sum += r.*field;
            ++out.evaluated;
        }
    }
    if (out.evaluated == 0) {
        out.mean = std::numeric_limits<double>::quiet_NaN();
        out.mc_se = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const double m = static_cast<double>(out.evaluated);
    out.mean = sum / m;
    if (out.evaluated < 2) {
        out.mc_se = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    double ss = 0.0;
    for (const auto& r : reps) {
        if (r.valid) {
            const double d = r.*field - out.mean;
            ss += d * d;
        }
    }
    out.mc_se = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
    return out;
}

}  // namespace

CellResult run_cell(const SimulationConfig& config, const SimulationCell& cell,
                    std::uint32_t cell_index) {
    validate_config(config);
    const SizePattern& pattern = config.patterns[cell.pattern_index];
    const std::vector<long> sizes = pattern.sizes(cell.n, cell.k);
    const PopulationTruth truth{config.mu, cell.tau2, config.sigma2};
    const std::vector<Statistic> stats = statistics_for_cell(config, cell);
    const auto wants = [&](Statistic s) {
        return std::find(stats.begin(), stats.end(), s) != stats.end();
    };

    CellResult out;
    out.cell = cell;
    out.pattern = pattern.name();
    out.icc_ma_truth = icc_ma_true({cell.tau2, config.sigma2});

    if (stats.empty()) {
        return out;
    }

    // Degrees of freedom depend only on the sizes, so the F quantiles are
    // shared by every replication of the cell.
    const double k = static_cast<double>(sizes.size());
    double total = 0.0;
    for (long n : sizes) {
        total += static_cast<double>(n);
    }
    const double f_hi = f_quantile(1.0 - config.alpha / 2.0, k - 1.0, total - k);
    const double f_lo = f_quantile(config.alpha / 2.0, k - 1.0, total - k);

    std::vector<Replicate> reps(static_cast<std::size_t>(config.replications));
    parallel_for(config.replications, config.threads, [&](long r) {
        RandomStream stream = RandomStream::for_replication(config.seed, cell_index,
                                                            static_cast<std::uint32_t>(r));
        const RawDataset raw = generate_replication(truth, sizes, stream);
        const MetaDataset data = summarize_raw(raw);
        Replicate& rep = reps[static_cast<std::size_t>(r)];
        try {
            validate_meta(data);
        } catch (const ValidationError&) {
            return;
        }
        rep.valid = true;
        if (wants(Statistic::iq)) {
            const MeanSquares ms = mean_squares(data);
            const double nbar = adjusted_sample_size(data);
            rep.iq = icc_from_mean_squares(ms.msb, ms.msw, nbar);
            const Interval ci = icc_interval(ms.msb / ms.msw, f_lo, f_hi, nbar);
            rep.ci_hit = ci.lower <= out.icc_ma_truth && out.icc_ma_truth <= ci.upper;
        }
        if (wants(Statistic::i2)) {
            rep.i2 = i_squared(data);
        }
        if (wants(Statistic::j2)) {
            const J2Result j2 = j2_estimate(data, config.j2);
            rep.j2 = j2.j2;
            rep.j2_converged = j2.converged;
        }
    });

    long valid = 0;
    long hits = 0;
    long j2_failures = 0;
    for (const auto& r : reps) {
        if (!r.valid) {
            ++out.degenerate_replications;
            continue;
        }
        ++valid;
        hits += r.ci_hit ? 1 : 0;
        j2_failures += r.j2_converged ? 0 : 1;
    }

    for (Statistic s : stats) {
        double Replicate::*field = s == Statistic::iq   ? &Replicate::iq
                                   : s == Statistic::i2 ? &Replicate::i2
                                                        : &Replicate::j2;
        out.statistics.push_back(summarize(s, reps, field));
    }
    if (valid > 0 && wants(Statistic::iq)) {
        out.coverage = static_cast<double>(hits) / static_cast<double>(valid);
    }
    if (valid > 0 && wants(Statistic::j2)) {
        out.j2_nonconvergence_rate = static_cast<double>(j2_failures) / static_cast<double>(valid);
    }
    return out;
}

SimulationResult run_experiment(const SimulationConfig& config) {
    validate_config(config);
    const std::vector<SimulationCell> cells = enumerate_cells(config);
    if (cells.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw InputError("too many grid cells");
    }
    SimulationResult result;
    result.cells.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        result.cells.push_back(run_cell(config, cells[c], static_cast<std::uint32_t>(c)));
    }
    return result;
}

}  // namespace iqmeta
