// Prints one PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "iqmeta/distributions.hpp"
#include "iqmeta/estimators.hpp"
#include "iqmeta/io.hpp"
#include "iqmeta/simulation.hpp"
#include "oracles/f_oracle.hpp"
#include "unit/fixtures.hpp"

using namespace iqmeta;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 42;

struct Check {
    bool ok = true;
    std::vector<std::string> notes;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
        }
        notes.push_back((cond ? "" : "!") + what);
    }
    void near(double got, double want, double tol, const std::string& name) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s=%.6g (want %.6g +/- %.2g)", name.c_str(), got, want,
                      tol);
        expect(std::abs(got - want) <= tol, buf);
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
            ++j;
        }
        for (std::size_t m = i; m <= j; ++m) {
            r[idx[m]] = 0.5 * static_cast<double>(i + j) + 1.0;
        }
        i = j + 1;
    }
    return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += rx[i] / n;
        my += ry[i] / n;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Check real_data() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    io::AnalysisRequest req;
    req.input_path = fs::path(IQMETA_DATA_DIR) / "stroke_trials.csv";
    const auto out = io::analyze(req);
    const double elapsed = seconds_since(t0);
    const HeterogeneityReport& r = out.report;
    c.near(r.q_stat, 106.26, 0.02, "Q");
    c.near(r.sum_w, 7.68, 0.01, "sum_w");
    c.near(r.i2_point, 0.92, 0.005, "I2");
    c.near(r.grand_mean, -7.55, 0.01, "ybar");
    c.near(r.msb, 189.83, 0.05, "MSB");
    c.near(r.msw, 25.81, 0.02, "MSW");
    c.near(r.nbar, 8.97, 0.005, "nbar");
    c.near(r.iq_point, 0.41, 0.005, "IQ");
    c.expect(r.j2.has_value(), "J2 present");
    if (r.j2) {
        c.near(r.j2->j2_raw, -0.25, 0.02, "J2_hat");
        c.expect(r.j2->j2 == 0.0, fmt("J2=%.6g", r.j2->j2));
    }
    c.expect(elapsed < 1.0, fmt("runtime=%.3fs", elapsed));
    return c;
}

Check motivating_example() {
    Check c;
    c.near(icc_ht_true({6.0, 25.0}), 0.194, 1e-3, "ICC_HT(25)");
    c.near(icc_ht_true({6.0, 2.5}), 0.706, 1e-3, "ICC_HT(2.5)");
    c.near(icc_ht_true({6.0, 0.25}), 0.96, 1e-3, "ICC_HT(0.25)");
    c.near(icc_ma_true({6.0, 100.0}), 0.0566, 1e-4, "ICC_MA(6,100)");
    return c;
}

Check simulation_reproduction() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    SimulationConfig cfg;
    cfg.tau2_list = {60.0};
    cfg.k_list = {10};
    cfg.n_grid = {10, 50, 100};
    cfg.replications = 10000;
    cfg.seed = kSeed;
    cfg.patterns = {SizePattern::balanced()};
    cfg.statistics = {Statistic::iq, Statistic::i2};
    const SimulationResult bal = run_experiment(cfg);

    std::vector<double> ns;
    std::vector<double> i2s;
    for (const auto& cell : bal.cells) {
        const double iq = cell.find(Statistic::iq)->mean;
        const double i2 = cell.find(Statistic::i2)->mean;
        c.near(iq, 0.375, 0.02, "meanIQ(n=" + std::to_string(cell.cell.n) + ")");
        ns.push_back(static_cast<double>(cell.cell.n));
        i2s.push_back(i2);
    }
    bool increasing = true;
    for (std::size_t i = 1; i < i2s.size(); ++i) {
        increasing = increasing && i2s[i] > i2s[i - 1];
    }
    c.expect(increasing, "meanI2 strictly increasing");
    c.expect(spearman(ns, i2s) >= 0.95, fmt("spearman=%.3f", spearman(ns, i2s)));
    c.expect(i2s.back() > 0.9, fmt("meanI2(n=100)=%.4f", i2s.back()));

    cfg.patterns = {SizePattern::unbalanced()};
    cfg.statistics = {Statistic::j2};
    const SimulationResult unb = run_experiment(cfg);
    for (const auto& cell : unb.cells) {
        const double j2 = cell.find(Statistic::j2)->mean;
        c.expect(j2 <= 0.1, fmt("meanJ2(unbalanced,n=%.0f)=", static_cast<double>(cell.cell.n)) +
                                fmt("%.4f", j2));
    }
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 300.0, fmt("runtime=%.1fs", elapsed));
    return c;
}

Check coverage() {
    Check c;
    SimulationConfig cfg;
    cfg.tau2_list = {60.0};
    cfg.sigma2 = 100.0;
    cfg.k_list = {10};
    cfg.n_grid = {50};
    cfg.alpha = 0.05;
    cfg.replications = 10000;
    cfg.seed = kSeed;
    cfg.statistics = {Statistic::iq};
    const CellResult cell = run_cell(cfg, enumerate_cells(cfg).front(), 0);
    const double cov = cell.coverage.value_or(-1.0);
    c.expect(cov >= 0.94 && cov <= 0.96, fmt("coverage=%.4f", cov));
    return c;
}

Check oracle_equivalence() {
    Check c;
    std::mt19937_64 rng(kSeed);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const RawDataset raw = fixtures::random_raw(rng, 2, 10, 2, 30);
        const double a = iq_point(summarize_raw(raw));
        const double b = anova_icc_raw(raw).icc;
        worst = std::max(worst, std::abs(a - b));
    }
    c.expect(worst <= 1e-10, fmt("max|IQ-ANOVA|=%.3g", worst));

    double worst_pt = 0.0;
    double worst_ci = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const MetaDataset d = fixtures::random_meta(rng, true);
        worst_pt = std::max(worst_pt, std::abs(iq_point(d) - iq_point_balanced(d)));
        const Interval u = iq_ci(d, 0.05);
        const Interval b = iq_ci_balanced(d, 0.05);
        worst_ci = std::max({worst_ci, std::abs(u.lower - b.lower), std::abs(u.upper - b.upper)});
    }
    c.expect(worst_pt <= 1e-12, fmt("balanced point max diff=%.3g", worst_pt));
    c.expect(worst_ci <= 1e-12, fmt("balanced CI max diff=%.3g", worst_ci));
    return c;
}

double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const double m = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
    }
    return d;
}

Check moments() {
    Check c;
    struct Config {
        std::string name;
        SizePattern pattern;
        std::size_t k;
        long n;
        double tau2;
    };
    const std::vector<Config> configs{
        {"balanced k=10 n=50 tau2=60", SizePattern::balanced(), 10, 50, 60.0},
        {"balanced k=3 n=20 tau2=6", SizePattern::balanced(), 3, 20, 6.0},
        {"unbalanced k=5 n=10 tau2=60", SizePattern::unbalanced(), 5, 10, 60.0},
    };
    constexpr long kM = 10000;
    const double sigma2 = 100.0;
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        const Config& cf = configs[ci];
        const std::vector<long> sizes = cf.pattern.sizes(cf.n, cf.k);
        const PopulationTruth truth{0.0, cf.tau2, sigma2};
        std::vector<double> msb(kM);
        std::vector<double> msw(kM);
        double nbar = 0.0;
        for (long r = 0; r < kM; ++r) {
            RandomStream s = RandomStream::for_replication(kSeed, static_cast<std::uint32_t>(ci),
                                                           static_cast<std::uint32_t>(r));
            const MetaDataset d = summarize_raw(generate_replication(truth, sizes, s));
            const MeanSquares ms = mean_squares(d);
            msb[r] = ms.msb;
            msw[r] = ms.msw;
            nbar = adjusted_sample_size(d);
        }
        const auto mean_se = [](const std::vector<double>& v) {
            double m = 0.0;
            for (double x : v) {
                m += x;
            }
            m /= static_cast<double>(v.size());
            double ss = 0.0;
            for (double x : v) {
                ss += (x - m) * (x - m);
            }
            return std::pair{m, std::sqrt(ss / static_cast<double>(v.size() - 1)) /
                                    std::sqrt(static_cast<double>(v.size()))};
        };
        const auto [mb, sb] = mean_se(msb);
        const auto [mw, sw] = mean_se(msw);
        const double eb = nbar * cf.tau2 + sigma2;
        c.expect(std::abs(mb - eb) <= 4.0 * sb,
                 cf.name + fmt(": MSB z=%.2f", (mb - eb) / sb));
        c.expect(std::abs(mw - sigma2) <= 4.0 * sw,
                 cf.name + fmt(": MSW z=%.2f", (mw - sigma2) / sw));

        if (cf.pattern.kind() == SizePattern::Kind::balanced) {
            const double df = static_cast<double>(cf.k) - 1.0;
            const double scale = static_cast<double>(cf.n) * cf.tau2 + sigma2;
            std::vector<double> stat(kM);
            for (long r = 0; r < kM; ++r) {
                stat[r] = df * msb[r] / scale;
            }
            const double d = ks_statistic(stat, [df](double x) { return chi_square_cdf(x, df); });
            // Asymptotic Kolmogorov critical value at the 0.1% level.
            const double crit = 1.94947 / std::sqrt(static_cast<double>(kM));
            c.expect(d <= crit, cf.name + fmt(": KS D=%.4f", d) + fmt(" (crit %.4f)", crit));
        }
    }
    return c;
}

MetaDataset transform(const MetaDataset& d, double a, double b) {
    MetaDataset out = d;
    for (auto& s : out.studies) {
        s.effect = a + b * s.effect;
        s.var_effect = b * b * s.var_effect;
    }
    return out;
}

Check invariance() {
    Check c;
    std::mt19937_64 rng(kSeed);
    std::vector<MetaDataset> sets{fixtures::stroke_trials()};
    for (int i = 0; i < 100; ++i) {
        sets.push_back(fixtures::random_meta(rng));
    }
    double worst = 0.0;
    for (const auto& d : sets) {
        const MetaDataset t = transform(d, 7.0, 3.0);
        const Interval ci0 = iq_ci(d, 0.05);
        const Interval ci1 = iq_ci(t, 0.05);
        worst = std::max({worst, std::abs(iq_point(d) - iq_point(t)),
                          std::abs(i_squared(d) - i_squared(t)), std::abs(ci0.lower - ci1.lower),
                          std::abs(ci0.upper - ci1.upper)});
    }
    c.expect(worst <= 1e-12, fmt("max diff=%.3g over 101 datasets", worst));
    return c;
}

Check special_functions() {
    Check c;
    const std::vector<double> probs{0.001, 0.025, 0.1, 0.5, 0.9, 0.975, 0.999};
    const std::vector<std::pair<double, double>> dfs{{9, 82}, {1, 1}, {2, 30}, {5, 5}, {29, 1450}};
    std::vector<std::array<double, 3>> grid;
    for (const auto& [d1, d2] : dfs) {
        for (double p : probs) {
            if (grid.size() < 30) {
                grid.push_back({p, d1, d2});
            }
        }
    }
    double worst = 0.0;
    double worst_recip = 0.0;
    for (const auto& [p, d1, d2] : grid) {
        const double q = f_quantile(p, d1, d2);
        worst = std::max(worst, rel_err(q, oracle::f_quantile_bisection(p, d1, d2)));
        worst_recip = std::max(worst_recip, rel_err(q, 1.0 / f_quantile(1.0 - p, d2, d1)));
    }
    c.expect(grid.size() == 30, "grid points=" + std::to_string(grid.size()));
    c.expect(worst <= 1e-8, fmt("max rel err vs oracle=%.3g", worst));
    c.expect(worst_recip <= 1e-9, fmt("max reciprocal rel err=%.3g", worst_recip));
    return c;
}

Check determinism() {
    Check c;
    const fs::path dir = fs::temp_directory_path() / "iqmeta_acceptance";
    fs::create_directories(dir);
    const fs::path cfg = dir / "det.cfg";
    {
        std::ofstream out(cfg);
        out << "tau2_list=6,60\nk_list=3,10\npattern=balanced,unbalanced\nn_start=10\n"
               "n_stop=40\nn_step=10\nreplications=500\nseed=42\nstatistics=iq,i2,j2\n";
    }
    const auto read = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    };
    io::simulate(cfg, dir / "a.csv", std::nullopt, 1);
    io::simulate(cfg, dir / "b.csv", std::nullopt, 1);
    io::simulate(cfg, dir / "c.csv", std::nullopt, 4);
    const std::string a = read(dir / "a.csv");
    c.expect(!a.empty(), "output written");
    c.expect(a == read(dir / "b.csv"), "repeat run identical");
    c.expect(a == read(dir / "c.csv"), "1 vs 4 threads identical");
    fs::remove_all(dir);
    return c;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
        {"1 real-data reproduction", real_data},
        {"2 motivating-example measures", motivating_example},
        {"3 simulation reproduction", simulation_reproduction},
        {"4 CI coverage", coverage},
        {"5 oracle equivalence", oracle_equivalence},
        {"6 moment and distribution checks", moments},
        {"7 location-scale invariance", invariance},
        {"8 special functions", special_functions},
        {"9 determinism", determinism},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Check c;
        try {
            c = run();
        } catch (const std::exception& e) {
            c.ok = false;
            c.notes.push_back(std::string("!exception: ") + e.what());
        }
        std::string detail;
        for (const auto& n : c.notes) {
            detail += (detail.empty() ? "" : "; ") + n;
        }
        std::printf("%s  C%s  [%s]\n", c.ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
        std::fflush(stdout);
        failed += c.ok ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
                criteria.size());
    return failed == 0 ? 0 : 1;
}
