#include "iqmeta/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "iqmeta/estimators.hpp"

namespace iqmeta::io {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!s.empty() && ws(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && ws(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end) {
        return std::nullopt;
    }
    return value;
}

// Splits one CSV record. Supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && trim(cur).empty()) {
            cur.clear();
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            fields.push_back(was_quoted ? cur : std::string(trim(cur)));
            cur.clear();
            was_quoted = false;
        } else {
            cur += c;
        }
    }
    if (quoted) {
        throw InputError("line " + std::to_string(line_no) + ": unterminated quoted field");
    }
    fields.push_back(was_quoted ? cur : std::string(trim(cur)));
    return fields;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "' for reading");
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

std::string study_label(const MetaDataset& d, std::size_t i) {
    return d.labels.empty() ? "study" + std::to_string(i + 1) : d.labels[i];
}

bool has(std::span<const Statistic> stats, Statistic s) {
    return std::find(stats.begin(), stats.end(), s) != stats.end();
}

// Display width of a UTF-8 string: code points, ignoring combining marks.
std::size_t display_width(std::string_view s) {
    std::size_t width = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto c = static_cast<unsigned char>(s[i]);
        if ((c & 0xC0) == 0x80) {
            continue;
        }
        const bool combining =
            c == 0xCC || (c == 0xCD && i + 1 < s.size() &&
                          static_cast<unsigned char>(s[i + 1]) <= 0xAF);
        if (!combining) {
            ++width;
        }
    }
    return width;
}

}  // namespace

std::string format_full(double v) {
    if (std::isnan(v)) {
        return "NA";
    }
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::string format_fixed4(double v) {
    if (std::isnan(v)) {
        return "NA";
    }
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "%.4f", v);
    std::string s(buf.data());
    return s == "-0.0000" ? "0.0000" : s;
}

// ---------------------------------------------------------------------------
// Summary CSV

MetaDataset parse_summary_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    MetaDataset data;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) {
            line.erase(0, 3);
        }
        if (trim(line).empty()) {
            continue;
        }
        const std::vector<std::string> fields = split_csv(line, line_no);
        if (!have_header) {
            const std::vector<std::string> expected{"study", "y", "n", "var_y"};
            std::vector<std::string> got;
            for (const auto& f : fields) {
                got.push_back(lower(f));
            }
            if (got != expected) {
                throw InputError("line " + std::to_string(line_no) +
                                 ": expected header 'study,y,n,var_y'");
            }
            have_header = true;
            continue;
        }
        const std::string where = "line " + std::to_string(line_no);
        if (fields.size() != 4) {
            throw InputError(where + ": expected 4 columns, found " +
                             std::to_string(fields.size()));
        }
        const auto y = parse_number<double>(fields[1]);
        const auto n = parse_number<long>(fields[2]);
        const auto var = parse_number<double>(fields[3]);
        if (!y) {
            throw InputError(where + ": y is not a number: '" + fields[1] + "'");
        }
        if (!n) {
            throw InputError(where + ": n is not an integer: '" + fields[2] + "'");
        }
        if (!var) {
            throw InputError(where + ": var_y is not a number: '" + fields[3] + "'");
        }
        if (*n < 2) {
            throw ValidationError(where + " (study '" + fields[0] + "'): n must be >= 2",
                                  data.k());
        }
        if (!(*var > 0.0)) {
            throw ValidationError(where + " (study '" + fields[0] + "'): var_y must be > 0",
                                  data.k());
        }
        data.labels.push_back(fields[0]);
        data.studies.push_back({*y, *n, *var});
    }
    if (!have_header) {
        throw InputError("empty input: missing header 'study,y,n,var_y'");
    }
    if (data.studies.empty()) {
        throw InputError("no data rows");
    }
    validate_meta(data);
    return data;
}

MetaDataset parse_summary_csv(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    return parse_summary_csv(in);
}

void write_summary_csv(const MetaDataset& dataset, std::ostream& out) {
    out << "study,y,n,var_y\n";
    for (std::size_t i = 0; i < dataset.k(); ++i) {
        const auto& s = dataset.studies[i];
        out << csv_field(study_label(dataset, i)) << ',' << format_full(s.effect) << ','
            << s.size << ',' << format_full(s.var_effect) << '\n';
    }
}

std::vector<Statistic> parse_statistics(std::string_view list) {
    std::vector<Statistic> out;
    std::string item;
    std::istringstream in{std::string(list)};
    while (std::getline(in, item, ',')) {
        const std::string name = lower(trim(item));
        Statistic s;
        if (name == "iq") {
            s = Statistic::iq;
        } else if (name == "i2") {
            s = Statistic::i2;
        } else if (name == "j2") {
            s = Statistic::j2;
        } else {
            throw InputError("unknown statistic '" + std::string(trim(item)) +
                             "' (expected iq, i2, j2)");
        }
        if (std::find(out.begin(), out.end(), s) == out.end()) {
            out.push_back(s);
        }
    }
    if (out.empty()) {
        throw InputError("statistics list is empty");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports

std::string render_text(const HeterogeneityReport& r, std::span<const Statistic> stats) {
    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("k", std::to_string(r.k));
    rows.emplace_back("alpha", format_fixed4(r.alpha));
    if (has(stats, Statistic::i2)) {
        rows.emplace_back("Q", format_fixed4(r.q_stat));
        rows.emplace_back("Σw", format_fixed4(r.sum_w));
        rows.emplace_back("Σwy", format_fixed4(r.sum_wy));
        rows.emplace_back("I²", format_fixed4(r.i2_point));
    }
    if (has(stats, Statistic::iq)) {
        rows.emplace_back("ȳ", format_fixed4(r.grand_mean));
        rows.emplace_back("MSB_MA", format_fixed4(r.msb));
        rows.emplace_back("MSW_MA", format_fixed4(r.msw));
        rows.emplace_back("n̄", format_fixed4(r.nbar));
        rows.emplace_back("F̄_MA", format_fixed4(r.f_ratio));
        rows.emplace_back("IQ", format_fixed4(r.iq_point));
        if (r.iq_ci) {
            rows.emplace_back("CI", "[" + format_fixed4(r.iq_ci->lower) + ", " +
                                        format_fixed4(r.iq_ci->upper) + "]");
        }
    }
    if (has(stats, Statistic::j2) && r.j2) {
        const J2Result& j = *r.j2;
        rows.emplace_back("Ĵ²", format_fixed4(j.j2_raw));
        rows.emplace_back("J²", format_fixed4(j.j2));
        std::string status = std::to_string(j.iterations) + " iterations";
        if (j.converged) {
            status += ", converged";
        } else if (j.aborted_nan) {
            status += ", stopped on non-finite update";
        } else {
            status += ", not converged";
        }
        if (j.identifiability_warning) {
            status += ", equal sizes: estimate may not be unique";
        }
        rows.emplace_back("J² status", status);
    }

    std::size_t width = 0;
    for (const auto& [label, value] : rows) {
        width = std::max(width, display_width(label));
    }
    std::ostringstream out;
    for (const auto& [label, value] : rows) {
        out << label << std::string(width - display_width(label) + 2, ' ') << value << '\n';
    }
    if (has(stats, Statistic::iq) && r.iq_ci) {
        out << "(CI is the " << format_full(100.0 * (1.0 - r.alpha)) << "% interval for ICC_MA";
        if (has(stats, Statistic::j2)) {
            out << "; J² ignores the reported within-study variances";
        }
        out << ")\n";
    }
    return out.str();
}

std::string render_structured(const HeterogeneityReport& r, std::span<const Statistic> stats) {
    using nlohmann::ordered_json;
    const auto field = [](const char* symbol, const ordered_json& value) {
        return ordered_json{{"symbol", symbol}, {"value", value}};
    };
    ordered_json doc;
    doc["k"] = r.k;
    doc["alpha"] = r.alpha;
    ordered_json& s = doc["statistics"];
    s = ordered_json::object();
    if (has(stats, Statistic::i2)) {
        s["Q"] = field("Q", r.q_stat);
        s["sum_w"] = field("Σw", r.sum_w);
        s["sum_wy"] = field("Σwy", r.sum_wy);
        s["I2"] = field("I²", r.i2_point);
    }
    if (has(stats, Statistic::iq)) {
        s["ybar"] = field("ȳ", r.grand_mean);
        s["MSB_MA"] = field("MSB_MA", r.msb);
        s["MSW_MA"] = field("MSW_MA", r.msw);
        s["nbar"] = field("n̄", r.nbar);
        s["F_MA"] = field("F̄_MA", r.f_ratio);
        s["IQ"] = field("IQ", r.iq_point);
        if (r.iq_ci) {
            s["CI"] = field("CI", ordered_json::array({r.iq_ci->lower, r.iq_ci->upper}));
        }
    }
    if (has(stats, Statistic::j2) && r.j2) {
        const J2Result& j = *r.j2;
        s["J2_hat"] = field("Ĵ²", std::isfinite(j.j2_raw) ? ordered_json(j.j2_raw)
                                                          : ordered_json(nullptr));
        s["J2"] = field("J²", j.j2);
        doc["j2_fit"] = ordered_json{{"mu_hat", j.mu_hat},
                                     {"tau2_hat", j.tau2_hat},
                                     {"sigma2_hat", j.sigma2_hat},
                                     {"iterations", j.iterations},
                                     {"converged", j.converged},
                                     {"aborted_nan", j.aborted_nan},
                                     {"identifiability_warning", j.identifiability_warning}};
    }
    return doc.dump(2) + "\n";
}

AnalysisOutput analyze(const AnalysisRequest& request) {
    if (request.statistics.empty()) {
        throw InputError("no statistics requested");
    }
    const MetaDataset data = parse_summary_csv(request.input_path);
    AssessOptions options;
    options.alpha = request.alpha;
    options.with_j2 = has(request.statistics, Statistic::j2);
    options.j2 = {request.j2_tol, request.j2_max_iter};
    if (!(options.j2.tol > 0.0) || options.j2.max_iter < 1) {
        throw InputError("J2 tolerance must be > 0 and max_iter >= 1");
    }
    AnalysisOutput out;
    out.report = assess(data, options);
    out.rendered = request.output_format == OutputFormat::text
                       ? render_text(out.report, request.statistics)
                       : render_structured(out.report, request.statistics);
    return out;
}

// ---------------------------------------------------------------------------
// Simulation config and output

namespace {

template <typename T>
std::vector<T> parse_list(const std::string& key, std::string_view value) {
    std::vector<T> out;
    std::string item;
    std::istringstream in{std::string(value)};
    while (std::getline(in, item, ',')) {
        const auto v = parse_number<T>(item);
        if (!v) {
            throw InputError("config key '" + key + "': bad list element '" + item + "'");
        }
        out.push_back(*v);
    }
    if (out.empty()) {
        throw InputError("config key '" + key + "': empty list");
    }
    return out;
}

template <typename T>
T parse_scalar(const std::string& key, std::string_view value) {
    const auto v = parse_number<T>(value);
    if (!v) {
        throw InputError("config key '" + key + "': bad value '" + std::string(value) + "'");
    }
    return *v;
}

}  // namespace

SimulationConfig parse_simulation_config(std::istream& in) {
    SimulationConfig cfg;
    std::map<std::string, std::string> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string_view t = trim(line);
        if (t.empty()) {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw InputError("config line " + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key{trim(t.substr(0, eq))};
        const std::string value{trim(t.substr(eq + 1))};
        if (!entries.emplace(key, value).second) {
            throw InputError("config line " + std::to_string(line_no) + ": repeated key '" +
                             key + "'");
        }
    }

    long n_start = 10;
    long n_stop = 100;
    long n_step = 10;
    for (const auto& [key, value] : entries) {
        if (key == "mu") {
            cfg.mu = parse_scalar<double>(key, value);
        } else if (key == "sigma2") {
            cfg.sigma2 = parse_scalar<double>(key, value);
        } else if (key == "tau2_list") {
            cfg.tau2_list = parse_list<double>(key, value);
        } else if (key == "k_list") {
            cfg.k_list = parse_list<std::size_t>(key, value);
        } else if (key == "pattern") {
            cfg.patterns.clear();
            std::string item;
            std::istringstream items{value};
            while (std::getline(items, item, ',')) {
                const std::string name = lower(trim(item));
                if (name == "balanced") {
                    cfg.patterns.push_back(SizePattern::balanced());
                } else if (name == "unbalanced") {
                    cfg.patterns.push_back(SizePattern::unbalanced());
                } else {
                    throw InputError("config key 'pattern': unknown pattern '" + item +
                                     "' (expected balanced or unbalanced)");
                }
            }
        } else if (key == "n_start") {
            n_start = parse_scalar<long>(key, value);
        } else if (key == "n_stop") {
            n_stop = parse_scalar<long>(key, value);
        } else if (key == "n_step") {
            n_step = parse_scalar<long>(key, value);
        } else if (key == "replications") {
            cfg.replications = parse_scalar<long>(key, value);
        } else if (key == "alpha") {
            cfg.alpha = parse_scalar<double>(key, value);
        } else if (key == "seed") {
            cfg.seed = parse_scalar<std::uint64_t>(key, value);
        } else if (key == "statistics") {
            cfg.statistics = parse_statistics(value);
        } else if (key == "j2_balanced") {
            const std::string v = lower(value);
            if (v != "true" && v != "false") {
                throw InputError("config key 'j2_balanced': expected true or false");
            }
            cfg.j2_balanced = v == "true";
        } else if (key == "j2_tol") {
            cfg.j2.tol = parse_scalar<double>(key, value);
        } else if (key == "j2_max_iter") {
            cfg.j2.max_iter = parse_scalar<long>(key, value);
        } else {
            throw InputError("unknown config key '" + key + "'");
        }
    }

    if (n_step < 1 || n_start > n_stop) {
        throw InputError("n grid: need n_start <= n_stop and n_step >= 1");
    }
    cfg.n_grid.clear();
    for (long n = n_start; n <= n_stop; n += n_step) {
        cfg.n_grid.push_back(n);
    }
    validate_config(cfg);
    return cfg;
}

SimulationConfig parse_simulation_config(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    return parse_simulation_config(in);
}

void write_simulation_csv(const SimulationResult& result, std::ostream& out) {
    out << "tau2,k,pattern,n,statistic,mean,mc_se,truth,coverage,nonconv_rate\n";
    for (const CellResult& c : result.cells) {
        const std::string prefix = format_full(c.cell.tau2) + ',' + std::to_string(c.cell.k) +
                                   ',' + c.pattern + ',' + std::to_string(c.cell.n) + ',';
        if (c.statistics.empty()) {
            out << prefix << ",,," << format_full(c.icc_ma_truth) << ",,\n";
            continue;
        }
        for (const StatisticSummary& s : c.statistics) {
            out << prefix << statistic_name(s.statistic) << ',' << format_full(s.mean) << ','
                << format_full(s.mc_se) << ',' << format_full(c.icc_ma_truth) << ',';
            if (s.statistic == Statistic::iq && c.coverage) {
                out << format_full(*c.coverage);
            }
            out << ',';
            if (s.statistic == Statistic::j2 && c.j2_nonconvergence_rate) {
                out << format_full(*c.j2_nonconvergence_rate);
            }
            out << '\n';
        }
    }
}

SimulationResult simulate(const std::filesystem::path& config_path,
                          const std::filesystem::path& out_path,
                          std::optional<std::uint64_t> seed_override,
                          std::optional<unsigned> threads) {
    SimulationConfig cfg = parse_simulation_config(config_path);
    if (seed_override) {
        cfg.seed = *seed_override;
    }
    if (threads) {
        cfg.threads = std::max(1u, *threads);
    }
    SimulationResult result = run_experiment(cfg);
    std::ofstream out = open_output(out_path);
    write_simulation_csv(result, out);
    if (!out) {
        throw InputError("failed writing '" + out_path.string() + "'");
    }
    return result;
}

// ---------------------------------------------------------------------------
// Population curves

std::vector<DensityPoint> population_curves(const MetaDataset& dataset, int points) {
    validate_meta(dataset);
    if (points < 2) {
        throw InputError("population curves need at least 2 points per study");
    }
    std::vector<DensityPoint> out;
    out.reserve(dataset.k() * static_cast<std::size_t>(points));
    for (std::size_t i = 0; i < dataset.k(); ++i) {
        const StudySummary& s = dataset.studies[i];
        const double variance = static_cast<double>(s.size) * s.var_effect;
        const double sd = std::sqrt(variance);
        const double half = static_cast<double>(points - 1) / 2.0;
        const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * variance);
        const std::string label = study_label(dataset, i);
        for (int p = 0; p < points; ++p) {
            // Symmetric grid so an odd point count hits the mean exactly.
            const double z = 4.0 * (static_cast<double>(p) - half) / half;
            const double x = s.effect + z * sd;
            out.push_back({label, x, norm * std::exp(-0.5 * z * z)});
        }
    }
    return out;
}

void write_population_curves(std::span<const DensityPoint> curves, std::ostream& out) {
    out << "study,x,density\n";
    for (const auto& p : curves) {
        out << csv_field(p.study) << ',' << format_full(p.x) << ',' << format_full(p.density)
            << '\n';
    }
}

void popcurves(const std::filesystem::path& input_path, const std::filesystem::path& out_path) {
    const MetaDataset data = parse_summary_csv(input_path);
    const auto curves = population_curves(data);
    std::ofstream out = open_output(out_path);
    write_population_curves(curves, out);
    if (!out) {
        throw InputError("failed writing '" + out_path.string() + "'");
    }
}

}  // namespace iqmeta::io
