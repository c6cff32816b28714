// iqmeta: heterogeneity analysis, simulation and plot data for random-effects
// meta-analysis.
//
// Exit status: 0 success, 1 input or validation error, 2 numerical fault.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "iqmeta/io.hpp"
#include "iqmeta/model.hpp"

namespace {

constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heterogeneity measures for random-effects meta-analysis (IQ, I2, J2)"};
    app.require_subcommand(1);

    iqmeta::io::AnalysisRequest request;
    std::string stats = "iq,i2,j2";
    std::string format = "text";
    auto* analyze = app.add_subcommand("analyze", "Analyze a summary-data CSV");
    analyze->add_option("--input", request.input_path, "CSV with header study,y,n,var_y")
        ->required();
    analyze->add_option("--alpha", request.alpha, "Confidence interval level is 1 - alpha")
        ->capture_default_str();
    analyze->add_option("--stats", stats, "Comma-separated subset of iq,i2,j2")
        ->capture_default_str();
    analyze->add_option("--format", format, "text or structured (JSON)")
        ->check(CLI::IsMember({"text", "structured"}))
        ->capture_default_str();
    analyze->add_option("--j2-tol", request.j2_tol, "J2 fixed-point tolerance")
        ->capture_default_str();
    analyze->add_option("--j2-max-iter", request.j2_max_iter, "J2 iteration cap")
        ->capture_default_str();

    std::string config_path;
    std::string sim_out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment");
    simulate->add_option("--config", config_path, "key=value experiment file")->required();
    simulate->add_option("--out", sim_out, "Output CSV")->required();
    simulate->add_option("--seed", seed, "Override the master seed");
    simulate->add_option("--threads", threads, "Worker threads (results do not depend on it)");

    std::string curves_in;
    std::string curves_out;
    auto* popcurves =
        app.add_subcommand("popcurves", "Emit per-study population density curves as CSV");
    popcurves->add_option("--input", curves_in, "Summary CSV")->required();
    popcurves->add_option("--out", curves_out, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (*analyze) {
            request.statistics = iqmeta::io::parse_statistics(stats);
            request.output_format = format == "structured" ? iqmeta::io::OutputFormat::structured
                                                           : iqmeta::io::OutputFormat::text;
            std::cout << iqmeta::io::analyze(request).rendered;
        } else if (*simulate) {
            iqmeta::io::simulate(config_path, sim_out, seed, threads);
        } else if (*popcurves) {
            iqmeta::io::popcurves(curves_in, curves_out);
        }
    } catch (const iqmeta::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const iqmeta::NumericalError& e) {
        std::cerr << "numerical fault: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
