// sdioph <kind> [options]: runs one campaign and writes its report.
//
// Exit status: 0 when every check passes, 2 when a lemma check produced a
// violation certificate, 1 on a usage or configuration error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

#include "sdioph/sdioph.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Exact S-arithmetic Diophantine experiments"};
    app.require_subcommand(0, 0);

    std::string kind, config_path;
    bool infty = false, timing = false;
    std::vector<std::string> extra;
    // flag name -> config key, applied in this order after the config file
    const std::vector<std::pair<std::string, std::string>> flags{
        {"--primes", "primes"},         {"--places", "places"},       {"--d", "d"},
        {"--n-min", "n_min"},           {"--n-max", "n_max"},         {"--n0", "n_0"},
        {"--psi", "psi"},               {"--alpha", "alpha"},         {"--measure", "measure"},
        {"--seed", "seed"},             {"--samples", "samples"},     {"--precision", "precision"},
        {"--max-precision", "max_precision"}, {"--height", "height"}, {"--numerator-bound", "numerator_bound"},
        {"--dirichlet-exponent", "dirichlet_exponent"}, {"--selection", "selection"},
        {"--sample-stride", "sample_stride"}, {"--max-balls", "max_balls"},
        {"--format", "format"},         {"--out", "out"},
    };
    std::map<std::string, std::string> values;

    app.add_option("kind", kind, "simplex1d | simplex | dirichlet | bcsum | decay | survey");
    app.add_option("--config", config_path, "file of 'key = value' lines; flags override it");
    for (const auto& [flag, key] : flags) app.add_option(flag, values[key]);
    auto* infty_flag = app.add_flag("--infty", infty, "add the real place to S");
    auto* timing_flag = app.add_flag("--timing", timing, "report survey runtimes");
    app.add_option("--set", extra, "extra key=value overrides");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        sdioph::ExperimentConfig cfg;
        if (!config_path.empty()) cfg.load_file(config_path);
        for (const auto& [flag, key] : flags)
            if (app.count(flag)) cfg.set(key, values[key]);
        if (infty_flag->count()) cfg.set("infty", "true");
        if (timing_flag->count()) cfg.set("timing", "true");
        for (const auto& kv : extra) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw sdioph::error(sdioph::errc::usage, "--set expects key=value, got '" + kv + "'");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (!kind.empty()) cfg.kind = kind;
        if (cfg.kind.empty()) throw sdioph::error(sdioph::errc::usage, "no campaign kind given");

        auto report = sdioph::run_campaign(cfg.kind, cfg);
        for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
        std::string text = report.render(cfg.format);
        if (cfg.out.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(cfg.out, std::ios::binary);
            if (!out) throw sdioph::error(sdioph::errc::usage, "cannot write '" + cfg.out + "'");
            out << text;
        }
        if (!report.pass()) std::cerr << report.violations << " violation(s)\n";
        return report.exit_code();
    } catch (const sdioph::error& e) {
        std::cerr << "sdioph: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "sdioph: " << e.what() << "\n";
        return 1;
    }
}
