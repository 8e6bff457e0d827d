#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pshex/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"exhaustion-function constructions and certification"};
    app.require_subcommand(1);

    std::string config_path, out_dir, describe_path;
    std::uint64_t seed_override = 0;
    bool has_seed = false;
    int dim_sweep = 0;
    double tol_scale = 1.0;

    auto* run_cmd = app.add_subcommand("run", "execute a configured run");
    run_cmd->add_option("--config", config_path, "path to the run-config json")
        ->required();
    run_cmd->add_option("--seed-override", seed_override, "replace the config seed")
        ->each([&](const std::string&) { has_seed = true; });
    run_cmd->add_option("--out-dir", out_dir, "override the output directory");
    run_cmd->add_option("--dim-sweep", dim_sweep, "cap the truncation sweep");
    run_cmd->add_option("--tolerance-scale", tol_scale,
                        "multiply every certification tolerance");

    auto* list_cmd = app.add_subcommand("list-catalog", "list domains and pipelines");
    auto* desc_cmd = app.add_subcommand("describe", "summarize a records file");
    desc_cmd->add_option("records", describe_path, "records.jsonl path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (list_cmd->parsed()) {
            std::cout << pshex::list_catalog();
            return pshex::exit_codes::ok;
        }
        if (desc_cmd->parsed()) {
            std::cout << pshex::describe(describe_path);
            return pshex::exit_codes::ok;
        }
        if (run_cmd->parsed()) {
            std::ifstream f(config_path);
            if (!f) {
                std::cerr << "cannot read config: " << config_path << "\n";
                return pshex::exit_codes::config_error;
            }
            std::stringstream ss;
            ss << f.rdbuf();
            pshex::RunConfig cfg;
            try {
                cfg = pshex::RunConfig::from_json_text(ss.str());
            } catch (const pshex::ConfigError& e) {
                std::cerr << e.what() << "\n";
                return pshex::exit_codes::config_error;
            }
            if (has_seed) cfg.seed = seed_override;
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            if (dim_sweep > 0) cfg.dim_sweep = dim_sweep;
            cfg.tolerance *= tol_scale;

            const pshex::RunResult res = pshex::run(cfg);
            std::cout << res.report.summary();
            if (!res.message.empty()) std::cerr << res.message << "\n";
            return res.exit_code;
        }
    } catch (const pshex::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return pshex::exit_codes::config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return pshex::exit_codes::pipeline_abort;
    }
    return pshex::exit_codes::ok;
}
