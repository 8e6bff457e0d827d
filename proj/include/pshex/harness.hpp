#ifndef PSHEX_HARNESS_HPP
#define PSHEX_HARNESS_HPP

#include <optional>
#include <string>
#include <vector>

#include "pshex/pipeline.hpp"

namespace pshex {

namespace exit_codes {
inline constexpr int ok = 0;
inline constexpr int config_error = 2;
inline constexpr int pipeline_abort = 3;
inline constexpr int certification_failure = 4;
} // namespace exit_codes

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One fully deterministic run: domain + measure + pipeline + certification
/// plan. Two runs of the same config produce byte-identical records (the
/// timestamp lives only in the summary).
struct RunConfig {
    int version = 1;

    std::string domain_name = "ball";
    std::vector<double> domain_params = {1.0};
    int dim = 2;

    std::string weights_rule = "dyadic"; // or "explicit"
    std::vector<double> weights;         // used when explicit
    std::uint64_t seed = 20240501;
    long sample_budget = 200000;

    std::string pipeline = "psh"; // lipschitz | smooth | semi_anti | psh
    PipelineOptions pipeline_opt;

    std::vector<std::string> plan = {"psh", "exhaustion"}; // certifiers to run
    double tolerance = 1e-3;
    long cert_points = 200;
    int cert_directions = 8;
    std::vector<double> cert_radii = {0.1, 0.01};
    int circle_nodes = 32;
    int dim_sweep = 0;
    std::vector<double> levels = {2.0, 4.0, 8.0};

    std::string out_dir = "out";

    static RunConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
};

Domain build_domain(const RunConfig& cfg);
GaussianSpec build_spec(const RunConfig& cfg);

struct RunResult {
    int exit_code = exit_codes::ok;
    std::string message;
    CertificationReport report;
    PipelineState state;
};

/// Execute the configured pipeline + certification plan and write the
/// artifacts (records.jsonl, summary.txt, state.json, plot tables) under
/// cfg.out_dir. Artifacts are written even when certification fails.
RunResult run(const RunConfig& cfg);

std::string list_catalog();
std::string describe(const std::string& records_path);

} // namespace pshex

#endif
