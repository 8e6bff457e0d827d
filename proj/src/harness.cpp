#include "pshex/harness.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace pshex {

using nlohmann::json;

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid json: ") + e.what());
    }
    RunConfig c;
    try {
        c.version = j.value("version", 1);
        if (c.version != 1)
            throw ConfigError("config: unsupported schema version " +
                              std::to_string(c.version));
        if (j.contains("domain")) {
            const auto& d = j["domain"];
            c.domain_name = d.value("name", c.domain_name);
            c.domain_params = d.value("params", c.domain_params);
            c.dim = d.value("dim", c.dim);
        }
        if (j.contains("gaussian")) {
            const auto& g = j["gaussian"];
            c.weights_rule = g.value("weights_rule", c.weights_rule);
            c.weights = g.value("weights", c.weights);
            if (g.contains("truncation")) c.dim = g["truncation"].get<int>();
            c.seed = g.value("seed", c.seed);
            c.sample_budget = g.value("sample_budget", c.sample_budget);
        }
        if (j.contains("pipeline")) {
            const auto& p = j["pipeline"];
            c.pipeline = p.value("kind", c.pipeline);
            auto& o = c.pipeline_opt;
            o.series_K = p.value("series_K", o.series_K);
            o.mollify_budget = p.value("mollify_budget", o.mollify_budget);
            o.cert_samples = p.value("cert_samples", o.cert_samples);
            o.level_samples = p.value("level_samples", o.level_samples);
            o.safety = p.value("safety", o.safety);
            o.eps_halving_limit = p.value("eps_halving_limit", o.eps_halving_limit);
            o.tj_bisect_depth = p.value("tj_bisect_depth", o.tj_bisect_depth);
            o.envelope_starts = p.value("envelope_starts", o.envelope_starts);
            o.envelope_iters = p.value("envelope_iters", o.envelope_iters);
            o.c0 = p.value("c0", o.c0);
        }
        if (j.contains("certify")) {
            const auto& q = j["certify"];
            c.plan = q.value("plan", c.plan);
            c.tolerance = q.value("tolerance", c.tolerance);
            c.cert_points = q.value("points", c.cert_points);
            c.cert_directions = q.value("directions", c.cert_directions);
            c.cert_radii = q.value("radii", c.cert_radii);
            c.circle_nodes = q.value("circle_nodes", c.circle_nodes);
            c.dim_sweep = q.value("dim_sweep", c.dim_sweep);
            c.levels = q.value("levels", c.levels);
        }
        if (j.contains("output")) c.out_dir = j["output"].value("dir", c.out_dir);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

std::string RunConfig::to_json_text() const {
    json j;
    j["version"] = version;
    j["domain"] = {{"name", domain_name}, {"params", domain_params}, {"dim", dim}};
    j["gaussian"] = {{"weights_rule", weights_rule},
                     {"weights", weights},
                     {"truncation", dim},
                     {"seed", seed},
                     {"sample_budget", sample_budget}};
    j["pipeline"] = {{"kind", pipeline},
                     {"series_K", pipeline_opt.series_K},
                     {"mollify_budget", pipeline_opt.mollify_budget},
                     {"cert_samples", pipeline_opt.cert_samples},
                     {"level_samples", pipeline_opt.level_samples},
                     {"safety", pipeline_opt.safety},
                     {"eps_halving_limit", pipeline_opt.eps_halving_limit},
                     {"tj_bisect_depth", pipeline_opt.tj_bisect_depth},
                     {"envelope_starts", pipeline_opt.envelope_starts},
                     {"envelope_iters", pipeline_opt.envelope_iters},
                     {"c0", pipeline_opt.c0}};
    j["certify"] = {{"plan", plan},           {"tolerance", tolerance},
                    {"points", cert_points},  {"directions", cert_directions},
                    {"radii", cert_radii},    {"circle_nodes", circle_nodes},
                    {"dim_sweep", dim_sweep}, {"levels", levels}};
    j["output"] = {{"dir", out_dir}};
    return j.dump(2);
}

Domain build_domain(const RunConfig& cfg) {
    const auto& p = cfg.domain_params;
    if (cfg.domain_name == "ball") {
        return make_ball(p.empty() ? 1.0 : p[0], cfg.dim);
    }
    if (cfg.domain_name == "polydisc") {
        std::vector<double> radii = p.empty() ? std::vector<double>{1.0, 1.0} : p;
        return make_polydisc(radii, cfg.dim);
    }
    if (cfg.domain_name == "hartogs_wedge") {
        return make_hartogs_wedge(p.empty() ? 1.0 : p[0], cfg.dim);
    }
    if (cfg.domain_name == "full_space") {
        return make_full_space(cfg.dim);
    }
    if (cfg.domain_name == "hollowed_ball") {
        const double outer = p.size() > 0 ? p[0] : 1.0;
        const double inner = p.size() > 1 ? p[1] : 0.25;
        return make_hollowed_ball(outer, inner, cfg.dim);
    }
    throw ConfigError("config: unknown domain '" + cfg.domain_name + "'");
}

GaussianSpec build_spec(const RunConfig& cfg) {
    try {
        if (cfg.weights_rule == "dyadic")
            return GaussianSpec::dyadic(cfg.dim, cfg.seed, cfg.sample_budget);
        if (cfg.weights_rule == "explicit")
            return GaussianSpec(cfg.weights, cfg.seed, cfg.sample_budget);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    throw ConfigError("config: unknown weights_rule '" + cfg.weights_rule + "'");
}

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

void write_plot_tables(const std::filesystem::path& dir, const ScalarField& field,
                       const PipelineState& st, const Domain& V, int dim) {
    // field values along the coordinate rays
    {
        std::ostringstream oss;
        oss << "# ray\tstep\tradius\tvalue\n";
        for (int axis = 0; axis < dim; ++axis) {
            for (int k = 1; k <= 64; ++k) {
                const double r = k / 64.0;
                const CVec z = CVec::axis(axis, dim, cplx{r, 0.0});
                if (!V.contains(z)) break;
                oss << axis << "\t" << k << "\t" << format_double(r) << "\t"
                    << format_double(field(z)) << "\n";
            }
        }
        write_text(dir / "rays.tsv", oss.str());
    }
    if (!st.lambda_table.empty()) {
        std::ostringstream oss;
        oss << "# t\tlambda\n";
        for (const auto& [t, l] : st.lambda_table)
            oss << format_double(t) << "\t" << format_double(l) << "\n";
        write_text(dir / "lambda.tsv", oss.str());
    }
    if (!st.s_seq.empty()) {
        std::ostringstream oss;
        oss << "# k\ts_k\talpha_k+1\n";
        for (std::size_t k = 0; k < st.s_seq.size(); ++k)
            oss << (k + 1) << "\t" << format_double(st.s_seq[k]) << "\t"
                << format_double(k + 1 < st.alpha_seq.size() ? st.alpha_seq[k + 1] : 0.0)
                << "\n";
        write_text(dir / "sk_sweep.tsv", oss.str());
    }
}

} // namespace

RunResult run(const RunConfig& cfg) {
    RunResult res;
    const Domain V = build_domain(cfg);
    const GaussianSpec spec = build_spec(cfg);
    const CutoffKit kit = make_cutoff_kit(spec, std::min<long>(cfg.sample_budget * 5, 1000000));

    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path dir(cfg.out_dir);

    CertificationReport rep;
    rep.name = cfg.pipeline + "@" + cfg.domain_name;
    rep.header["domain"] = cfg.domain_name;
    rep.header["pipeline"] = cfg.pipeline;
    rep.header["seed"] = std::to_string(cfg.seed);
    rep.header["kit.c"] = format_double(kit.c);
    rep.header["kit.c_std_error"] = format_double(kit.c_std_error);
    rep.header["kit.K0"] = format_double(kit.K0);

    ScalarField field;
    PipelineState state;
    try {
        if (cfg.pipeline == "lipschitz") {
            const double c0 = cfg.pipeline_opt.c0 >= 0.0 ? cfg.pipeline_opt.c0
                                                         : choose_c0(V, spec);
            field = lipschitz_exhaustion(V, c0);
            state.stage = PipelineStage::lipschitz_eta;
            state.c0 = c0;
        } else if (cfg.pipeline == "smooth") {
            auto built = smooth_exhaustion(V, kit, spec, cfg.pipeline_opt);
            field = built.field;
            state = built.state;
        } else if (cfg.pipeline == "semi_anti") {
            auto built = semi_anti_psh_exhaustion(V, kit, spec, cfg.pipeline_opt);
            field = built.field;
            state = built.state;
        } else if (cfg.pipeline == "psh") {
            auto built = psh_exhaustion(V, kit, spec, cfg.pipeline_opt);
            field = built.field;
            state = built.state;
        } else {
            throw ConfigError("config: unknown pipeline '" + cfg.pipeline + "'");
        }
    } catch (const PipelineAbort& e) {
        res.exit_code = exit_codes::pipeline_abort;
        res.message = e.what();
        rep.add([&] {
            CertRecord r;
            r.check = "pipeline.abort";
            r.anchor = "invented";
            r.pass = false;
            r.worst_at = e.what();
            return r;
        }());
        write_text(dir / "summary.txt", rep.summary() + "\nABORT: " + res.message + "\n");
        res.report = rep;
        return res;
    }
    state.kit_c = kit.c;
    state.kit_K0 = kit.K0;
    rep.header["c0"] = format_double(state.c0);
    for (std::size_t j = 0; j < state.eps_seq.size(); ++j)
        rep.header["eps_" + std::to_string(j + 1)] = format_double(state.eps_seq[j]);
    for (std::size_t j = 0; j < state.t_seq.size(); ++j)
        rep.header["t_" + std::to_string(j + 1)] = format_double(state.t_seq[j]);
    for (std::size_t j = 0; j < state.alpha_seq.size(); ++j)
        rep.header["alpha_" + std::to_string(j + 1)] = format_double(state.alpha_seq[j]);
    rep.merge(state.construction_checks);

    // certification plan
    std::vector<CVec> points;
    for (long k = 0; k < spec.sample_budget() &&
                     static_cast<long>(points.size()) < cfg.cert_points; ++k) {
        const CVec z = spec.draw(streams::cert_points, static_cast<std::uint64_t>(k));
        if (V.contains(z)) points.push_back(z);
    }
    auto dirs = sweep_directions(spec, cfg.cert_directions);

    for (const auto& item : cfg.plan) {
        if (item == "psh") {
            CertifyOptions co;
            co.tol = cfg.tolerance;
            co.circle_nodes = cfg.circle_nodes;
            co.radii = cfg.cert_radii;
            co.dim_sweep_max = cfg.dim_sweep;
            rep.merge(certify_psh(field, V, points, dirs, co));
        } else if (item == "semi_anti") {
            auto r = certify_semi_anti_psh(field, V, points, cfg.tolerance);
            rep.merge(r.report);
        } else if (item == "exhaustion") {
            rep.merge(certify_exhaustion(field, V, cfg.levels, spec));
        } else if (item == "neg_log_dist_psh") {
            ScalarField nld = make_field(
                [Vc = V](const CVec& z) { return -std::log(Vc.distance(z)); },
                "neg_log_dist");
            if (V.neg_log_dist_hessian) nld.hessian = V.neg_log_dist_hessian;
            CertifyOptions co;
            co.tol = cfg.tolerance;
            co.circle_nodes = cfg.circle_nodes;
            co.radii = cfg.cert_radii;
            co.dim_sweep_max = cfg.dim_sweep;
            rep.merge(certify_psh(nld, V, points, dirs, co));
        } else {
            throw ConfigError("config: unknown certifier '" + item + "'");
        }
    }

    // artifacts
    {
        std::ostringstream oss;
        for (const auto& r : rep.records) oss << r.to_json() << "\n";
        write_text(dir / "records.jsonl", oss.str());
    }
    write_text(dir / "state.json", state.to_json());
    const auto now = std::chrono::system_clock::now().time_since_epoch().count();
    write_text(dir / "summary.txt",
               rep.summary() + "timestamp: " + std::to_string(now) + "\n");
    write_plot_tables(dir, field, state, V, cfg.dim);

    res.report = rep;
    res.state = state;
    if (!rep.all_pass()) {
        res.exit_code = exit_codes::certification_failure;
        for (const auto& r : rep.records)
            if (!r.pass) {
                res.message = "certification failure: " + r.check + " at " + r.worst_at;
                break;
            }
    }
    return res;
}

std::string list_catalog() {
    std::ostringstream oss;
    oss << "domains:\n"
        << "  ball [radius]\n"
        << "  polydisc [r1 r2 ...]\n"
        << "  hartogs_wedge [r]\n"
        << "  full_space\n"
        << "  hollowed_ball [outer inner]   (negative control: not pseudo-convex)\n"
        << "pipelines:\n"
        << "  lipschitz   boundary-log exhaustion, Lipschitz on sublevels\n"
        << "  smooth      mollified cutoff-level series\n"
        << "  semi_anti   inf-convolution level series (Lipschitz, Hessian bounded above)\n"
        << "  psh         plurisubharmonic smooth exhaustion (four-step construction)\n"
        << "certifiers: psh, semi_anti, exhaustion, neg_log_dist_psh\n";
    return oss.str();
}

std::string describe(const std::string& records_path) {
    std::ifstream f(records_path);
    if (!f) throw std::runtime_error("describe: cannot read " + records_path);
    std::map<std::string, std::pair<long, long>> by_anchor; // anchor -> (pass, fail)
    std::ostringstream fails;
    std::string line;
    long total = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        ++total;
        auto& agg = by_anchor[j.value("anchor", "invented")];
        if (j.value("pass", false))
            ++agg.first;
        else {
            ++agg.second;
            fails << "  [FAIL] " << j.value("check", "?") << " worst="
                  << format_double(j.value("worst", 0.0)) << " at "
                  << j.value("worst_at", "") << "\n";
        }
    }
    std::ostringstream oss;
    long failures = 0;
    oss << "records: " << total << "\n";
    for (const auto& [anchor, pf] : by_anchor) {
        oss << "  " << anchor << ": " << pf.first << " pass, " << pf.second
            << " fail\n";
        failures += pf.second;
    }
    oss << "failures: " << failures << "\n" << fails.str();
    return oss.str();
}

} // namespace pshex
