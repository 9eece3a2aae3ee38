// recall-forge: command-line driver for the diagnose / generate / refine
// pipeline. Every subcommand prints a JSON summary on stdout; failures print
// {"error": {...}} on stderr and exit with a code specific to the failure.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "recall/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kMissingInput = 3,
    kSchema = 4,
    kOracleUnreachable = 5,
    kOracleProtocol = 6,
    kDivergence = 7,
    kData = 8,
};

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> oracle_url;
    std::optional<std::string> profile;
    std::string summary; // report only
};

int fail(int code, std::string_view kind, const std::string& message)
{
    std::cerr << json{{"error", {{"code", code}, {"kind", kind}, {"message", message}}}}.dump() << "\n";
    return code;
}

recall::ConfigOverrides overrides(const Options& o)
{
    recall::ConfigOverrides ov;
    ov.profile = o.profile;
    ov.seed = o.seed;
    ov.oracle_url = o.oracle_url;
    if (!ov.oracle_url) {
        if (const char* env = std::getenv("RECALL_FORGE_ORACLE_URL"); env != nullptr && *env != '\0') {
            ov.oracle_url = env;
        }
    }
    return ov;
}

// --config wins; stage commands fall back to the run directory's config.json.
recall::PipelineConfig load_config(const Options& o, const fs::path& run_dir)
{
    json file = json::object();
    if (!o.config.empty()) {
        file = recall::io::read_json(o.config);
    } else if (fs::exists(run_dir / "config.json")) {
        file = recall::io::read_json(run_dir / "config.json");
    }
    return recall::resolve_config(file, overrides(o));
}

fs::path require_out(const Options& o)
{
    if (o.out.empty()) {
        throw recall::ArgumentError("--out is required");
    }
    return o.out;
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

int run(const std::string& command, const Options& o)
{
    if (command == "report") {
        fs::path path = o.summary.empty() ? require_out(o) / "summary.json" : fs::path(o.summary);
        if (fs::is_directory(path)) {
            path /= "summary.json";
        }
        std::cout << recall::render_report(recall::io::read_json(path));
        return kOk;
    }
    if (command == "pipeline") {
        const auto root = require_out(o);
        const auto cfg = load_config(o, {});
        const recall::RunPaths run{recall::make_run_dir(root, cfg)};
        auto summary = recall::run_pipeline(cfg, run);
        summary["run_dir"] = run.dir.string();
        emit(summary);
        return kOk;
    }

    const recall::RunPaths run{require_out(o)};
    const auto cfg = load_config(o, run.dir);
    if (command == "gen-world") {
        fs::create_directories(run.dir);
        emit(recall::step_world(cfg, run));
    } else if (command == "train-base") {
        emit(recall::step_train_base(cfg, run));
    } else if (command == "mine") {
        emit(recall::step_mine(cfg, run));
    } else if (command == "calibrate") {
        emit(recall::step_calibrate(cfg, run));
    } else if (command == "refine") {
        emit(recall::step_refine(cfg, run));
    } else if (command == "evaluate") {
        emit(recall::step_evaluate(cfg, run));
    } else {
        throw recall::ArgumentError("unknown command '" + command + "'");
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"recall-forge: self-guided failure mining, corrective synthesis and refinement for composed retrieval"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&o](CLI::App* sub, bool needs_out) {
        sub->add_option("--config", o.config, "pipeline config (JSON)");
        auto* out = sub->add_option("--out", o.out,
                                    sub->get_name() == "pipeline" ? "root under which the run directory is created"
                                                                  : "run directory");
        if (needs_out) {
            out->required();
        }
        sub->add_option("--seed", o.seed, "top-level seed");
        sub->add_option("--oracle-url", o.oracle_url, "remote oracle base url (env RECALL_FORGE_ORACLE_URL)");
        sub->add_option("--profile", o.profile, "hyperparameter preset")->check(CLI::IsMember({"fashioniq", "cirr"}));
    };

    const std::pair<const char*, const char*> stages[] = {
        {"gen-world", "generate the synthetic world into the run directory"},
        {"train-base", "stage 1: InfoNCE adaptation"},
        {"mine", "stage 2: mine informative instances"},
        {"calibrate", "stage 3: generate and filter corrective triplets"},
        {"refine", "stage 4: grouped contrastive refinement"},
        {"evaluate", "recall metrics for the base and refined snapshots"},
        {"pipeline", "run every stage in a fresh run directory"},
    };
    for (const auto& [name, help] : stages) {
        add_common(app.add_subcommand(name, help), true);
    }
    auto* report = app.add_subcommand("report", "render a run summary");
    add_common(report, false);
    report->add_option("--summary", o.summary, "summary.json or run directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return fail(kUsage, "usage", e.what());
    }

    try {
        return run(app.get_subcommands().front()->get_name(), o);
    } catch (const recall::InputError& e) {
        return fail(kMissingInput, "missing_input", e.what());
    } catch (const recall::SchemaError& e) {
        return fail(kSchema, "schema", e.what());
    } catch (const recall::TransportError& e) {
        return fail(kOracleUnreachable, "oracle_unreachable", e.what());
    } catch (const recall::ProtocolError& e) {
        return fail(kOracleProtocol, "oracle_protocol", e.what());
    } catch (const recall::DivergenceError& e) {
        return fail(kDivergence, "divergence", e.what());
    } catch (const recall::ArgumentError& e) {
        return fail(kUsage, "usage", e.what());
    } catch (const recall::Error& e) {
        return fail(kData, "data", e.what());
    } catch (const std::exception& e) {
        return fail(kInternal, "internal", e.what());
    }
}
