#ifndef RECALL_PIPELINE_HPP
#define RECALL_PIPELINE_HPP

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "calibration.hpp"
#include "encoder.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "hashing.hpp"
#include "miner.hpp"
#include "oracle.hpp"
#include "remote_oracle.hpp"
#include "serialization.hpp"
#include "trainer.hpp"
#include "world.hpp"

namespace recall
{

enum class MiningStrategy { self_guided, random, hard_negative };

inline std::string to_string(MiningStrategy s)
{
    switch (s) {
    case MiningStrategy::self_guided: return "self_guided";
    case MiningStrategy::random: return "random";
    case MiningStrategy::hard_negative: return "hard_negative";
    }
    return "?";
}

inline MiningStrategy parse_strategy(const std::string& s)
{
    if (s == "self_guided") return MiningStrategy::self_guided;
    if (s == "random") return MiningStrategy::random;
    if (s == "hard_negative") return MiningStrategy::hard_negative;
    throw ArgumentError("unknown mining strategy '" + s + "' (self_guided | random | hard_negative)");
}

/// Fully resolved run configuration. Every stage seed is materialized so the
/// serialized form alone reproduces a run.
struct PipelineConfig {
    std::uint64_t seed = 7;
    std::string profile = "fashioniq";

    WorldSpec world;
    std::string world_path; // load a saved world instead of generating one

    std::vector<std::size_t> hidden = {64};
    std::size_t embedding_dim = 32;
    std::uint64_t init_seed = 0;

    TrainConfig stage1;

    MiningStrategy strategy = MiningStrategy::self_guided;
    MiningConfig mining;
    std::size_t random_pool_k = 50;
    std::uint64_t mining_seed = 0;

    std::string oracle = "mock"; // or an http:// url
    double mock_noise = 0.0;
    std::uint64_t oracle_seed = 0;
    CalibrationOptions calibration;

    TrainConfig stage4;
    std::size_t corrective_budget = 0; // 0 = use every kept corrective
    std::uint64_t budget_seed = 0;

    EvalConfig eval;
    Split eval_split = Split::test;
};

inline std::uint64_t derive_seed(std::uint64_t top, std::string_view label) { return splitmix64(top ^ fnv1a64(label)); }

/// Loss and schedule presets. Learning rates are scaled for plain gradient
/// descent on the desk-size encoder; the two profiles keep a 2:1 ratio.
inline void apply_profile(PipelineConfig& cfg, const std::string& profile)
{
    TrainConfig base;
    base.batch_size = 64;
    base.micro_group_fraction = 0.5;
    if (profile == "fashioniq") {
        base.learning_rate = 0.01;
        base.loss = {0.03, 0.05, 0.30};
        cfg.stage1 = base;
        cfg.stage4 = base;
        cfg.stage1.steps = 200;
        cfg.stage4.steps = 250;
    } else if (profile == "cirr") {
        base.learning_rate = 0.005;
        base.loss = {0.02, 0.05, 0.25};
        cfg.stage1 = base;
        cfg.stage4 = base;
        cfg.stage1.steps = 300;
        cfg.stage4.steps = 350;
    } else {
        throw ArgumentError("unknown profile '" + profile + "' (fashioniq | cirr)");
    }
    cfg.profile = profile;
}

struct ConfigOverrides {
    std::optional<std::string> profile;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> oracle_url;
};

namespace detail
{

inline void check_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> allowed)
{
    if (!j.is_object()) {
        throw SchemaError("config section '" + std::string(section) + "' must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw SchemaError("unknown key '" + key + "' in config section '" + std::string(section) + "'");
        }
    }
}

inline void read_train(const json& j, std::string_view section, TrainConfig& t, bool& seed_given)
{
    check_keys(j, section,
               {"learning_rate", "batch_size", "steps", "seed", "temperature", "margin", "lambda",
                "micro_group_fraction", "correctives_as_queries"});
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.steps = j.value("steps", t.steps);
    t.loss.temperature = j.value("temperature", t.loss.temperature);
    t.loss.margin = j.value("margin", t.loss.margin);
    t.loss.lambda = j.value("lambda", t.loss.lambda);
    t.micro_group_fraction = j.value("micro_group_fraction", t.micro_group_fraction);
    t.correctives_as_queries = j.value("correctives_as_queries", t.correctives_as_queries);
    if (j.contains("seed")) {
        t.seed = j["seed"].get<std::uint64_t>();
        seed_given = true;
    }
}

inline json train_to_json(const TrainConfig& t)
{
    return {{"learning_rate", t.learning_rate},
            {"batch_size", t.batch_size},
            {"steps", t.steps},
            {"seed", t.seed},
            {"temperature", t.loss.temperature},
            {"margin", t.loss.margin},
            {"lambda", t.loss.lambda},
            {"micro_group_fraction", t.micro_group_fraction},
            {"correctives_as_queries", t.correctives_as_queries}};
}

} // namespace detail

/// Layers defaults <- profile <- file sections <- overrides, then derives any
/// stage seed not given explicitly from the top-level seed.
inline PipelineConfig resolve_config(const json& file, const ConfigOverrides& overrides = {})
{
    return io::decode("config", [&] {
        const json j = file.is_null() ? json::object() : file;
        detail::check_keys(j, "top level",
                           {"seed", "profile", "world", "encoder", "stage1", "mining", "calibration", "stage4", "eval"});
        PipelineConfig cfg;
        apply_profile(cfg, overrides.profile.value_or(j.value("profile", std::string("fashioniq"))));
        cfg.seed = overrides.seed.value_or(j.value("seed", cfg.seed));

        bool world_seed = false, init_seed = false, s1_seed = false, s4_seed = false, mining_seed = false,
             oracle_seed = false, budget_seed = false;

        if (j.contains("world")) {
            json w = j["world"];
            if (w.contains("path")) {
                cfg.world_path = w["path"].get<std::string>();
                w.erase("path");
            }
            world_seed = w.contains("seed");
            cfg.world = world_spec_from_json(w);
        }
        if (j.contains("encoder")) {
            const auto& e = j["encoder"];
            detail::check_keys(e, "encoder", {"hidden", "embedding_dim", "seed"});
            cfg.hidden = e.value("hidden", cfg.hidden);
            cfg.embedding_dim = e.value("embedding_dim", cfg.embedding_dim);
            if (e.contains("seed")) {
                cfg.init_seed = e["seed"].get<std::uint64_t>();
                init_seed = true;
            }
        }
        if (j.contains("stage1")) {
            detail::read_train(j["stage1"], "stage1", cfg.stage1, s1_seed);
        }
        if (j.contains("stage4")) {
            const json& s4 = j["stage4"];
            json train = s4;
            if (train.is_object() && train.contains("corrective_budget")) {
                cfg.corrective_budget = train["corrective_budget"].get<std::size_t>();
                train.erase("corrective_budget");
            }
            if (train.is_object() && train.contains("budget_seed")) {
                cfg.budget_seed = train["budget_seed"].get<std::uint64_t>();
                budget_seed = true;
                train.erase("budget_seed");
            }
            detail::read_train(train, "stage4", cfg.stage4, s4_seed);
        }
        if (j.contains("mining")) {
            const auto& m = j["mining"];
            detail::check_keys(m, "mining", {"strategy", "top_k", "exclude_reference", "random_pool_k", "seed"});
            cfg.strategy = parse_strategy(m.value("strategy", to_string(cfg.strategy)));
            cfg.mining.top_k = m.value("top_k", cfg.mining.top_k);
            cfg.mining.exclude_reference_from_gallery = m.value("exclude_reference", cfg.mining.exclude_reference_from_gallery);
            cfg.random_pool_k = m.value("random_pool_k", cfg.random_pool_k);
            if (m.contains("seed")) {
                cfg.mining_seed = m["seed"].get<std::uint64_t>();
                mining_seed = true;
            }
        }
        if (j.contains("calibration")) {
            const auto& c = j["calibration"];
            detail::check_keys(c, "calibration",
                               {"oracle", "vqa_threshold", "concurrency", "max_retries", "mock_noise", "seed"});
            cfg.oracle = c.value("oracle", cfg.oracle);
            cfg.calibration.vqa_threshold = c.value("vqa_threshold", cfg.calibration.vqa_threshold);
            cfg.calibration.concurrency = c.value("concurrency", cfg.calibration.concurrency);
            cfg.calibration.max_retries = c.value("max_retries", cfg.calibration.max_retries);
            cfg.mock_noise = c.value("mock_noise", cfg.mock_noise);
            if (c.contains("seed")) {
                cfg.oracle_seed = c["seed"].get<std::uint64_t>();
                oracle_seed = true;
            }
        }
        if (j.contains("eval")) {
            const auto& e = j["eval"];
            detail::check_keys(e, "eval", {"ks", "subset_ks", "subset", "exclude_reference", "split"});
            cfg.eval.ks = e.value("ks", cfg.eval.ks);
            cfg.eval.subset_ks = e.value("subset_ks", cfg.eval.subset_ks);
            cfg.eval.subset = e.value("subset", cfg.eval.subset);
            cfg.eval.exclude_reference = e.value("exclude_reference", cfg.eval.exclude_reference);
            const auto split = e.value("split", std::string("test"));
            if (split != "train" && split != "test") {
                throw SchemaError("eval.split must be 'train' or 'test'");
            }
            cfg.eval_split = split == "train" ? Split::train : Split::test;
        }
        if (overrides.oracle_url) {
            cfg.oracle = *overrides.oracle_url;
        }

        if (!world_seed) cfg.world.seed = cfg.seed;
        if (!init_seed) cfg.init_seed = derive_seed(cfg.seed, "init");
        if (!s1_seed) cfg.stage1.seed = derive_seed(cfg.seed, "stage1");
        if (!s4_seed) cfg.stage4.seed = derive_seed(cfg.seed, "stage4");
        if (!mining_seed) cfg.mining_seed = derive_seed(cfg.seed, "mining");
        if (!oracle_seed) cfg.oracle_seed = derive_seed(cfg.seed, "oracle");
        if (!budget_seed) cfg.budget_seed = derive_seed(cfg.seed, "budget");

        cfg.stage1.validate();
        cfg.stage4.validate();
        validate(cfg.world);
        if (cfg.oracle != "mock") {
            (void)parse_oracle_url(cfg.oracle);
        }
        if (!(cfg.mock_noise >= 0.0 && cfg.mock_noise <= 1.0)) {
            throw ArgumentError("calibration.mock_noise must be in [0, 1]");
        }
        if (cfg.mining.top_k < 1 || cfg.random_pool_k < cfg.mining.top_k) {
            throw ArgumentError("mining: need 1 <= top_k <= random_pool_k");
        }
        return cfg;
    });
}

inline json to_json(const PipelineConfig& c)
{
    json world = to_json(c.world);
    if (!c.world_path.empty()) {
        world["path"] = c.world_path;
    }
    json stage4 = detail::train_to_json(c.stage4);
    stage4["corrective_budget"] = c.corrective_budget;
    stage4["budget_seed"] = c.budget_seed;
    return {{"seed", c.seed},
            {"profile", c.profile},
            {"world", std::move(world)},
            {"encoder", {{"hidden", c.hidden}, {"embedding_dim", c.embedding_dim}, {"seed", c.init_seed}}},
            {"stage1", detail::train_to_json(c.stage1)},
            {"mining",
             {{"strategy", to_string(c.strategy)},
              {"top_k", c.mining.top_k},
              {"exclude_reference", c.mining.exclude_reference_from_gallery},
              {"random_pool_k", c.random_pool_k},
              {"seed", c.mining_seed}}},
            {"calibration",
             {{"oracle", c.oracle},
              {"vqa_threshold", c.calibration.vqa_threshold},
              {"concurrency", c.calibration.concurrency},
              {"max_retries", c.calibration.max_retries},
              {"mock_noise", c.mock_noise},
              {"seed", c.oracle_seed}}},
            {"stage4", std::move(stage4)},
            {"eval",
             {{"ks", c.eval.ks},
              {"subset_ks", c.eval.subset_ks},
              {"subset", c.eval.subset},
              {"exclude_reference", c.eval.exclude_reference},
              {"split", c.eval_split == Split::train ? "train" : "test"}}}};
}

/// Hex digest of the resolved configuration.
inline std::string config_hash(const PipelineConfig& c) { return hex64(fnv1a64(to_json(c).dump())).substr(0, 12); }

/// "<root>/<config hash>-<UTC timestamp>"
inline std::filesystem::path make_run_dir(const std::filesystem::path& root, const PipelineConfig& c)
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    auto dir = root / (config_hash(c) + "-" + stamp);
    for (int n = 1; std::filesystem::exists(dir); ++n) {
        dir = root / (config_hash(c) + "-" + stamp + "." + std::to_string(n));
    }
    std::filesystem::create_directories(dir);
    return dir;
}

// ---- stages (pure functions of config and inputs)

inline World stage_world(const PipelineConfig& c)
{
    return c.world_path.empty() ? generate_world(c.world) : load_world(c.world_path);
}

inline EncoderParameters stage_init(const PipelineConfig& c, const World& w)
{
    EncoderShape shape;
    shape.image_dim = w.image_dim();
    shape.text_dim = w.text_dim();
    shape.hidden = c.hidden;
    shape.embedding_dim = c.embedding_dim;
    return init_encoder(shape, c.init_seed);
}

inline TrainResult stage_train_base(const PipelineConfig& c, const World& w)
{
    return train_base(stage_init(c, w), w, w.queries_in(Split::train), c.stage1);
}

/// Hard-negative mining reuses the self-guided ranking; what differs is how
/// the instances are consumed in refinement.
inline MiningReport stage_mine(const PipelineConfig& c, const World& w, const EncoderParameters& base)
{
    const auto train = w.queries_in(Split::train);
    const Gallery gallery = embed_gallery(base, w);
    if (c.strategy == MiningStrategy::random) {
        return random_mine(base, w, train, gallery, c.random_pool_k, c.mining.top_k, c.mining_seed,
                           c.mining.exclude_reference_from_gallery);
    }
    return mine(base, w, train, gallery, c.mining);
}

inline std::unique_ptr<OracleBackend> make_oracle(const PipelineConfig& c, const World& w)
{
    if (c.oracle == "mock") {
        return std::make_unique<MockOracle>(w, MockOracleOptions{c.mock_noise, c.oracle_seed});
    }
    auto remote = std::make_unique<RemoteOracle>(c.oracle);
    if (!remote->healthy()) {
        throw TransportError("oracle unreachable: GET " + c.oracle + "/healthz failed");
    }
    return remote;
}

/// Wraps mined instances as correctives without text refinement: the
/// instruction is left as is and the entry only ever serves as a negative.
inline std::vector<CorrectiveTriplet> hard_negative_correctives(const World& w, const MiningReport& mining)
{
    std::map<QueryId, const Triplet*> by_id;
    for (const auto& t : w.queries) {
        by_id[t.query_id] = &t;
    }
    std::vector<CorrectiveTriplet> out;
    for (const auto& r : mining.records) {
        const auto it = by_id.find(r.query_id);
        if (it == by_id.end()) {
            throw DataError("mining record for unknown " + to_string(r.query_id));
        }
        for (auto id : r.informative) {
            CorrectiveTriplet c;
            c.parent_query_id = r.query_id;
            c.reference_id = it->second->reference_id;
            c.original_instruction = it->second->instruction;
            c.corrected_instruction = it->second->instruction;
            c.informative_id = id;
            c.filter = {false, true, {}, ""};
            out.push_back(std::move(c));
        }
    }
    return out;
}

/// `oracle` may be null for the hard-negative strategy, which never calls it.
inline CalibrationResult stage_calibrate(const PipelineConfig& c, const World& w, const MiningReport& mining,
                                         const OracleBackend* oracle)
{
    if (c.strategy == MiningStrategy::hard_negative) {
        CalibrationResult r;
        r.kept = hard_negative_correctives(w, mining);
        r.stats.mined = r.stats.generated = r.stats.kept = r.kept.size();
        return r;
    }
    if (oracle == nullptr) {
        throw ArgumentError("calibrate: no oracle backend");
    }
    auto result = calibrate(*oracle, w, w.queries_in(Split::train), mining, c.calibration);
    if (result.stats.mined > 0 && result.stats.transport_errors == result.stats.mined) {
        throw TransportError("oracle unreachable: every request failed in transport");
    }
    if (result.stats.mined > 0 && result.stats.protocol_errors == result.stats.mined) {
        throw ProtocolError("oracle answered every request with a malformed response");
    }
    return result;
}

/// Seeded uniform subset of `budget` correctives, in their original order.
inline std::vector<CorrectiveTriplet> trim_correctives(std::vector<CorrectiveTriplet> cs, std::size_t budget,
                                                       std::uint64_t seed)
{
    if (budget == 0 || cs.size() <= budget) {
        return cs;
    }
    std::vector<std::size_t> idx(cs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(budget);
    std::sort(idx.begin(), idx.end());
    std::vector<CorrectiveTriplet> out;
    out.reserve(budget);
    for (auto i : idx) {
        out.push_back(std::move(cs[i]));
    }
    return out;
}

inline TrainResult stage_refine(const PipelineConfig& c, const World& w, const EncoderParameters& base,
                                const std::vector<CorrectiveTriplet>& kept)
{
    TrainConfig cfg = c.stage4;
    if (c.strategy == MiningStrategy::hard_negative) {
        cfg.correctives_as_queries = false;
    }
    return refine(base, w, w.queries_in(Split::train), trim_correctives(kept, c.corrective_budget, c.budget_seed), cfg);
}

inline MetricsReport stage_evaluate(const PipelineConfig& c, const World& w, const EncoderParameters& params)
{
    return evaluate(params, w, c.eval_split, c.eval);
}

// ---- run directory layout

struct RunPaths {
    std::filesystem::path dir;

    std::filesystem::path config() const { return dir / "config.json"; }
    std::filesystem::path world() const { return dir / "world"; }
    std::filesystem::path base_snapshot() const { return dir / "base.snapshot.json"; }
    std::filesystem::path base_log() const { return dir / "base.log.jsonl"; }
    std::filesystem::path mining() const { return dir / "mining.jsonl"; }
    std::filesystem::path kept() const { return dir / "correctives.kept.jsonl"; }
    std::filesystem::path rejected() const { return dir / "correctives.rejected.jsonl"; }
    std::filesystem::path calibration() const { return dir / "calibration.json"; }
    std::filesystem::path refined_snapshot() const { return dir / "refined.snapshot.json"; }
    std::filesystem::path refined_log() const { return dir / "refined.log.jsonl"; }
    std::filesystem::path base_metrics() const { return dir / "metrics.base.json"; }
    std::filesystem::path refined_metrics() const { return dir / "metrics.refined.json"; }
    std::filesystem::path summary() const { return dir / "summary.json"; }
};

inline void require_inputs(std::initializer_list<std::filesystem::path> paths)
{
    for (const auto& p : paths) {
        if (!std::filesystem::exists(p)) {
            throw InputError("missing input " + p.string());
        }
    }
}

// Each step reads its inputs from the run directory and writes its outputs
// there, returning a machine-readable summary.

inline json step_world(const PipelineConfig& c, const RunPaths& run)
{
    io::write_json(run.config(), to_json(c));
    const World w = stage_world(c);
    save_world(w, run.world());
    return {{"stage", "gen-world"},
            {"items", w.items.size()},
            {"queries", w.queries.size()},
            {"train", w.queries_in(Split::train).size()},
            {"test", w.queries_in(Split::test).size()}};
}

inline json step_train_base(const PipelineConfig& c, const RunPaths& run)
{
    require_inputs({run.world()});
    const World w = load_world(run.world());
    const auto r = stage_train_base(c, w);
    save_encoder(r.params, run.base_snapshot());
    save_training_log(r.log, run.base_log());
    return {{"stage", "train-base"},
            {"steps", r.log.steps.size()},
            {"final_loss", r.log.steps.empty() ? 0.0 : r.log.steps.back().loss_total},
            {"snapshot_id", r.log.snapshot_id}};
}

inline json step_mine(const PipelineConfig& c, const RunPaths& run)
{
    require_inputs({run.world(), run.base_snapshot()});
    const World w = load_world(run.world());
    const auto report = stage_mine(c, w, load_encoder(run.base_snapshot()));
    save_mining(report, run.mining());
    return {{"stage", "mine"},
            {"strategy", to_string(c.strategy)},
            {"queries", report.records.size()},
            {"failures", report.failure_count},
            {"mined", report.mined_instance_count}};
}

inline json step_calibrate(const PipelineConfig& c, const RunPaths& run, const OracleBackend* oracle = nullptr)
{
    require_inputs({run.world(), run.mining()});
    const World w = load_world(run.world());
    std::unique_ptr<OracleBackend> owned;
    if (oracle == nullptr && c.strategy != MiningStrategy::hard_negative) {
        owned = make_oracle(c, w);
        oracle = owned.get();
    }
    const auto result = stage_calibrate(c, w, load_mining(run.mining()), oracle);
    save_correctives(result.kept, run.kept());
    save_correctives(result.rejected, run.rejected());
    json summary = to_json(result.stats);
    summary["filter_line"] = render_filter_line(result.stats.generated, result.stats.kept);
    io::write_json(run.calibration(), summary);
    summary["stage"] = "calibrate";
    return summary;
}

inline json step_refine(const PipelineConfig& c, const RunPaths& run)
{
    require_inputs({run.world(), run.base_snapshot(), run.kept()});
    const World w = load_world(run.world());
    const auto r = stage_refine(c, w, load_encoder(run.base_snapshot()), load_correctives(run.kept()));
    save_encoder(r.params, run.refined_snapshot());
    save_training_log(r.log, run.refined_log());
    return {{"stage", "refine"},
            {"steps", r.log.steps.size()},
            {"final_loss", r.log.steps.empty() ? 0.0 : r.log.steps.back().loss_total},
            {"snapshot_id", r.log.snapshot_id}};
}

/// Evaluates both snapshots present in the run and writes summary.json.
inline json step_evaluate(const PipelineConfig& c, const RunPaths& run)
{
    require_inputs({run.world(), run.base_snapshot()});
    const World w = load_world(run.world());
    json summary = {{"stage", "evaluate"}, {"split", c.eval_split == Split::train ? "train" : "test"}};
    const auto base = stage_evaluate(c, w, load_encoder(run.base_snapshot()));
    save_metrics(base, run.base_metrics());
    summary["base"] = to_json(base);
    if (std::filesystem::exists(run.refined_snapshot())) {
        const auto refined = stage_evaluate(c, w, load_encoder(run.refined_snapshot()));
        save_metrics(refined, run.refined_metrics());
        summary["refined"] = to_json(refined);
    }
    if (std::filesystem::exists(run.calibration())) {
        summary["calibration"] = io::read_json(run.calibration());
    }
    io::write_json(run.summary(), summary);
    return summary;
}

/// All stages in order inside one run directory.
inline json run_pipeline(const PipelineConfig& c, const RunPaths& run, const OracleBackend* oracle = nullptr)
{
    json stages = json::array();
    stages.push_back(step_world(c, run));
    stages.push_back(step_train_base(c, run));
    stages.push_back(step_mine(c, run));
    stages.push_back(step_calibrate(c, run, oracle));
    stages.push_back(step_refine(c, run));
    auto summary = step_evaluate(c, run);
    summary["stages"] = std::move(stages);
    return summary;
}

/// Text rendering of a run summary: metrics table plus the filter line.
inline std::string render_report(const json& summary)
{
    std::string out;
    auto line = [&out](const std::string& s) { out += s + "\n"; };
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%6.2f", v);
        return std::string(buf);
    };
    for (const char* which : {"base", "refined"}) {
        if (!summary.contains(which)) {
            continue;
        }
        const auto m = metrics_from_json(summary[which]);
        std::string row = std::string(which) + (std::string(which) == "base" ? "   " : "");
        for (const auto& [k, v] : m.recall_at) {
            row += "  R@" + std::to_string(k) + " " + fmt(100 * v);
        }
        for (const auto& [k, v] : m.recall_subset_at) {
            row += "  Rs@" + std::to_string(k) + " " + fmt(100 * v);
        }
        row += "  Avg " + fmt(100 * m.avg);
        line(row);
    }
    if (summary.contains("calibration")) {
        const auto s = calibration_stats_from_json(summary["calibration"]);
        line("samples (generated → kept): " + render_filter_line(s.generated, s.kept));
    }
    return out;
}

} // namespace recall

#endif
