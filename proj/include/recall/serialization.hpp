#ifndef RECALL_SERIALIZATION_HPP
#define RECALL_SERIALIZATION_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "calibration.hpp"
#include "encoder.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "ids.hpp"
#include "miner.hpp"
#include "trainer.hpp"
#include "world.hpp"

// JSON / JSONL persistence for every artifact the pipeline exchanges.
// Doubles are written with round-trip precision, so save -> load is exact.

namespace recall
{

using nlohmann::json;

inline constexpr int kSnapshotVersion = 1;
inline constexpr std::string_view kSnapshotFormat = "recall-encoder";

namespace io
{

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw InputError("write failed for " + path.string());
    }
}

inline json parse(const std::string& text, const std::string& where)
{
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

inline json read_json(const std::filesystem::path& path) { return parse(read_text(path), path.string()); }

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::vector<json> read_jsonl(const std::filesystem::path& path)
{
    std::istringstream in(read_text(path));
    std::vector<json> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) {
            continue;
        }
        out.push_back(parse(line, path.string() + ":" + std::to_string(n)));
    }
    return out;
}

inline void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows)
{
    std::string text;
    for (const auto& r : rows) {
        text += r.dump();
        text += '\n';
    }
    write_text(path, text);
}

// Runs a decoder, turning json access errors into SchemaError.
template <class Fn>
auto decode(const std::string& what, Fn&& fn)
{
    try {
        return fn();
    } catch (const json::exception& e) {
        throw SchemaError(what + ": " + e.what());
    }
}

template <class T, class Fn>
std::vector<T> decode_rows(const std::filesystem::path& path, Fn&& fn)
{
    std::vector<T> out;
    for (const auto& row : read_jsonl(path)) {
        out.push_back(decode(path.string(), [&] { return fn(row); }));
    }
    return out;
}

} // namespace io

// ---- world

inline json to_json(const WorldSpec& s)
{
    return {{"num_attributes", s.num_attributes},
            {"values_per_attribute", s.values_per_attribute},
            {"num_items", s.num_items},
            {"num_queries", s.num_queries},
            {"edits_per_query", s.edits_per_query},
            {"confusables_per_query", s.confusables_per_query},
            {"feature_noise_sigma", s.feature_noise_sigma},
            {"test_fraction", s.test_fraction},
            {"seed", s.seed}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline WorldSpec world_spec_from_json(const json& j, WorldSpec s = {})
{
    return io::decode("world spec", [&] {
        if (!j.is_object()) {
            throw SchemaError("world spec must be an object");
        }
        for (const auto& [key, value] : j.items()) {
            if (key == "num_attributes") s.num_attributes = value.get<std::size_t>();
            else if (key == "values_per_attribute") s.values_per_attribute = value.get<std::size_t>();
            else if (key == "num_items") s.num_items = value.get<std::size_t>();
            else if (key == "num_queries") s.num_queries = value.get<std::size_t>();
            else if (key == "edits_per_query") s.edits_per_query = value.get<std::size_t>();
            else if (key == "confusables_per_query") s.confusables_per_query = value.get<std::size_t>();
            else if (key == "feature_noise_sigma") s.feature_noise_sigma = value.get<double>();
            else if (key == "test_fraction") s.test_fraction = value.get<double>();
            else if (key == "seed") s.seed = value.get<std::uint64_t>();
            else throw SchemaError("unknown world spec key '" + key + "'");
        }
        return s;
    });
}

inline json to_json(const Triplet& t)
{
    return {{"query_id", to_underlying(t.query_id)},
            {"reference_id", to_underlying(t.reference_id)},
            {"instruction", t.instruction},
            {"target_id", to_underlying(t.target_id)}};
}

inline Triplet triplet_from_json(const json& j)
{
    return {QueryId{j.at("query_id").get<std::uint32_t>()}, ItemId{j.at("reference_id").get<std::uint32_t>()},
            j.at("instruction").get<std::string>(), ItemId{j.at("target_id").get<std::uint32_t>()}};
}

inline void save_world(const World& w, const std::filesystem::path& dir)
{
    io::write_json(dir / "spec.json", to_json(w.spec));
    std::vector<json> items;
    for (const auto& it : w.items) {
        items.push_back({{"id", to_underlying(it.id)},
                         {"attributes", std::vector<unsigned>(it.attributes.begin(), it.attributes.end())},
                         {"image_feature", it.image_feature}});
    }
    io::write_jsonl(dir / "items.jsonl", items);
    std::vector<json> queries;
    std::vector<json> subsets;
    for (std::size_t q = 0; q < w.queries.size(); ++q) {
        json row = to_json(w.queries[q]);
        row["split"] = w.splits[q] == Split::train ? "train" : "test";
        queries.push_back(std::move(row));
        json ids = json::array();
        for (auto id : w.subsets[q]) {
            ids.push_back(to_underlying(id));
        }
        subsets.push_back({{"query_id", to_underlying(w.queries[q].query_id)}, {"candidates", std::move(ids)}});
    }
    io::write_jsonl(dir / "queries.jsonl", queries);
    io::write_jsonl(dir / "subsets.jsonl", subsets);
}

/// Reads a world directory and checks it against its own spec.
inline World load_world(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir)) {
        throw InputError("world directory not found: " + dir.string());
    }
    World w;
    w.spec = world_spec_from_json(io::read_json(dir / "spec.json"));
    validate(w.spec);
    const std::size_t A = w.spec.num_attributes;
    const std::size_t V = w.spec.values_per_attribute;
    w.items = io::decode_rows<Item>(dir / "items.jsonl", [&](const json& j) {
        Item it;
        it.id = ItemId{j.at("id").get<std::uint32_t>()};
        for (auto v : j.at("attributes").get<std::vector<unsigned>>()) {
            if (v >= V) {
                throw SchemaError("attribute value out of range in " + to_string(it.id));
            }
            it.attributes.push_back(static_cast<std::uint8_t>(v));
        }
        it.image_feature = j.at("image_feature").get<Vector>();
        if (it.attributes.size() != A || it.image_feature.size() != A * V) {
            throw SchemaError("item " + to_string(it.id) + " does not match the world spec dimensions");
        }
        return it;
    });
    for (std::size_t i = 0; i < w.items.size(); ++i) {
        if (to_underlying(w.items[i].id) != i) {
            throw SchemaError("items.jsonl must list ids 0..n-1 in order");
        }
    }
    const Grammar g = w.grammar();
    for (const auto& j : io::read_jsonl(dir / "queries.jsonl")) {
        io::decode("queries.jsonl", [&] {
            w.queries.push_back(triplet_from_json(j));
            const auto split = j.at("split").get<std::string>();
            if (split != "train" && split != "test") {
                throw SchemaError("unknown split '" + split + "'");
            }
            w.splits.push_back(split == "train" ? Split::train : Split::test);
            return 0;
        });
        const auto& t = w.queries.back();
        (void)w.item(t.reference_id);
        (void)w.item(t.target_id);
        try {
            (void)g.parse(t.instruction);
        } catch (const DataError& e) {
            throw SchemaError(std::string("queries.jsonl: ") + e.what());
        }
    }
    const auto subset_rows = io::read_jsonl(dir / "subsets.jsonl");
    if (subset_rows.size() != w.queries.size()) {
        throw SchemaError("subsets.jsonl and queries.jsonl differ in length");
    }
    for (std::size_t q = 0; q < subset_rows.size(); ++q) {
        io::decode("subsets.jsonl", [&] {
            if (subset_rows[q].at("query_id").get<std::uint32_t>() != to_underlying(w.queries[q].query_id)) {
                throw SchemaError("subsets.jsonl is not aligned with queries.jsonl");
            }
            std::vector<ItemId> ids;
            for (auto v : subset_rows[q].at("candidates").get<std::vector<std::uint32_t>>()) {
                ids.push_back(ItemId{v});
                (void)w.item(ids.back());
            }
            w.subsets.push_back(std::move(ids));
            return 0;
        });
    }
    return w;
}

// ---- mining

inline json to_json(const MiningRecord& r)
{
    json ids = json::array();
    for (auto id : r.informative) {
        ids.push_back(to_underlying(id));
    }
    return {{"query_id", to_underlying(r.query_id)}, {"gt_rank", r.ground_truth_rank}, {"informative", std::move(ids)}};
}

inline MiningRecord mining_record_from_json(const json& j)
{
    MiningRecord r;
    r.query_id = QueryId{j.at("query_id").get<std::uint32_t>()};
    r.ground_truth_rank = j.at("gt_rank").get<std::size_t>();
    if (r.ground_truth_rank < 1) {
        throw SchemaError("gt_rank must be >= 1");
    }
    for (auto v : j.at("informative").get<std::vector<std::uint32_t>>()) {
        r.informative.push_back(ItemId{v});
    }
    return r;
}

inline void save_mining(const MiningReport& report, const std::filesystem::path& path)
{
    std::vector<json> rows;
    for (const auto& r : report.records) {
        rows.push_back(to_json(r));
    }
    io::write_jsonl(path, rows);
}

inline MiningReport load_mining(const std::filesystem::path& path)
{
    MiningReport report;
    report.records = io::decode_rows<MiningRecord>(path, mining_record_from_json);
    detail::tally(report);
    return report;
}

// ---- correctives

inline json to_json(const CorrectiveTriplet& c)
{
    json trace = json::array();
    for (const auto& iv : c.verification_trace) {
        trace.push_back({{"text", iv.intent}, {"verdict", iv.verdict == Verdict::valid ? "valid" : "violated"}});
    }
    json answers = json::array();
    for (const auto& a : c.filter.answers) {
        answers.push_back({{"question", a.question}, {"answer", a.yes ? "yes" : "no"}, {"confidence", a.confidence}});
    }
    return {{"parent_query_id", to_underlying(c.parent_query_id)},
            {"reference_id", to_underlying(c.reference_id)},
            {"original_instruction", c.original_instruction},
            {"corrected_instruction", c.corrected_instruction},
            {"informative_id", to_underlying(c.informative_id)},
            {"verification_trace", std::move(trace)},
            {"filter",
             {{"checked", c.filter.checked},
              {"passed", c.filter.passed},
              {"answers", std::move(answers)},
              {"reason", c.filter.reason}}}};
}

inline CorrectiveTriplet corrective_from_json(const json& j)
{
    CorrectiveTriplet c;
    c.parent_query_id = QueryId{j.at("parent_query_id").get<std::uint32_t>()};
    c.reference_id = ItemId{j.at("reference_id").get<std::uint32_t>()};
    c.original_instruction = j.at("original_instruction").get<std::string>();
    c.corrected_instruction = j.at("corrected_instruction").get<std::string>();
    c.informative_id = ItemId{j.at("informative_id").get<std::uint32_t>()};
    for (const auto& iv : j.at("verification_trace")) {
        const auto v = iv.at("verdict").get<std::string>();
        if (v != "valid" && v != "violated") {
            throw SchemaError("unknown verdict '" + v + "'");
        }
        c.verification_trace.push_back({iv.at("text").get<std::string>(), v == "valid" ? Verdict::valid : Verdict::violated});
    }
    const auto& f = j.at("filter");
    c.filter.checked = f.at("checked").get<bool>();
    c.filter.passed = f.at("passed").get<bool>();
    c.filter.reason = f.at("reason").get<std::string>();
    for (const auto& a : f.at("answers")) {
        c.filter.answers.push_back(
            {a.at("question").get<std::string>(), a.at("answer").get<std::string>() == "yes", a.at("confidence").get<double>()});
    }
    return c;
}

inline void save_correctives(const std::vector<CorrectiveTriplet>& cs, const std::filesystem::path& path)
{
    std::vector<json> rows;
    for (const auto& c : cs) {
        rows.push_back(to_json(c));
    }
    io::write_jsonl(path, rows);
}

inline std::vector<CorrectiveTriplet> load_correctives(const std::filesystem::path& path)
{
    return io::decode_rows<CorrectiveTriplet>(path, corrective_from_json);
}

inline json to_json(const CalibrationStats& s)
{
    return {{"mined", s.mined},       {"generated", s.generated},
            {"kept", s.kept},         {"rejected", s.rejected},
            {"protocol_errors", s.protocol_errors}, {"transport_errors", s.transport_errors}};
}

inline CalibrationStats calibration_stats_from_json(const json& j)
{
    return io::decode("calibration summary", [&] {
        CalibrationStats s;
        s.mined = j.value("mined", std::size_t{0});
        s.generated = j.at("generated").get<std::size_t>();
        s.kept = j.at("kept").get<std::size_t>();
        s.rejected = j.value("rejected", std::size_t{0});
        s.protocol_errors = j.value("protocol_errors", std::size_t{0});
        s.transport_errors = j.value("transport_errors", std::size_t{0});
        return s;
    });
}

// ---- training

inline void save_training_log(const TrainingLog& log, const std::filesystem::path& path)
{
    std::vector<json> rows;
    for (const auto& s : log.steps) {
        rows.push_back({{"step", s.step},
                        {"loss_total", s.loss_total},
                        {"loss_infonce", s.loss_infonce},
                        {"loss_triplet", s.loss_triplet},
                        {"snapshot_id", log.snapshot_id}});
    }
    io::write_jsonl(path, rows);
}

inline TrainingLog load_training_log(const std::filesystem::path& path)
{
    TrainingLog log;
    for (const auto& j : io::read_jsonl(path)) {
        io::decode(path.string(), [&] {
            log.steps.push_back({j.at("step").get<std::size_t>(), j.at("loss_total").get<double>(),
                                 j.at("loss_infonce").get<double>(), j.at("loss_triplet").get<double>()});
            log.snapshot_id = j.at("snapshot_id").get<std::string>();
            return 0;
        });
    }
    return log;
}

namespace detail
{

inline json tower_to_json(const Tower& tower)
{
    json layers = json::array();
    for (const auto& l : tower) {
        json rows = json::array();
        for (std::size_t r = 0; r < l.out_dim; ++r) {
            rows.push_back(std::vector<double>(l.weights.begin() + static_cast<std::ptrdiff_t>(r * l.in_dim),
                                               l.weights.begin() + static_cast<std::ptrdiff_t>((r + 1) * l.in_dim)));
        }
        layers.push_back({{"out_dim", l.out_dim}, {"in_dim", l.in_dim}, {"weights", std::move(rows)}, {"bias", l.bias}});
    }
    return layers;
}

inline Tower tower_from_json(const json& layers)
{
    Tower tower;
    for (const auto& j : layers) {
        LayerParams l(j.at("out_dim").get<std::size_t>(), j.at("in_dim").get<std::size_t>());
        const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
        if (rows.size() != l.out_dim) {
            throw SchemaError("snapshot: weight rows != out_dim");
        }
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != l.in_dim) {
                throw SchemaError("snapshot: weight row length != in_dim");
            }
            std::copy(rows[r].begin(), rows[r].end(), l.weights.begin() + static_cast<std::ptrdiff_t>(r * l.in_dim));
        }
        l.bias = j.at("bias").get<std::vector<double>>();
        if (l.bias.size() != l.out_dim) {
            throw SchemaError("snapshot: bias length != out_dim");
        }
        tower.push_back(std::move(l));
    }
    return tower;
}

} // namespace detail

inline json to_json(const EncoderParameters& p)
{
    return {{"format", kSnapshotFormat},
            {"version", kSnapshotVersion},
            {"snapshot_id", snapshot_id(p)},
            {"query_tower", detail::tower_to_json(p.query_tower)},
            {"target_tower", detail::tower_to_json(p.target_tower)}};
}

/// Rejects foreign formats, unknown versions and malformed shapes.
inline EncoderParameters encoder_from_json(const json& j)
{
    return io::decode("snapshot", [&] {
        if (j.value("format", "") != kSnapshotFormat) {
            throw SchemaError("snapshot: not a " + std::string(kSnapshotFormat) + " document");
        }
        if (j.at("version").get<int>() != kSnapshotVersion) {
            throw SchemaError("snapshot: unsupported version " + j.at("version").dump());
        }
        EncoderParameters p{detail::tower_from_json(j.at("query_tower")), detail::tower_from_json(j.at("target_tower"))};
        try {
            validate(p);
        } catch (const ShapeError& e) {
            throw SchemaError(std::string("snapshot: ") + e.what());
        }
        return p;
    });
}

inline void save_encoder(const EncoderParameters& p, const std::filesystem::path& path) { io::write_json(path, to_json(p)); }

inline EncoderParameters load_encoder(const std::filesystem::path& path) { return encoder_from_json(io::read_json(path)); }

// ---- metrics

inline void save_metrics(const MetricsReport& r, const std::filesystem::path& path) { io::write_json(path, to_json(r)); }

inline MetricsReport load_metrics(const std::filesystem::path& path)
{
    const auto j = io::read_json(path);
    return io::decode(path.string(), [&] { return metrics_from_json(j); });
}

} // namespace recall

#endif
