#ifndef RECALL_EVALUATION_HPP
#define RECALL_EVALUATION_HPP

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "encoder.hpp"
#include "retrieval.hpp"
#include "world.hpp"

namespace recall
{

/// Recall values are fractions in [0, 1]; JSON and text renderings use percent.
struct MetricsReport {
    std::map<std::size_t, double> recall_at;
    std::map<std::size_t, double> recall_subset_at;
    double avg = 0.0;
    std::size_t num_queries = 0;

    bool operator==(const MetricsReport&) const = default;
};

struct EvalConfig {
    std::vector<std::size_t> ks = {1, 5, 10, 50};
    std::vector<std::size_t> subset_ks = {1, 2, 3};
    bool subset = true;
    bool exclude_reference = true;
};

/// Embeds every world item with the target tower, in item order.
inline Gallery embed_gallery(const EncoderParameters& params, const World& world)
{
    std::vector<ItemId> ids;
    std::vector<Vector> embs;
    ids.reserve(world.items.size());
    embs.reserve(world.items.size());
    for (const auto& it : world.items) {
        ids.push_back(it.id);
        embs.push_back(encode_target(params, it.image_feature));
    }
    return Gallery(std::move(ids), std::move(embs));
}

inline Vector embed_query(const EncoderParameters& params, const World& world, const Triplet& t)
{
    return encode_query(params, world.image_feature(t.reference_id), world.text_feature(t.instruction));
}

/// R@K over the full gallery and R_subset@K over each query's six-candidate
/// subset, for the queries of one split.
inline MetricsReport evaluate(const EncoderParameters& params, const World& world, Split split,
                              const EvalConfig& cfg = {})
{
    const Gallery gallery = embed_gallery(params, world);
    std::size_t max_k = 1;
    for (auto k : cfg.ks) {
        max_k = std::max(max_k, k);
    }
    std::vector<RankedList> full;
    std::vector<RankedList> sub;
    GroundTruth gt;
    for (std::size_t q = 0; q < world.queries.size(); ++q) {
        if (world.splits[q] != split) {
            continue;
        }
        const Triplet& t = world.queries[q];
        gt[t.query_id] = t.target_id;
        const Vector z = embed_query(params, world, t);
        std::vector<ItemId> exclude;
        if (cfg.exclude_reference) {
            exclude.push_back(t.reference_id);
        }
        full.push_back(rank_all(gallery, z, max_k, exclude, t.query_id));
        if (cfg.subset) {
            sub.push_back(rank_within(gallery, z, world.subsets[q], t.query_id));
        }
    }
    if (full.empty()) {
        throw DataError("evaluate: split has no queries");
    }
    MetricsReport report;
    report.num_queries = full.size();
    for (auto k : cfg.ks) {
        report.recall_at[k] = recall_at_k(full, gt, k);
    }
    if (cfg.subset) {
        for (auto k : cfg.subset_ks) {
            report.recall_subset_at[k] = recall_subset_at_k(sub, gt, k);
        }
    }
    if (report.recall_at.count(5) && report.recall_subset_at.count(1)) {
        report.avg = avg_metric(report.recall_at.at(5), report.recall_subset_at.at(1));
    }
    return report;
}

/// Flat keys "recall_at.K", "recall_subset_at.K", "avg"; values in percent.
inline nlohmann::json to_json(const MetricsReport& r)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : r.recall_at) {
        j["recall_at." + std::to_string(k)] = 100.0 * v;
    }
    for (const auto& [k, v] : r.recall_subset_at) {
        j["recall_subset_at." + std::to_string(k)] = 100.0 * v;
    }
    j["avg"] = 100.0 * r.avg;
    j["num_queries"] = r.num_queries;
    return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j)
{
    MetricsReport r;
    for (const auto& [key, value] : j.items()) {
        auto take = [&](const std::string& prefix, std::map<std::size_t, double>& into) {
            if (key.rfind(prefix, 0) == 0) {
                into[std::stoul(key.substr(prefix.size()))] = value.get<double>() / 100.0;
                return true;
            }
            return false;
        };
        if (take("recall_subset_at.", r.recall_subset_at) || take("recall_at.", r.recall_at)) {
            continue;
        }
        if (key == "avg") {
            r.avg = value.get<double>() / 100.0;
        } else if (key == "num_queries") {
            r.num_queries = value.get<std::size_t>();
        }
    }
    return r;
}

} // namespace recall

#endif
