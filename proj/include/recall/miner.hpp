#ifndef RECALL_MINER_HPP
#define RECALL_MINER_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "encoder.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "retrieval.hpp"
#include "world.hpp"

namespace recall
{

struct MiningConfig {
    std::size_t top_k = 5;
    bool exclude_reference_from_gallery = true;
};

struct MiningRecord {
    QueryId query_id{};
    std::size_t ground_truth_rank = 1;
    std::vector<ItemId> informative; // by rank

    bool operator==(const MiningRecord&) const = default;
};

struct MiningReport {
    std::vector<MiningRecord> records;
    std::size_t failure_count = 0;
    std::size_t mined_instance_count = 0;

    bool operator==(const MiningReport&) const = default;
};

namespace detail
{

inline void tally(MiningReport& report)
{
    report.failure_count = 0;
    report.mined_instance_count = 0;
    for (const auto& r : report.records) {
        report.failure_count += r.ground_truth_rank > 1 ? 1 : 0;
        report.mined_instance_count += r.informative.size();
    }
}

struct QueryRanking {
    Vector embedding;
    std::size_t gt_rank = 1;
    RankedList above; // items strictly above the ground truth, capped
};

inline QueryRanking rank_query(const EncoderParameters& params, const World& world, const Triplet& t,
                               const Gallery& gallery, bool exclude_reference, std::size_t cap)
{
    if (!gallery.contains(t.target_id)) {
        throw DataError("mine: target " + to_string(t.target_id) + " of " + to_string(t.query_id)
                        + " is not in the gallery");
    }
    QueryRanking out;
    out.embedding = embed_query(params, world, t);
    std::vector<ItemId> exclude;
    if (exclude_reference) {
        exclude.push_back(t.reference_id);
    }
    out.gt_rank = rank_of(gallery, gallery.scores(out.embedding), t.target_id, exclude);
    const std::size_t take = std::min(cap, out.gt_rank - 1);
    if (take > 0) {
        out.above = rank_all(gallery, out.embedding, take, exclude, t.query_id);
    }
    return out;
}

} // namespace detail

/// Self-guided informative-instance mining.
///
/// Queries whose target ranks first are successes and yield nothing. For
/// every failure, up to top_k items ranked strictly above the target are
/// returned in rank order. `gallery` must be embedded with `params`.
inline MiningReport mine(const EncoderParameters& params, const World& world, const std::vector<Triplet>& triplets,
                         const Gallery& gallery, const MiningConfig& cfg)
{
    if (cfg.top_k < 1) {
        throw ArgumentError("mine: top_k must be >= 1");
    }
    MiningReport report;
    report.records.reserve(triplets.size());
    for (const auto& t : triplets) {
        auto ranked = detail::rank_query(params, world, t, gallery, cfg.exclude_reference_from_gallery, cfg.top_k);
        MiningRecord rec;
        rec.query_id = t.query_id;
        rec.ground_truth_rank = ranked.gt_rank;
        for (const auto& s : ranked.above.items) {
            rec.informative.push_back(s.id);
        }
        report.records.push_back(std::move(rec));
    }
    detail::tally(report);
    return report;
}

/// Random-mining baseline: for every query, draw sample_n items uniformly
/// without replacement from the top pool_k candidates (target excluded).
/// Failure detection is identical to mine().
inline MiningReport random_mine(const EncoderParameters& params, const World& world,
                                const std::vector<Triplet>& triplets, const Gallery& gallery, std::size_t pool_k,
                                std::size_t sample_n, std::uint64_t seed, bool exclude_reference = true)
{
    if (pool_k < sample_n) {
        throw ArgumentError("random_mine: pool_k must be >= sample_n");
    }
    std::mt19937_64 rng(seed);
    MiningReport report;
    report.records.reserve(triplets.size());
    for (const auto& t : triplets) {
        const auto ranked = detail::rank_query(params, world, t, gallery, exclude_reference, 0);
        std::vector<ItemId> exclude{t.target_id};
        if (exclude_reference) {
            exclude.push_back(t.reference_id);
        }
        const RankedList pool_list = rank_all(gallery, ranked.embedding, pool_k, exclude, t.query_id);
        if (pool_list.items.size() < sample_n) {
            throw DataError("random_mine: candidate pool of " + to_string(t.query_id) + " smaller than sample_n");
        }
        std::vector<ItemId> pool;
        for (const auto& s : pool_list.items) {
            pool.push_back(s.id);
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(sample_n);

        MiningRecord rec;
        rec.query_id = t.query_id;
        rec.ground_truth_rank = ranked.gt_rank;
        rec.informative = std::move(pool);
        report.records.push_back(std::move(rec));
    }
    detail::tally(report);
    return report;
}

/// Keeps a seeded uniform subset of `budget` mined instances, preserving the
/// per-query order of the survivors.
inline MiningReport trim_to_budget(MiningReport report, std::size_t budget, std::uint64_t seed)
{
    if (report.mined_instance_count <= budget) {
        return report;
    }
    std::vector<std::pair<std::size_t, std::size_t>> slots; // (record, position)
    for (std::size_t r = 0; r < report.records.size(); ++r) {
        for (std::size_t p = 0; p < report.records[r].informative.size(); ++p) {
            slots.emplace_back(r, p);
        }
    }
    std::mt19937_64 rng(seed);
    std::shuffle(slots.begin(), slots.end(), rng);
    slots.resize(budget);
    std::sort(slots.begin(), slots.end());
    std::vector<std::vector<ItemId>> kept(report.records.size());
    for (auto [r, p] : slots) {
        kept[r].push_back(report.records[r].informative[p]);
    }
    for (std::size_t r = 0; r < report.records.size(); ++r) {
        report.records[r].informative = std::move(kept[r]);
    }
    detail::tally(report);
    return report;
}

} // namespace recall

#endif
