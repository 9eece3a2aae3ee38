#ifndef RECALL_RETRIEVAL_HPP
#define RECALL_RETRIEVAL_HPP

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "errors.hpp"
#include "ids.hpp"
#include "vector_math.hpp"

namespace recall
{

/// Immutable set of embedded items searched by exact cosine similarity.
class Gallery
{
public:
    Gallery() = default;

    Gallery(std::vector<ItemId> ids, std::vector<Vector> embeddings)
        : ids_(std::move(ids)), embeddings_(std::move(embeddings))
    {
        if (ids_.size() != embeddings_.size()) {
            throw ShapeError("gallery: ids and embeddings differ in length");
        }
        norms_.reserve(embeddings_.size());
        index_.reserve(ids_.size());
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            if (!index_.emplace(ids_[i], i).second) {
                throw DataError("gallery: duplicate " + to_string(ids_[i]));
            }
            if (embeddings_[i].size() != embeddings_.front().size()) {
                throw ShapeError("gallery: embeddings of different dimension");
            }
            const double n = norm(embeddings_[i]);
            if (n < kNormFloor) {
                throw DomainError("gallery: zero embedding for " + to_string(ids_[i]));
            }
            norms_.push_back(n);
        }
    }

    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }
    std::size_t dim() const { return embeddings_.empty() ? 0 : embeddings_.front().size(); }

    const std::vector<ItemId>& ids() const { return ids_; }
    const Vector& embedding(std::size_t index) const { return embeddings_[index]; }

    bool contains(ItemId id) const { return index_.count(id) != 0; }

    std::size_t index_of(ItemId id) const
    {
        auto it = index_.find(id);
        if (it == index_.end()) {
            throw DataError("gallery: " + to_string(id) + " not present");
        }
        return it->second;
    }

    /// Cosine similarity of the query with every item, in insertion order.
    /// Bit-identical to cosine_similarity(query, embedding(i)).
    std::vector<double> scores(std::span<const double> query) const
    {
        if (query.size() != dim()) {
            throw ShapeError("gallery: query dimension " + std::to_string(query.size()) + " != "
                             + std::to_string(dim()));
        }
        const double qn = norm(query);
        if (qn < kNormFloor) {
            throw DomainError("gallery: zero-norm query");
        }
        std::vector<double> out(size());
        for (std::size_t i = 0; i < size(); ++i) {
            out[i] = dot(query, embeddings_[i]) / (qn * norms_[i]);
        }
        return out;
    }

private:
    std::vector<ItemId> ids_;
    std::vector<Vector> embeddings_;
    std::vector<double> norms_;
    std::unordered_map<ItemId, std::size_t> index_;
};

struct ScoredItem {
    ItemId id{};
    double score = 0.0;

    bool operator==(const ScoredItem&) const = default;
};

/// Candidates in descending score; ties by ascending gallery insertion index.
struct RankedList {
    QueryId query_id{};
    std::vector<ScoredItem> items;

    bool operator==(const RankedList&) const = default;
};

namespace detail
{

// true when gallery index a ranks before b
inline bool ranks_before(const std::vector<double>& scores, std::size_t a, std::size_t b)
{
    if (scores[a] != scores[b]) {
        return scores[a] > scores[b];
    }
    return a < b;
}

} // namespace detail

/// Exact top-k over the gallery, skipping `exclude` (e.g. the query's own
/// reference image).
inline RankedList rank_all(const Gallery& gallery, std::span<const double> query_embedding, std::size_t k,
                           std::span<const ItemId> exclude = {}, QueryId query_id = {})
{
    if (gallery.empty()) {
        throw ArgumentError("rank_all: empty gallery");
    }
    if (k < 1) {
        throw ArgumentError("rank_all: k must be >= 1");
    }
    const auto scores = gallery.scores(query_embedding);
    std::vector<std::size_t> order;
    order.reserve(gallery.size());
    for (std::size_t i = 0; i < gallery.size(); ++i) {
        if (std::find(exclude.begin(), exclude.end(), gallery.ids()[i]) == exclude.end()) {
            order.push_back(i);
        }
    }
    const std::size_t take = std::min(k, order.size());
    auto cmp = [&scores](std::size_t a, std::size_t b) { return detail::ranks_before(scores, a, b); };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), cmp);

    RankedList out;
    out.query_id = query_id;
    out.items.reserve(take);
    for (std::size_t r = 0; r < take; ++r) {
        out.items.push_back({gallery.ids()[order[r]], scores[order[r]]});
    }
    return out;
}

/// Ranks only the given candidates (in the order given, which breaks ties).
inline RankedList rank_within(const Gallery& gallery, std::span<const double> query_embedding,
                              std::span<const ItemId> candidates, QueryId query_id = {})
{
    if (candidates.empty()) {
        throw ArgumentError("rank_within: empty candidate set");
    }
    std::vector<ItemId> ids(candidates.begin(), candidates.end());
    std::vector<Vector> embs;
    embs.reserve(ids.size());
    for (auto id : ids) {
        embs.push_back(gallery.embedding(gallery.index_of(id)));
    }
    Gallery sub(std::move(ids), std::move(embs));
    return rank_all(sub, query_embedding, sub.size(), {}, query_id);
}

/// 1-based position of `target` in the full exclusion-aware ranking.
inline std::size_t rank_of(const Gallery& gallery, const std::vector<double>& scores, ItemId target,
                           std::span<const ItemId> exclude = {})
{
    const std::size_t t = gallery.index_of(target);
    std::size_t rank = 1;
    for (std::size_t i = 0; i < gallery.size(); ++i) {
        if (i == t || std::find(exclude.begin(), exclude.end(), gallery.ids()[i]) != exclude.end()) {
            continue;
        }
        if (detail::ranks_before(scores, i, t)) {
            ++rank;
        }
    }
    return rank;
}

using GroundTruth = std::map<QueryId, ItemId>;

/// Fraction of ranked lists whose ground-truth target is within the first k.
inline double recall_at_k(const std::vector<RankedList>& ranked, const GroundTruth& ground_truth, std::size_t k)
{
    if (ranked.empty()) {
        throw ArgumentError("recall_at_k: no queries");
    }
    if (k < 1) {
        throw ArgumentError("recall_at_k: k must be >= 1");
    }
    std::size_t hits = 0;
    for (const auto& list : ranked) {
        auto gt = ground_truth.find(list.query_id);
        if (gt == ground_truth.end()) {
            throw DataError("recall_at_k: no ground truth for " + to_string(list.query_id));
        }
        const std::size_t upto = std::min(k, list.items.size());
        for (std::size_t r = 0; r < upto; ++r) {
            if (list.items[r].id == gt->second) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(ranked.size());
}

/// Recall over per-query candidate subsets. Each list must rank the whole
/// subset, and the subset must contain the target.
inline double recall_subset_at_k(const std::vector<RankedList>& subset_ranked, const GroundTruth& ground_truth,
                                 std::size_t k)
{
    for (const auto& list : subset_ranked) {
        auto gt = ground_truth.find(list.query_id);
        if (gt == ground_truth.end()) {
            throw DataError("recall_subset_at_k: no ground truth for " + to_string(list.query_id));
        }
        const bool present = std::any_of(list.items.begin(), list.items.end(),
                                         [&](const ScoredItem& s) { return s.id == gt->second; });
        if (!present) {
            throw DataError("recall_subset_at_k: target absent from subset of " + to_string(list.query_id));
        }
    }
    return recall_at_k(subset_ranked, ground_truth, k);
}

/// (R@5 + R_subset@1) / 2, in whatever unit the inputs share.
inline double avg_metric(double r_at_5, double r_subset_at_1) { return (r_at_5 + r_subset_at_1) / 2.0; }

} // namespace recall

#endif
