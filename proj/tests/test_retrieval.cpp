#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "recall/retrieval.hpp"
#include "support.hpp"

using namespace recall;

namespace
{

Gallery random_gallery(std::mt19937_64& rng, std::size_t n, std::size_t dim)
{
    std::vector<ItemId> ids;
    std::vector<Vector> embs;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(ItemId{static_cast<std::uint32_t>(1000 + 3 * i)});
        embs.push_back(fixtures::random_vector(rng, dim));
    }
    return Gallery(ids, embs);
}

// full stable sort on (score desc, index asc), scores from cosine_similarity
std::vector<ItemId> brute_force(const Gallery& g, const Vector& q)
{
    std::vector<std::pair<double, std::size_t>> rows;
    for (std::size_t i = 0; i < g.size(); ++i) {
        rows.emplace_back(cosine_similarity(q, g.embedding(i)), i);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<ItemId> out;
    for (const auto& r : rows) {
        out.push_back(g.ids()[r.second]);
    }
    return out;
}

RankedList list_of(QueryId q, std::initializer_list<std::uint32_t> ids)
{
    RankedList l;
    l.query_id = q;
    double s = 1.0;
    for (auto id : ids) {
        l.items.push_back({ItemId{id}, s});
        s -= 0.1;
    }
    return l;
}

} // namespace

TEST(Gallery, Construction)
{
    EXPECT_THROW(Gallery({ItemId{1}, ItemId{1}}, {Vector{1, 0}, Vector{0, 1}}), DataError);
    EXPECT_THROW(Gallery({ItemId{1}}, {Vector{0, 0}}), DomainError);
    EXPECT_THROW(Gallery({ItemId{1}, ItemId{2}}, {Vector{1, 0}}), ShapeError);
    EXPECT_THROW(Gallery({ItemId{1}, ItemId{2}}, {Vector{1, 0}, Vector{1, 0, 0}}), ShapeError);
    Gallery g({ItemId{4}, ItemId{9}}, {Vector{1, 0}, Vector{0, 2}});
    EXPECT_EQ(g.index_of(ItemId{9}), 1u);
    EXPECT_THROW(g.index_of(ItemId{5}), DataError);
    EXPECT_THROW(g.scores(Vector{1, 0, 0}), ShapeError);
    EXPECT_THROW(g.scores(Vector{0, 0}), DomainError);
}

TEST(RankAll, Examples)
{
    Gallery one({ItemId{7}}, {Vector{0.3, -1}});
    const auto r = rank_all(one, Vector{1, 1}, 5);
    ASSERT_EQ(r.items.size(), 1u);
    EXPECT_EQ(r.items[0].id, ItemId{7});

    std::mt19937_64 rng(1);
    auto g = random_gallery(rng, 20, 6);
    const Vector q = g.embedding(13);
    const auto top = rank_all(g, q, 3);
    EXPECT_EQ(top.items[0].id, g.ids()[13]);
    EXPECT_NEAR(top.items[0].score, 1.0, 1e-12);

    EXPECT_THROW(rank_all(Gallery{}, q, 1), ArgumentError);
    EXPECT_THROW(rank_all(g, q, 0), ArgumentError);
}

TEST(RankAll, EqualsFullSortOracle)
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + rng() % 500;
        auto g = random_gallery(rng, n, 8);
        const auto q = fixtures::random_vector(rng, 8);
        const auto expect = brute_force(g, q);
        const std::size_t k = 1 + rng() % n;
        const auto got = rank_all(g, q, k);
        ASSERT_EQ(got.items.size(), k);
        for (std::size_t r = 0; r < k; ++r) {
            EXPECT_EQ(got.items[r].id, expect[r]);
            EXPECT_EQ(got.items[r].score, cosine_similarity(q, g.embedding(g.index_of(expect[r]))));
        }
        EXPECT_EQ(got, rank_all(g, q, k));
    }
}

TEST(RankAll, TiesBreakByInsertionOrder)
{
    // items 0, 2, 3 are parallel to the query and tie at 1.0
    Gallery g({ItemId{50}, ItemId{10}, ItemId{40}, ItemId{20}},
              {Vector{2, 0}, Vector{0, 1}, Vector{1, 0}, Vector{5, 0}});
    const auto r = rank_all(g, Vector{1, 0}, 4);
    ASSERT_EQ(r.items.size(), 4u);
    EXPECT_EQ(r.items[0].id, ItemId{50});
    EXPECT_EQ(r.items[1].id, ItemId{40});
    EXPECT_EQ(r.items[2].id, ItemId{20});
    EXPECT_EQ(r.items[3].id, ItemId{10});
    EXPECT_EQ(rank_of(g, g.scores(Vector{1, 0}), ItemId{20}), 3u);
}

TEST(RankAll, ExclusionAndScaleInvariance)
{
    std::mt19937_64 rng(3);
    auto g = random_gallery(rng, 60, 5);
    const Vector q = g.embedding(7);
    const std::vector<ItemId> ex = {g.ids()[7]};
    const auto r = rank_all(g, q, 60, ex);
    EXPECT_EQ(r.items.size(), 59u);
    for (const auto& s : r.items) {
        EXPECT_NE(s.id, g.ids()[7]);
    }
    Vector scaled = q;
    for (auto& x : scaled) {
        x *= 37.5;
    }
    const auto a = rank_all(g, q, 60);
    const auto b = rank_all(g, scaled, 60);
    for (std::size_t i = 0; i < 60; ++i) {
        EXPECT_EQ(a.items[i].id, b.items[i].id);
    }
}

TEST(RankWithin, EqualsRestrictedSort)
{
    std::mt19937_64 rng(4);
    auto g = random_gallery(rng, 100, 6);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ItemId> subset;
        for (int i = 0; i < 6; ++i) {
            subset.push_back(g.ids()[rng() % 100]);
        }
        std::sort(subset.begin(), subset.end());
        subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
        const auto q = fixtures::random_vector(rng, 6);
        std::vector<ItemId> expect = subset;
        std::stable_sort(expect.begin(), expect.end(), [&](ItemId a, ItemId b) {
            return cosine_similarity(q, g.embedding(g.index_of(a))) > cosine_similarity(q, g.embedding(g.index_of(b)));
        });
        const auto got = rank_within(g, q, subset);
        ASSERT_EQ(got.items.size(), subset.size());
        for (std::size_t i = 0; i < subset.size(); ++i) {
            EXPECT_EQ(got.items[i].id, expect[i]);
        }
    }
    EXPECT_THROW(rank_within(g, Vector(6, 1.0), {}), ArgumentError);
}

TEST(Recall, Examples)
{
    const QueryId a{1}, b{2}, c{3};
    GroundTruth gt{{a, ItemId{10}}, {b, ItemId{20}}, {c, ItemId{30}}};
    // targets at ranks 1, 2, 7
    std::vector<RankedList> lists = {list_of(a, {10, 1, 2, 3, 4, 5, 6}), list_of(b, {1, 20, 2, 3, 4, 5, 6}),
                                     list_of(c, {1, 2, 3, 4, 5, 6, 30})};
    EXPECT_DOUBLE_EQ(recall_at_k(lists, gt, 5), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(recall_at_k(lists, gt, 1), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(recall_at_k(lists, gt, 7), 1.0);
    std::vector<RankedList> none = {list_of(a, {1, 2}), list_of(b, {3, 4})};
    EXPECT_DOUBLE_EQ(recall_at_k(none, gt, 2), 0.0);

    GroundTruth partial{{a, ItemId{10}}};
    EXPECT_THROW(recall_at_k(lists, partial, 1), DataError);
    EXPECT_THROW(recall_at_k({}, gt, 1), ArgumentError);
    EXPECT_THROW(recall_at_k(lists, gt, 0), ArgumentError);
}

TEST(Recall, SubsetExamples)
{
    GroundTruth gt{{QueryId{1}, ItemId{10}}};
    EXPECT_DOUBLE_EQ(recall_subset_at_k({list_of(QueryId{1}, {10})}, gt, 1), 1.0);
    const auto six = list_of(QueryId{1}, {1, 2, 3, 4, 5, 10});
    EXPECT_DOUBLE_EQ(recall_subset_at_k({six}, gt, 6), 1.0);
    EXPECT_DOUBLE_EQ(recall_subset_at_k({six}, gt, 9), 1.0);
    EXPECT_DOUBLE_EQ(recall_subset_at_k({six}, gt, 5), 0.0);
    EXPECT_THROW(recall_subset_at_k({list_of(QueryId{1}, {1, 2})}, gt, 1), DataError);
}

TEST(Recall, MonotoneInKAndSubsetDominates)
{
    std::mt19937_64 rng(5);
    auto g = random_gallery(rng, 200, 6);
    std::vector<RankedList> full, sub;
    GroundTruth gt;
    for (std::uint32_t qi = 0; qi < 60; ++qi) {
        const QueryId q{qi};
        const ItemId target = g.ids()[rng() % 200];
        gt[q] = target;
        const auto z = fixtures::random_vector(rng, 6);
        full.push_back(rank_all(g, z, 200, {}, q));
        std::vector<ItemId> subset = {target};
        while (subset.size() < 6) {
            const ItemId c = g.ids()[rng() % 200];
            if (std::find(subset.begin(), subset.end(), c) == subset.end()) {
                subset.push_back(c);
            }
        }
        sub.push_back(rank_within(g, z, subset, q));
    }
    double prev = 0.0;
    for (std::size_t k = 1; k <= 200; ++k) {
        const double r = recall_at_k(full, gt, k);
        EXPECT_GE(r, prev);
        prev = r;
        if (k <= 6) {
            EXPECT_GE(recall_subset_at_k(sub, gt, k), r);
        }
    }
    EXPECT_DOUBLE_EQ(prev, 1.0);
}

TEST(Recall, AvgMetric)
{
    EXPECT_DOUBLE_EQ(avg_metric(80.0, 82.0), 81.0);
    EXPECT_NEAR(avg_metric(84.07, 81.49), 82.78, 1e-12);
    EXPECT_DOUBLE_EQ(avg_metric(0.0, 0.0), 0.0);
}
