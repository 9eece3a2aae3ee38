#include <fstream>

#include <gtest/gtest.h>

#include "recall/serialization.hpp"
#include "support.hpp"

using namespace recall;

namespace
{

const World& world()
{
    static const World w = generate_world(fixtures::small_world_spec());
    return w;
}

void write(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

} // namespace

TEST(Io, MissingAndMalformedFiles)
{
    fixtures::TempDir dir("io");
    EXPECT_THROW(io::read_json(dir.path() / "nope.json"), InputError);
    write(dir.path() / "bad.json", "{not json");
    EXPECT_THROW(io::read_json(dir.path() / "bad.json"), SchemaError);
    write(dir.path() / "rows.jsonl", "{\"a\":1}\n\n{\"a\":2}\n");
    const auto rows = io::read_jsonl(dir.path() / "rows.jsonl");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1]["a"], 2);
    write(dir.path() / "rows.jsonl", "{\"a\":1}\n{\"a\":\n");
    EXPECT_THROW(io::read_jsonl(dir.path() / "rows.jsonl"), SchemaError);
    io::write_json(dir.path() / "deep" / "er" / "x.json", json{{"k", 1}});
    EXPECT_EQ(io::read_json(dir.path() / "deep" / "er" / "x.json")["k"], 1);
}

TEST(WorldIo, RoundTrip)
{
    fixtures::TempDir dir("world");
    save_world(world(), dir.path());
    const World back = load_world(dir.path());
    EXPECT_EQ(back.spec.seed, world().spec.seed);
    EXPECT_EQ(back.queries, world().queries);
    EXPECT_EQ(back.subsets, world().subsets);
    EXPECT_EQ(back.splits, world().splits);
    ASSERT_EQ(back.items.size(), world().items.size());
    for (std::size_t i = 0; i < back.items.size(); ++i) {
        ASSERT_EQ(back.items[i].attributes, world().items[i].attributes);
        ASSERT_EQ(back.items[i].image_feature, world().items[i].image_feature);
    }
}

TEST(WorldIo, SchemaErrors)
{
    fixtures::TempDir dir("world-bad");
    EXPECT_THROW(load_world(dir.path() / "absent"), InputError);
    save_world(world(), dir.path());

    auto spec = io::read_json(dir.path() / "spec.json");
    spec["colour"] = 1;
    io::write_json(dir.path() / "spec.json", spec);
    EXPECT_THROW(load_world(dir.path()), SchemaError);

    save_world(world(), dir.path());
    auto items = io::read_jsonl(dir.path() / "items.jsonl");
    items[3]["image_feature"].erase(0);
    io::write_jsonl(dir.path() / "items.jsonl", items);
    EXPECT_THROW(load_world(dir.path()), SchemaError);

    save_world(world(), dir.path());
    auto queries = io::read_jsonl(dir.path() / "queries.jsonl");
    queries[0]["instruction"] = "paint it red";
    io::write_jsonl(dir.path() / "queries.jsonl", queries);
    EXPECT_THROW(load_world(dir.path()), SchemaError);

    save_world(world(), dir.path());
    queries = io::read_jsonl(dir.path() / "queries.jsonl");
    queries[0]["split"] = "validation";
    io::write_jsonl(dir.path() / "queries.jsonl", queries);
    EXPECT_THROW(load_world(dir.path()), SchemaError);

    save_world(world(), dir.path());
    auto subsets = io::read_jsonl(dir.path() / "subsets.jsonl");
    subsets.pop_back();
    io::write_jsonl(dir.path() / "subsets.jsonl", subsets);
    EXPECT_THROW(load_world(dir.path()), SchemaError);
}

TEST(EncoderIo, RoundTripIsExact)
{
    fixtures::TempDir dir("enc");
    const auto inst = fixtures::random_instance(4);
    save_encoder(inst.params, dir.path() / "s.json");
    const auto back = load_encoder(dir.path() / "s.json");
    EXPECT_EQ(back.query_tower, inst.params.query_tower);
    EXPECT_EQ(back.target_tower, inst.params.target_tower);
    EXPECT_EQ(snapshot_id(back), snapshot_id(inst.params));
    EXPECT_EQ(io::read_json(dir.path() / "s.json")["snapshot_id"], snapshot_id(inst.params));
}

TEST(EncoderIo, RejectsForeignOrBrokenSnapshots)
{
    const json good = to_json(fixtures::random_instance(5).params);
    auto broken = [&](auto mutate) {
        json j = good;
        mutate(j);
        EXPECT_THROW(encoder_from_json(j), SchemaError) << j.dump().substr(0, 120);
    };
    broken([](json& j) { j["format"] = "torch"; });
    broken([](json& j) { j.erase("format"); });
    broken([](json& j) { j["version"] = 2; });
    broken([](json& j) { j["query_tower"][0]["bias"].erase(0); });
    broken([](json& j) { j["query_tower"][0]["weights"].erase(0); });
    broken([](json& j) { j["query_tower"][0]["weights"][0].erase(0); });
    broken([](json& j) { j["target_tower"] = json::array(); });
    broken([](json& j) { j["query_tower"][0]["out_dim"] = "big"; });
}

TEST(CorrectiveIo, RoundTrip)
{
    fixtures::TempDir dir("corr");
    CorrectiveTriplet c;
    c.parent_query_id = QueryId{4};
    c.reference_id = ItemId{10};
    c.original_instruction = "make color v1 and make size v2";
    c.corrected_instruction = "make color v1 and make size v3";
    c.informative_id = ItemId{77};
    c.verification_trace = {{"make color v1", Verdict::valid}, {"make size v2", Verdict::violated}};
    c.filter = {true, true, {{"is the size v3?", true, 0.125}}, ""};
    CorrectiveTriplet r = c;
    r.filter = {true, false, {}, "inconsistent"};
    save_correctives({c, r}, dir.path() / "c.jsonl");
    const auto back = load_correctives(dir.path() / "c.jsonl");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0], c);
    EXPECT_EQ(back[1], r);

    auto rows = io::read_jsonl(dir.path() / "c.jsonl");
    rows[0]["verification_trace"][0]["verdict"] = "maybe";
    io::write_jsonl(dir.path() / "c.jsonl", rows);
    EXPECT_THROW(load_correctives(dir.path() / "c.jsonl"), SchemaError);
    rows[0].erase("informative_id");
    io::write_jsonl(dir.path() / "c.jsonl", rows);
    EXPECT_THROW(load_correctives(dir.path() / "c.jsonl"), SchemaError);
}

TEST(MiningIo, RoundTripRetallies)
{
    fixtures::TempDir dir("mining");
    MiningReport r;
    r.records = {{QueryId{0}, 1, {}}, {QueryId{1}, 3, {ItemId{5}, ItemId{9}}}, {QueryId{2}, 2, {ItemId{1}}}};
    save_mining(r, dir.path() / "m.jsonl");
    const auto back = load_mining(dir.path() / "m.jsonl");
    EXPECT_EQ(back.records, r.records);
    EXPECT_EQ(back.failure_count, 2u);
    EXPECT_EQ(back.mined_instance_count, 3u);
    auto rows = io::read_jsonl(dir.path() / "m.jsonl");
    rows[0]["gt_rank"] = 0;
    io::write_jsonl(dir.path() / "m.jsonl", rows);
    EXPECT_THROW(load_mining(dir.path() / "m.jsonl"), SchemaError);
}

TEST(TrainingLogIo, RoundTrip)
{
    fixtures::TempDir dir("log");
    TrainingLog log{{{0, 1.5, 1.25, 0.8333333333333334}, {1, 0.1, 0.1, 0.0}}, "abc123"};
    save_training_log(log, dir.path() / "l.jsonl");
    EXPECT_EQ(load_training_log(dir.path() / "l.jsonl"), log);
    const auto rows = io::read_jsonl(dir.path() / "l.jsonl");
    EXPECT_EQ(rows[0].size(), 5u);
    EXPECT_EQ(rows[1]["snapshot_id"], "abc123");
}

TEST(MetricsIo, RoundTrip)
{
    fixtures::TempDir dir("metrics");
    MetricsReport m;
    m.recall_at = {{1, 0.25}, {5, 0.5}, {10, 0.75}, {50, 1.0}};
    m.recall_subset_at = {{1, 0.5}, {2, 0.75}, {3, 1.0}};
    m.avg = (0.5 + 0.5) / 2;
    m.num_queries = 4;
    save_metrics(m, dir.path() / "m.json");
    EXPECT_EQ(load_metrics(dir.path() / "m.json"), m);
}

TEST(CalibrationStatsIo, RoundTrip)
{
    CalibrationStats s{10, 9, 7, 2, 1, 0};
    EXPECT_EQ(calibration_stats_from_json(to_json(s)), s);
    EXPECT_THROW(calibration_stats_from_json(json{{"kept", 1}}), SchemaError);
}

TEST(WorldSpecIo, DefaultsAndUnknownKeys)
{
    const auto s = world_spec_from_json(json{{"num_items", 500}});
    EXPECT_EQ(s.num_items, 500u);
    EXPECT_EQ(s.num_attributes, WorldSpec{}.num_attributes);
    EXPECT_THROW(world_spec_from_json(json{{"items", 500}}), SchemaError);
    EXPECT_THROW(world_spec_from_json(json{{"num_items", "many"}}), SchemaError);
    EXPECT_THROW(world_spec_from_json(json::array()), SchemaError);
}
