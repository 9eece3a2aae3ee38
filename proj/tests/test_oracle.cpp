#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "recall/oracle.hpp"
#include "support.hpp"

using namespace recall;
using nlohmann::json;

namespace
{

const World& world()
{
    static const World w = generate_world(fixtures::small_world_spec());
    return w;
}

std::vector<std::string> tokens(const std::string& s)
{
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string t; in >> t;) {
        out.push_back(t);
    }
    return out;
}

// Levenshtein distance over tokens
std::size_t token_distance(const std::string& a, const std::string& b)
{
    const auto x = tokens(a), y = tokens(b);
    std::vector<std::vector<std::size_t>> d(x.size() + 1, std::vector<std::size_t>(y.size() + 1));
    for (std::size_t i = 0; i <= x.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= y.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= x.size(); ++i) {
        for (std::size_t j = 1; j <= y.size(); ++j) {
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1)});
        }
    }
    return d[x.size()][y.size()];
}

} // namespace

TEST(Wire, RequestShape)
{
    const auto g = make_generate_request(ItemId{3}, "make color v1", ItemId{9});
    EXPECT_EQ(g.at("kind"), "generate_corrective");
    EXPECT_EQ(g.at("reference"), (json{{"id", 3}, {"uri", "item://3"}}));
    EXPECT_EQ(g.at("candidate").at("id"), 9);
    EXPECT_EQ(g.at("instruction"), "make color v1");
    EXPECT_TRUE(g.at("questions").is_array() && g.at("questions").empty());

    const auto v = make_vqa_request(ItemId{3}, "make color v1", ItemId{9}, {"is the color v1?"});
    EXPECT_EQ(v.at("kind"), "vqa_check");
    EXPECT_EQ(v.at("questions"), json::array({"is the color v1?"}));
    for (const auto& r : {g, v}) {
        EXPECT_EQ(r.size(), 5u);
    }
    EXPECT_EQ(descriptor_id(describe(ItemId{42})), ItemId{42});
    EXPECT_THROW(descriptor_id(json{{"uri", "x"}}), ProtocolError);
    EXPECT_THROW(descriptor_id(json{{"id", -1}}), ProtocolError);
}

TEST(Wire, ErrorMapping)
{
    EXPECT_NO_THROW(raise_if_error(json{{"answers", json::array()}}));
    EXPECT_THROW(raise_if_error(json{{"error", {{"kind", "retryable"}, {"message", "busy"}}}}), TransportError);
    EXPECT_THROW(raise_if_error(json{{"error", {{"kind", "protocol"}, {"message", "bad"}}}}), ProtocolError);
    EXPECT_THROW(raise_if_error(json{{"error", "text"}}), ProtocolError);
    EXPECT_THROW(raise_if_error(json::array()), ProtocolError);
}

TEST(Wire, GenerateResponseValidation)
{
    const json ok = {{"intents", {{{"text", "make color v1"}, {"verdict", "violated"}}}},
                     {"corrected_instruction", "make color v2"}};
    const auto r = parse_generate_response(ok);
    ASSERT_EQ(r.intents.size(), 1u);
    EXPECT_EQ(r.intents[0].verdict, Verdict::violated);
    EXPECT_EQ(r.corrected_instruction, "make color v2");

    auto broken = [&](auto mutate) {
        json j = ok;
        mutate(j);
        EXPECT_THROW(parse_generate_response(j), ProtocolError) << j.dump();
    };
    broken([](json& j) { j["intents"] = json::array(); });
    broken([](json& j) { j.erase("intents"); });
    broken([](json& j) { j["intents"][0]["verdict"] = "maybe"; });
    broken([](json& j) { j["intents"][0].erase("text"); });
    broken([](json& j) { j["corrected_instruction"] = ""; });
    broken([](json& j) { j["corrected_instruction"] = 5; });
}

TEST(Wire, VqaResponseValidation)
{
    const std::vector<std::string> qs = {"is the color v1?", "is the size v0?"};
    const json ok = {{"answers",
                      {{{"question", qs[0]}, {"answer", "yes"}, {"confidence", 0.97}},
                       {{"question", qs[1]}, {"answer", "no"}, {"confidence", 1.0}}}}};
    const auto r = parse_vqa_response(ok, qs);
    ASSERT_EQ(r.answers.size(), 2u);
    EXPECT_TRUE(r.answers[0].yes);
    EXPECT_FALSE(r.answers[1].yes);
    EXPECT_DOUBLE_EQ(r.answers[0].confidence, 0.97);

    auto broken = [&](auto mutate) {
        json j = ok;
        mutate(j);
        EXPECT_THROW(parse_vqa_response(j, qs), ProtocolError) << j.dump();
    };
    broken([](json& j) { j["answers"].erase(1); });
    broken([](json& j) { std::swap(j["answers"][0], j["answers"][1]); });
    broken([](json& j) { j["answers"][0]["answer"] = "Yes"; });
    broken([](json& j) { j["answers"][0]["answer"] = "yes, it is"; });
    broken([](json& j) { j["answers"][0]["confidence"] = 1.5; });
    broken([](json& j) { j["answers"][0]["confidence"] = -0.1; });
    broken([](json& j) { j["answers"][0].erase("confidence"); });
}

TEST(MockOracle, SatisfiedInstructionIsUnchanged)
{
    const MockOracle o(world());
    for (const auto& t : world().queries) {
        const auto r = parse_generate_response(o.call(make_generate_request(t.reference_id, t.instruction, t.target_id)));
        EXPECT_EQ(r.corrected_instruction, t.instruction);
        for (const auto& iv : r.intents) {
            EXPECT_EQ(iv.verdict, Verdict::valid);
        }
    }
}

TEST(MockOracle, ConfusableGetsMinimalEdit)
{
    const MockOracle o(world());
    const Grammar g = world().grammar();
    std::size_t checked = 0;
    for (std::size_t q = 0; q < world().queries.size(); ++q) {
        const auto& t = world().queries[q];
        for (auto id : world().subsets[q]) {
            if (id == t.target_id || to_underlying(id) < world().spec.num_items) {
                continue;
            }
            const auto r = parse_generate_response(o.call(make_generate_request(t.reference_id, t.instruction, id)));
            // equals the true diff reference -> informative
            EXPECT_EQ(g.parse(r.corrected_instruction), ground_truth_diff(world(), t.reference_id, id));
            std::size_t violated = 0;
            for (const auto& iv : r.intents) {
                violated += iv.verdict == Verdict::violated ? 1 : 0;
            }
            EXPECT_EQ(violated, 1u);
            // one value token per violated intent, nothing else rewritten
            EXPECT_EQ(token_distance(t.instruction, r.corrected_instruction), violated);
            ++checked;
        }
    }
    EXPECT_EQ(checked, world().queries.size() * world().spec.confusables_per_query);
}

TEST(MockOracle, CorrectedInstructionIsTheAttributeDiff)
{
    const MockOracle o(world());
    const Grammar g = world().grammar();
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const auto& t = world().queries[rng() % world().queries.size()];
        const ItemId cand{static_cast<std::uint32_t>(rng() % world().items.size())};
        const auto diff = ground_truth_diff(world(), t.reference_id, cand);
        const auto resp = o.call(make_generate_request(t.reference_id, t.instruction, cand));
        if (diff.empty()) {
            EXPECT_THROW(parse_generate_response(resp), ProtocolError);
            continue;
        }
        const auto r = parse_generate_response(resp);
        auto edits = g.parse(r.corrected_instruction);
        std::sort(edits.begin(), edits.end());
        EXPECT_EQ(edits, diff);
        // valid original intents survive verbatim
        for (const auto& iv : r.intents) {
            if (iv.verdict == Verdict::valid) {
                EXPECT_NE(r.corrected_instruction.find(iv.intent), std::string::npos);
            }
        }
    }
}

TEST(MockOracle, VqaIsAttributeLookup)
{
    const MockOracle o(world());
    const Grammar g = world().grammar();
    const auto& item = world().item(ItemId{17});
    std::vector<std::string> qs;
    for (std::size_t s = 0; s < world().spec.num_attributes; ++s) {
        for (std::size_t v = 0; v < world().spec.values_per_attribute; ++v) {
            qs.push_back(g.question_for({s, v}));
        }
    }
    const auto r = parse_vqa_response(o.call(make_vqa_request(ItemId{0}, "make color v0", ItemId{17}, qs)), qs);
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const auto e = *g.parse_question(qs[i]);
        EXPECT_EQ(r.answers[i].yes, item.attributes[e.slot] == e.value);
        EXPECT_EQ(r.answers[i].confidence, 1.0);
    }
    EXPECT_THROW(parse_vqa_response(o.call(make_vqa_request(ItemId{0}, "x", ItemId{17}, {"is it red?"})), {"is it red?"}),
                 ProtocolError);
}

TEST(MockOracle, Errors)
{
    const MockOracle o(world());
    EXPECT_THROW(raise_if_error(o.call(json{{"kind", "summarize"}})), ProtocolError);
    EXPECT_THROW(o.call(make_generate_request(ItemId{0}, "make color v1", ItemId{999999})), DataError);
    EXPECT_THROW(MockOracle(world(), {1.5, 0}), ArgumentError);
}

TEST(MockOracle, NoiseIsSeededAndCorrupts)
{
    const auto& t = world().queries[0];
    const ItemId cand = world().subsets[0][0] == t.target_id ? world().subsets[0][1] : world().subsets[0][0];
    const auto req = make_generate_request(t.reference_id, t.instruction, cand);
    const MockOracle exact(world());
    const MockOracle always(world(), {1.0, 5});
    const auto clean = exact.call(req);
    const auto noisy = always.call(req);
    EXPECT_EQ(noisy, MockOracle(world(), {1.0, 5}).call(req));
    if (clean.contains("corrected_instruction")) {
        const auto a = world().grammar().parse(clean["corrected_instruction"].get<std::string>());
        const auto b = world().grammar().parse(noisy["corrected_instruction"].get<std::string>());
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a[i].slot, b[i].slot);
            if (!satisfies(world().item(cand).attributes, a[i]) || a[i] != b[i]) {
                // synthesized edits all get a wrong value at noise 1
                EXPECT_FALSE(satisfies(world().item(cand).attributes, b[i]));
            }
        }
    }
}
