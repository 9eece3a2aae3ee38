#ifndef RECALL_ORACLE_HPP
#define RECALL_ORACLE_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "hashing.hpp"
#include "ids.hpp"
#include "world.hpp"

namespace recall
{

// Wire protocol shared by in-process and remote oracle backends.
//
// request:  {"kind": "generate_corrective" | "vqa_check",
//            "reference": {...}, "instruction": "...",
//            "candidate": {...}, "questions": [...]}
// generate: {"intents": [{"text": "...", "verdict": "valid" | "violated"}],
//            "corrected_instruction": "..."}
// vqa:      {"answers": [{"question": "...", "answer": "yes" | "no",
//                         "confidence": 0.0-1.0}]}
// failure:  {"error": {"kind": "protocol" | "retryable", "message": "..."}}

inline constexpr std::string_view kGenerateKind = "generate_corrective";
inline constexpr std::string_view kVqaKind = "vqa_check";
inline constexpr std::string_view kOraclePath = "/v1/oracle";

enum class Verdict { valid, violated };

struct IntentVerdict {
    std::string intent;
    Verdict verdict = Verdict::valid;

    bool operator==(const IntentVerdict&) const = default;
};

struct GenerateResponse {
    std::vector<IntentVerdict> intents;
    std::string corrected_instruction;
};

struct VqaAnswer {
    std::string question;
    bool yes = false;
    double confidence = 0.0;

    bool operator==(const VqaAnswer&) const = default;
};

struct VqaResponse {
    std::vector<VqaAnswer> answers;
};

/// Image descriptor sent over the wire. Backends resolve the id themselves.
inline nlohmann::json describe(ItemId id) { return {{"id", to_underlying(id)}, {"uri", "item://" + std::to_string(to_underlying(id))}}; }

inline ItemId descriptor_id(const nlohmann::json& d)
{
    if (!d.is_object() || !d.contains("id") || !d["id"].is_number_unsigned()) {
        throw ProtocolError("descriptor without an unsigned integer id");
    }
    return ItemId{d["id"].get<std::uint32_t>()};
}

inline nlohmann::json make_generate_request(ItemId reference, std::string_view instruction, ItemId informative)
{
    return {{"kind", kGenerateKind},
            {"reference", describe(reference)},
            {"instruction", instruction},
            {"candidate", describe(informative)},
            {"questions", nlohmann::json::array()}};
}

inline nlohmann::json make_vqa_request(ItemId reference, std::string_view instruction, ItemId candidate,
                                       const std::vector<std::string>& questions)
{
    return {{"kind", kVqaKind},
            {"reference", describe(reference)},
            {"instruction", instruction},
            {"candidate", describe(candidate)},
            {"questions", questions}};
}

inline void raise_if_error(const nlohmann::json& response)
{
    if (!response.is_object()) {
        throw ProtocolError("oracle response is not a JSON object");
    }
    if (!response.contains("error")) {
        return;
    }
    const auto& e = response["error"];
    const std::string message = e.is_object() && e.contains("message") && e["message"].is_string()
                                    ? e["message"].get<std::string>()
                                    : e.dump();
    if (e.is_object() && e.value("kind", "") == "retryable") {
        throw TransportError("oracle asked for retry: " + message);
    }
    throw ProtocolError("oracle error: " + message);
}

inline GenerateResponse parse_generate_response(const nlohmann::json& response)
{
    raise_if_error(response);
    if (!response.contains("intents") || !response["intents"].is_array()) {
        throw ProtocolError("generate response lacks an intents array");
    }
    if (!response.contains("corrected_instruction") || !response["corrected_instruction"].is_string()) {
        throw ProtocolError("generate response lacks corrected_instruction");
    }
    GenerateResponse out;
    for (const auto& item : response["intents"]) {
        if (!item.is_object() || !item.contains("text") || !item["text"].is_string() || !item.contains("verdict")
            || !item["verdict"].is_string()) {
            throw ProtocolError("malformed intent entry: " + item.dump());
        }
        const auto verdict = item["verdict"].get<std::string>();
        if (verdict != "valid" && verdict != "violated") {
            throw ProtocolError("unknown verdict '" + verdict + "'");
        }
        out.intents.push_back({item["text"].get<std::string>(), verdict == "valid" ? Verdict::valid : Verdict::violated});
    }
    if (out.intents.empty()) {
        throw ProtocolError("generate response has no intents");
    }
    out.corrected_instruction = response["corrected_instruction"].get<std::string>();
    if (out.corrected_instruction.empty()) {
        throw ProtocolError("generate response has an empty corrected_instruction");
    }
    return out;
}

/// Requires one answer per question, in question order.
inline VqaResponse parse_vqa_response(const nlohmann::json& response, const std::vector<std::string>& questions)
{
    raise_if_error(response);
    if (!response.contains("answers") || !response["answers"].is_array()) {
        throw ProtocolError("vqa response lacks an answers array");
    }
    const auto& answers = response["answers"];
    if (answers.size() != questions.size()) {
        throw ProtocolError("vqa response answers " + std::to_string(answers.size()) + " of "
                            + std::to_string(questions.size()) + " questions");
    }
    VqaResponse out;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        const auto& a = answers[i];
        if (!a.is_object() || !a.contains("question") || !a["question"].is_string() || !a.contains("answer")
            || !a["answer"].is_string() || !a.contains("confidence") || !a["confidence"].is_number()) {
            throw ProtocolError("malformed vqa answer: " + a.dump());
        }
        const auto q = a["question"].get<std::string>();
        if (q != questions[i]) {
            throw ProtocolError("vqa answer out of order: '" + q + "'");
        }
        const auto token = a["answer"].get<std::string>();
        if (token != "yes" && token != "no") {
            throw ProtocolError("vqa answer must be 'yes' or 'no', got '" + token + "'");
        }
        const double c = a["confidence"].get<double>();
        if (!(c >= 0.0 && c <= 1.0)) {
            throw ProtocolError("vqa confidence outside [0, 1]");
        }
        out.answers.push_back({q, token == "yes", c});
    }
    return out;
}

/// Anything that answers oracle requests. Implementations must be safe to
/// call from several threads at once.
class OracleBackend
{
public:
    virtual ~OracleBackend() = default;
    virtual nlohmann::json call(const nlohmann::json& request) const = 0;
};

struct MockOracleOptions {
    // probability that each synthesized edit gets a wrong value
    double noise = 0.0;
    std::uint64_t seed = 0;
};

/// Exact oracle over a synthetic world: generation renders the true attribute
/// diff reference -> candidate, keeping satisfied intents verbatim; VQA is an
/// attribute lookup with confidence 1. Pure function of (world, options,
/// request), so reentrant.
class MockOracle final : public OracleBackend
{
public:
    explicit MockOracle(const World& world, MockOracleOptions options = {}) : world_(&world), options_(options)
    {
        if (!(options.noise >= 0.0 && options.noise <= 1.0)) {
            throw ArgumentError("mock oracle noise must be in [0, 1]");
        }
    }

    nlohmann::json call(const nlohmann::json& request) const override
    {
        const auto kind = request.value("kind", "");
        if (kind == kGenerateKind) {
            return generate(request);
        }
        if (kind == kVqaKind) {
            return vqa(request);
        }
        return {{"error", {{"kind", "protocol"}, {"message", "unknown request kind '" + kind + "'"}}}};
    }

private:
    nlohmann::json generate(const nlohmann::json& request) const
    {
        const Grammar g = world_->grammar();
        const ItemId ref = descriptor_id(request.at("reference"));
        const ItemId cand = descriptor_id(request.at("candidate"));
        const std::string instruction = request.at("instruction").get<std::string>();
        const Attributes& ref_attrs = world_->item(ref).attributes;
        const Attributes& cand_attrs = world_->item(cand).attributes;
        const auto edits = g.parse(instruction);

        nlohmann::json intents = nlohmann::json::array();
        std::vector<Edit> corrected;
        std::vector<bool> covered(ref_attrs.size(), false);
        for (const auto& e : edits) {
            covered[e.slot] = true;
            const bool ok = satisfies(cand_attrs, e);
            intents.push_back({{"text", g.render_intent(e)}, {"verdict", ok ? "valid" : "violated"}});
            if (ok) {
                corrected.push_back(e);
            } else if (cand_attrs[e.slot] != ref_attrs[e.slot]) {
                corrected.push_back(synthesize(request, {e.slot, cand_attrs[e.slot]}));
            }
        }
        for (std::size_t s = 0; s < ref_attrs.size(); ++s) {
            if (!covered[s] && cand_attrs[s] != ref_attrs[s]) {
                corrected.push_back(synthesize(request, {s, cand_attrs[s]}));
            }
        }
        return {{"intents", std::move(intents)}, {"corrected_instruction", g.render(corrected)}};
    }

    // Applies the seeded corruption to a freshly synthesized edit.
    Edit synthesize(const nlohmann::json& request, Edit e) const
    {
        if (options_.noise <= 0.0) {
            return e;
        }
        std::uint64_t h = fnv1a64(request.at("instruction").get<std::string>());
        h = splitmix64(h ^ options_.seed);
        h = splitmix64(h ^ to_underlying(descriptor_id(request.at("reference"))));
        h = splitmix64(h ^ (std::uint64_t{to_underlying(descriptor_id(request.at("candidate")))} << 20));
        h = splitmix64(h ^ (e.slot + 1));
        if (unit_interval(h) >= options_.noise) {
            return e;
        }
        const std::size_t V = world_->spec.values_per_attribute;
        const std::size_t shift = 1 + static_cast<std::size_t>(splitmix64(h) % (V - 1));
        return {e.slot, (e.value + shift) % V};
    }

    nlohmann::json vqa(const nlohmann::json& request) const
    {
        const Grammar g = world_->grammar();
        const ItemId cand = descriptor_id(request.at("candidate"));
        const Attributes& attrs = world_->item(cand).attributes;
        nlohmann::json answers = nlohmann::json::array();
        for (const auto& q : request.at("questions")) {
            const auto text = q.get<std::string>();
            const auto e = g.parse_question(text);
            if (!e) {
                return {{"error", {{"kind", "protocol"}, {"message", "unparseable question '" + text + "'"}}}};
            }
            answers.push_back({{"question", text}, {"answer", satisfies(attrs, *e) ? "yes" : "no"}, {"confidence", 1.0}});
        }
        return {{"answers", std::move(answers)}};
    }

    const World* world_;
    MockOracleOptions options_;
};

} // namespace recall

#endif
