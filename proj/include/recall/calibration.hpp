#ifndef RECALL_CALIBRATION_HPP
#define RECALL_CALIBRATION_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "ids.hpp"
#include "miner.hpp"
#include "oracle.hpp"
#include "world.hpp"

namespace recall
{

struct FilterVerdict {
    bool checked = false;
    bool passed = false;
    std::vector<VqaAnswer> answers;
    std::string reason; // set when rejected

    bool operator==(const FilterVerdict&) const = default;
};

/// (reference, corrected instruction, informative instance) plus provenance.
struct CorrectiveTriplet {
    QueryId parent_query_id{};
    ItemId reference_id{};
    std::string original_instruction;
    std::string corrected_instruction;
    ItemId informative_id{};
    std::vector<IntentVerdict> verification_trace;
    FilterVerdict filter;

    bool operator==(const CorrectiveTriplet&) const = default;
};

/// Asks the oracle to decompose the instruction into intents, verify them
/// against the informative instance, and minimally rewrite the violated ones.
/// Throws ProtocolError on a malformed answer, TransportError when the call
/// itself fails.
inline CorrectiveTriplet generate_corrective(const OracleBackend& oracle, const Triplet& original,
                                             ItemId informative)
{
    if (informative == original.target_id) {
        throw DataError("informative instance equals the target of " + to_string(original.query_id));
    }
    const auto response = parse_generate_response(
        oracle.call(make_generate_request(original.reference_id, original.instruction, informative)));
    CorrectiveTriplet c;
    c.parent_query_id = original.query_id;
    c.reference_id = original.reference_id;
    c.original_instruction = original.instruction;
    c.corrected_instruction = response.corrected_instruction;
    c.informative_id = informative;
    c.verification_trace = response.intents;
    return c;
}

/// One question per intent of the corrected instruction that is not a
/// verbatim copy of a valid original intent. When the rewrite only dropped
/// intents, every remaining intent is asked about. Empty when the
/// instruction came back unchanged.
inline std::vector<std::string> vqa_questions(const Grammar& grammar, const CorrectiveTriplet& c)
{
    if (c.corrected_instruction == c.original_instruction) {
        return {};
    }
    std::vector<std::string> kept_verbatim;
    for (const auto& iv : c.verification_trace) {
        if (iv.verdict == Verdict::valid) {
            kept_verbatim.push_back(iv.intent);
        }
    }
    std::vector<std::string> edited;
    std::vector<std::string> all;
    for (const auto& phrase : grammar.split_intents(c.corrected_instruction)) {
        const auto e = grammar.parse_intent(phrase);
        if (!e) {
            throw ProtocolError("corrected instruction outside grammar: '" + c.corrected_instruction + "'");
        }
        if (std::find(kept_verbatim.begin(), kept_verbatim.end(), phrase) == kept_verbatim.end()) {
            edited.push_back(grammar.question_for(*e));
        }
        all.push_back(grammar.question_for(*e));
    }
    return edited.empty() ? all : edited;
}

/// Runs the VQA consistency check on one triplet and records the verdict.
inline void vqa_check(const OracleBackend& oracle, const Grammar& grammar, CorrectiveTriplet& c, double threshold)
{
    const auto questions = vqa_questions(grammar, c);
    if (questions.empty()) {
        // the informative instance already satisfies the instruction: a false
        // negative, not something to correct
        c.filter = {true, false, {}, "unchanged"};
        return;
    }
    const auto response = parse_vqa_response(
        oracle.call(make_vqa_request(c.reference_id, c.corrected_instruction, c.informative_id, questions)), questions);
    c.filter.checked = true;
    c.filter.answers = response.answers;
    c.filter.passed = std::all_of(response.answers.begin(), response.answers.end(),
                                  [threshold](const VqaAnswer& a) { return a.yes && a.confidence >= threshold; });
    if (!c.filter.passed) {
        c.filter.reason = "inconsistent";
    }
}

struct FilterResult {
    std::vector<CorrectiveTriplet> kept;
    std::vector<CorrectiveTriplet> rejected;
};

struct CalibrationOptions {
    double vqa_threshold = 0.95;
    std::size_t concurrency = 1;
    std::size_t max_retries = 2;
};

namespace detail
{

// Calls fn(i) for i in [0, n) on up to `workers` threads.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn)
{
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                fn(i);
            }
        });
    }
}

template <class Fn>
auto with_retries(std::size_t max_retries, Fn&& fn)
{
    for (std::size_t attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const TransportError&) {
            if (attempt >= max_retries) {
                throw;
            }
        }
    }
}

} // namespace detail

/// Partitions candidates into kept / rejected, preserving input order.
/// Errored checks land in rejected with the error as reason.
inline FilterResult vqa_filter(const OracleBackend& oracle, const Grammar& grammar,
                               std::vector<CorrectiveTriplet> candidates, double threshold,
                               const CalibrationOptions& options = {})
{
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ArgumentError("vqa_filter: threshold must be in [0, 1]");
    }
    detail::parallel_for(candidates.size(), options.concurrency, [&](std::size_t i) {
        auto& c = candidates[i];
        c.filter = {};
        try {
            detail::with_retries(options.max_retries, [&] { vqa_check(oracle, grammar, c, threshold); });
        } catch (const ProtocolError& e) {
            c.filter = {true, false, {}, std::string("protocol: ") + e.what()};
        } catch (const TransportError& e) {
            c.filter = {true, false, {}, std::string("transport: ") + e.what()};
        }
    });
    FilterResult out;
    for (auto& c : candidates) {
        (c.filter.passed ? out.kept : out.rejected).push_back(std::move(c));
    }
    return out;
}

struct CalibrationStats {
    std::size_t mined = 0;
    std::size_t generated = 0;
    std::size_t kept = 0;
    std::size_t rejected = 0;
    std::size_t protocol_errors = 0;
    std::size_t transport_errors = 0;

    bool operator==(const CalibrationStats&) const = default;
};

struct CalibrationResult {
    std::vector<CorrectiveTriplet> kept;
    std::vector<CorrectiveTriplet> rejected;
    CalibrationStats stats;
};

/// Generation + filtering over every mined (query, informative) pair.
/// Malformed generations are discarded and counted; nothing is retried
/// except transport failures.
inline CalibrationResult calibrate(const OracleBackend& oracle, const World& world, const std::vector<Triplet>& originals,
                                   const MiningReport& mining, const CalibrationOptions& options = {})
{
    std::map<QueryId, const Triplet*> by_id;
    for (const auto& t : originals) {
        by_id[t.query_id] = &t;
    }
    struct Job {
        const Triplet* original;
        ItemId informative;
    };
    std::vector<Job> jobs;
    for (const auto& rec : mining.records) {
        auto it = by_id.find(rec.query_id);
        if (it == by_id.end()) {
            throw DataError("calibrate: mining record for unknown " + to_string(rec.query_id));
        }
        for (auto id : rec.informative) {
            jobs.push_back({it->second, id});
        }
    }

    enum class Outcome { ok, protocol, transport };
    std::vector<std::optional<CorrectiveTriplet>> generated(jobs.size());
    std::vector<Outcome> outcome(jobs.size(), Outcome::ok);
    detail::parallel_for(jobs.size(), options.concurrency, [&](std::size_t i) {
        try {
            generated[i] = detail::with_retries(options.max_retries, [&] {
                return generate_corrective(oracle, *jobs[i].original, jobs[i].informative);
            });
        } catch (const ProtocolError&) {
            outcome[i] = Outcome::protocol;
        } catch (const TransportError&) {
            outcome[i] = Outcome::transport;
        }
    });

    CalibrationResult result;
    result.stats.mined = jobs.size();
    std::vector<CorrectiveTriplet> candidates;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (generated[i]) {
            candidates.push_back(std::move(*generated[i]));
        } else if (outcome[i] == Outcome::protocol) {
            ++result.stats.protocol_errors;
        } else {
            ++result.stats.transport_errors;
        }
    }
    result.stats.generated = candidates.size();

    auto filtered = vqa_filter(oracle, world.grammar(), std::move(candidates), options.vqa_threshold, options);
    for (const auto& c : filtered.rejected) {
        if (c.filter.reason.rfind("protocol", 0) == 0) {
            ++result.stats.protocol_errors;
        } else if (c.filter.reason.rfind("transport", 0) == 0) {
            ++result.stats.transport_errors;
        }
    }
    result.kept = std::move(filtered.kept);
    result.rejected = std::move(filtered.rejected);
    result.stats.kept = result.kept.size();
    result.stats.rejected = result.rejected.size();
    return result;
}

/// "64,105 → 58,650"
inline std::string with_thousands(std::size_t n)
{
    std::string digits = std::to_string(n);
    std::string out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i > 0 && (digits.size() - i) % 3 == 0) {
            out += ',';
        }
        out += digits[i];
    }
    return out;
}

inline std::string render_filter_line(std::size_t generated, std::size_t kept)
{
    return with_thousands(generated) + " → " + with_thousands(kept);
}

} // namespace recall

#endif
