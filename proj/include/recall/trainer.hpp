#ifndef RECALL_TRAINER_HPP
#define RECALL_TRAINER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "calibration.hpp"
#include "encoder.hpp"
#include "errors.hpp"
#include "hashing.hpp"
#include "losses.hpp"
#include "world.hpp"

namespace recall
{

struct TrainConfig {
    double learning_rate = 0.5;
    std::size_t batch_size = 64;
    std::size_t steps = 200;
    std::uint64_t seed = 0;
    LossConfig loss;
    double micro_group_fraction = 0.5;
    // false: correctives enter batches as negatives only (hard-negative baseline)
    bool correctives_as_queries = true;

    void validate() const
    {
        loss.validate();
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
            throw ArgumentError("learning_rate must be non-negative");
        }
        if (batch_size < 1) {
            throw ArgumentError("batch_size must be >= 1");
        }
        if (!(micro_group_fraction >= 0.0 && micro_group_fraction <= 1.0)) {
            throw ArgumentError("micro_group_fraction must be in [0, 1]");
        }
    }
};

enum class EntryRole { original, corrective, negative_only };

/// One batch slot. Every entry contributes its target to the in-batch
/// candidate pool; entries other than negative_only also contribute a query.
struct BatchEntry {
    EntryRole role = EntryRole::original;
    QueryId query_id{}; // the original's id, also for its correctives
    ItemId reference_id{};
    std::string instruction;
    ItemId target_id{};
    std::vector<std::size_t> negatives; // entry indices used as t- by the triplet term
};

struct MicroBatch {
    std::vector<BatchEntry> entries;
};

/// Seeded, deterministic stream of Stage-4 batches.
///
/// A micro_group_fraction share of each batch is filled with micro-groups: an
/// original followed directly by its correctives, with the original's
/// triplet negatives pointing at the correctives' informative instances.
/// The rest are originals drawn uniformly with replacement. An entry whose
/// target already appears in the batch is skipped.
class MicroBatchStream
{
public:
    MicroBatchStream(std::vector<Triplet> originals, std::vector<CorrectiveTriplet> correctives,
                     const TrainConfig& cfg)
        : originals_(std::move(originals)), batch_size_(cfg.batch_size), fraction_(cfg.micro_group_fraction),
          correctives_as_queries_(cfg.correctives_as_queries), rng_(cfg.seed)
    {
        if (originals_.empty()) {
            throw ArgumentError("batch stream needs at least one original triplet");
        }
        std::map<QueryId, std::size_t> index;
        for (std::size_t i = 0; i < originals_.size(); ++i) {
            index.emplace(originals_[i].query_id, i);
        }
        std::map<std::size_t, std::vector<CorrectiveTriplet>> grouped;
        for (auto& c : correctives) {
            auto it = index.find(c.parent_query_id);
            if (it == index.end()) {
                throw DataError("orphan corrective: parent " + to_string(c.parent_query_id) + " not among originals");
            }
            if (c.reference_id != originals_[it->second].reference_id) {
                throw DataError("corrective of " + to_string(c.parent_query_id) + " has a different reference");
            }
            grouped[it->second].push_back(std::move(c));
        }
        for (auto& [orig, members] : grouped) {
            groups_.push_back({orig, std::move(members)});
        }
    }

    MicroBatch next()
    {
        MicroBatch batch;
        std::unordered_set<ItemId> targets;
        const auto group_slots = static_cast<std::size_t>(std::floor(fraction_ * static_cast<double>(batch_size_)));
        if (group_slots >= 2 && !groups_.empty()) {
            fill_groups(batch, targets, group_slots);
        }
        std::uniform_int_distribution<std::size_t> pick(0, originals_.size() - 1);
        const std::size_t draws = batch_size_ - batch.entries.size();
        for (std::size_t d = 0; d < draws; ++d) {
            const Triplet& t = originals_[pick(rng_)];
            if (targets.insert(t.target_id).second) {
                batch.entries.push_back({EntryRole::original, t.query_id, t.reference_id, t.instruction, t.target_id, {}});
            }
        }
        return batch;
    }

    std::size_t group_count() const { return groups_.size(); }

private:
    struct Group {
        std::size_t original;
        std::vector<CorrectiveTriplet> members;
    };

    void fill_groups(MicroBatch& batch, std::unordered_set<ItemId>& targets, std::size_t group_slots)
    {
        // at most one pass over the groups per batch
        for (std::size_t attempts = 0; attempts < groups_.size(); ++attempts) {
            if (batch.entries.size() + 2 > group_slots) {
                break;
            }
            if (cursor_ == order_.size()) {
                order_.resize(groups_.size());
                for (std::size_t i = 0; i < order_.size(); ++i) {
                    order_[i] = i;
                }
                std::shuffle(order_.begin(), order_.end(), rng_);
                cursor_ = 0;
            }
            const Group& g = groups_[order_[cursor_++]];
            const Triplet& t = originals_[g.original];
            if (targets.count(t.target_id) != 0) {
                continue;
            }
            targets.insert(t.target_id);
            const std::size_t head = batch.entries.size();
            batch.entries.push_back({EntryRole::original, t.query_id, t.reference_id, t.instruction, t.target_id, {}});
            for (const auto& c : g.members) {
                if (batch.entries.size() >= group_slots) {
                    break;
                }
                if (!targets.insert(c.informative_id).second) {
                    continue;
                }
                batch.entries[head].negatives.push_back(batch.entries.size());
                batch.entries.push_back({correctives_as_queries_ ? EntryRole::corrective : EntryRole::negative_only,
                                         c.parent_query_id, c.reference_id, c.corrected_instruction, c.informative_id,
                                         {}});
            }
        }
    }

    std::vector<Triplet> originals_;
    std::vector<Group> groups_;
    std::size_t batch_size_;
    double fraction_;
    bool correctives_as_queries_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

/// Materializes a batch against world features.
inline LossBatch to_loss_batch(const MicroBatch& batch, const World& world)
{
    LossBatch out;
    std::vector<std::size_t> target_slot(batch.entries.size());
    for (std::size_t i = 0; i < batch.entries.size(); ++i) {
        target_slot[i] = out.targets.size();
        out.targets.push_back(world.image_feature(batch.entries[i].target_id));
    }
    for (std::size_t i = 0; i < batch.entries.size(); ++i) {
        const auto& e = batch.entries[i];
        if (e.role == EntryRole::negative_only) {
            continue;
        }
        BatchQuery q;
        q.image = world.image_feature(e.reference_id);
        q.text = world.text_feature(e.instruction);
        q.positive = target_slot[i];
        for (auto n : e.negatives) {
            q.negatives.push_back(target_slot[n]);
        }
        out.queries.push_back(std::move(q));
    }
    return out;
}

struct StepRecord {
    std::size_t step = 0;
    double loss_total = 0.0;
    double loss_infonce = 0.0;
    double loss_triplet = 0.0;

    bool operator==(const StepRecord&) const = default;
};

struct TrainingLog {
    std::vector<StepRecord> steps;
    std::string snapshot_id;

    bool operator==(const TrainingLog&) const = default;
};

/// Content hash of the parameters, hex.
inline std::string snapshot_id(const EncoderParameters& params)
{
    std::uint64_t h = fnv1a64("recall-encoder");
    for_each_parameter(params, [&h](const double& x) {
        h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&x), sizeof x), h);
    });
    return hex64(h);
}

struct TrainResult {
    EncoderParameters params;
    TrainingLog log;
};

/// Plain gradient descent over the batch stream.
inline TrainResult run_training(EncoderParameters params, MicroBatchStream& stream, const World& world,
                                const TrainConfig& cfg)
{
    cfg.validate();
    validate(params);
    TrainResult result;
    result.log.steps.reserve(cfg.steps);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const LossBatch batch = to_loss_batch(stream.next(), world);
        const Gradients g = total_loss(params, batch, cfg.loss);
        if (!std::isfinite(g.parts.total)) {
            throw DivergenceError("non-finite loss at step " + std::to_string(step));
        }
        result.log.steps.push_back({step, g.parts.total, g.parts.infonce, g.parts.triplet});
        auto p = parameter_refs(params);
        std::size_t k = 0;
        bool finite = true;
        for_each_parameter(g.grad, [&](const double& d) {
            double& x = *p[k++];
            x -= cfg.learning_rate * d;
            finite = finite && std::isfinite(x);
        });
        if (!finite) {
            throw DivergenceError("non-finite parameter after step " + std::to_string(step));
        }
    }
    result.log.snapshot_id = snapshot_id(params);
    result.params = std::move(params);
    return result;
}

/// Stage 1: InfoNCE-only adaptation (lambda forced to 0, no micro-groups).
inline TrainResult train_base(const EncoderParameters& init, const World& world, const std::vector<Triplet>& triplets,
                              TrainConfig cfg)
{
    cfg.loss.lambda = 0.0;
    cfg.validate();
    MicroBatchStream stream(triplets, {}, cfg);
    return run_training(init, stream, world, cfg);
}

/// Stage 4: continues from the base snapshot on micro-batches under
/// L_infoNCE + lambda * L_triplet.
inline TrainResult refine(const EncoderParameters& base, const World& world, const std::vector<Triplet>& originals,
                          const std::vector<CorrectiveTriplet>& kept_correctives, const TrainConfig& cfg)
{
    cfg.validate();
    MicroBatchStream stream(originals, kept_correctives, cfg);
    return run_training(base, stream, world, cfg);
}

} // namespace recall

#endif
