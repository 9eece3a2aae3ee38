#ifndef RECALL_TESTS_SUPPORT_HPP
#define RECALL_TESTS_SUPPORT_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "recall/encoder.hpp"
#include "recall/losses.hpp"
#include "recall/world.hpp"

namespace recall::fixtures
{

inline Vector random_vector(std::mt19937_64& rng, std::size_t dim, double scale = 1.0)
{
    std::normal_distribution<double> n(0.0, scale);
    Vector v(dim);
    for (auto& x : v) {
        x = n(rng);
    }
    return v;
}

/// Random two-tower encoder plus a batch where every query has a positive
/// and, for some queries, triplet negatives.
struct RandomInstance {
    EncoderParameters params;
    LossBatch batch;
};

inline RandomInstance random_instance(std::uint64_t seed, std::size_t max_dim = 32, std::size_t max_batch = 8)
{
    std::mt19937_64 rng(seed);
    auto pick = [&rng](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
    EncoderShape shape;
    shape.image_dim = pick(2, max_dim / 2);
    shape.text_dim = pick(2, max_dim / 2);
    shape.hidden = {pick(2, max_dim)};
    shape.embedding_dim = pick(2, max_dim);
    RandomInstance inst{init_encoder(shape, seed ^ 0x5eed), {}};

    const std::size_t nt = pick(2, max_batch);
    for (std::size_t j = 0; j < nt; ++j) {
        inst.batch.targets.push_back(random_vector(rng, shape.image_dim));
    }
    const std::size_t nq = pick(1, nt);
    for (std::size_t i = 0; i < nq; ++i) {
        BatchQuery q;
        q.image = random_vector(rng, shape.image_dim);
        q.text = random_vector(rng, shape.text_dim);
        q.positive = i;
        if (pick(0, 1) == 1) {
            for (std::size_t j = 0; j < nt; ++j) {
                if (j != i && pick(0, 2) == 0) {
                    q.negatives.push_back(j);
                }
            }
        }
        inst.batch.queries.push_back(std::move(q));
    }
    return inst;
}

inline WorldSpec small_world_spec(std::uint64_t seed = 11)
{
    WorldSpec s;
    s.num_items = 300;
    s.num_queries = 160;
    s.seed = seed;
    return s;
}

/// A synthetic original triplet plus the candidate handed to the generator.
struct GenerationJob {
    Triplet original;
    ItemId informative;
};

/// n random generation jobs over w. With synthesized == 0 the candidate just
/// has to need at least one edit; otherwise it differs from the reference in
/// exactly that many slots, none of them named by the one-intent instruction,
/// so the generator must synthesize that many fresh edits.
inline std::vector<GenerationJob> generation_jobs(const World& w, std::size_t n, std::uint64_t seed,
                                                  std::size_t synthesized = 0)
{
    std::mt19937_64 rng(seed);
    const Grammar g = w.grammar();
    const std::size_t A = w.spec.num_attributes;
    const std::size_t V = w.spec.values_per_attribute;
    std::uniform_int_distribution<std::uint32_t> item(0, static_cast<std::uint32_t>(w.items.size() - 1));
    std::vector<GenerationJob> jobs;
    while (jobs.size() < n) {
        const ItemId ref{item(rng)};
        const ItemId cand{item(rng)};
        const auto& ra = w.item(ref).attributes;
        const auto& ca = w.item(cand).attributes;
        const auto diff = attribute_diff(ra, ca);
        if (diff.empty() || (synthesized > 0 && diff.size() != synthesized)) {
            continue;
        }
        std::vector<Edit> edits;
        if (synthesized > 0) {
            std::vector<std::size_t> same;
            for (std::size_t s = 0; s < A; ++s) {
                if (ra[s] == ca[s]) {
                    same.push_back(s);
                }
            }
            const std::size_t s = same[rng() % same.size()];
            edits.push_back({s, (ra[s] + 1 + rng() % (V - 1)) % V});
        } else {
            for (std::size_t s = 0; s < A; ++s) {
                if (rng() % 3 == 0) {
                    edits.push_back({s, (ra[s] + 1 + rng() % (V - 1)) % V});
                }
            }
            if (edits.empty() || apply_edits(ra, edits) == ca) {
                continue;
            }
        }
        const auto qid = QueryId{static_cast<std::uint32_t>(jobs.size())};
        jobs.push_back({{qid, ref, g.render(edits), ref}, cand});
    }
    return jobs;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir
{
public:
    explicit TempDir(const std::string& tag)
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("recall-" + tag + "-" + std::to_string(rd()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace recall::fixtures

#endif
