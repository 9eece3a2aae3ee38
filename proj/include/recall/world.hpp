#ifndef RECALL_WORLD_HPP
#define RECALL_WORLD_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "ids.hpp"
#include "vector_math.hpp"

namespace recall
{

/// Parameters of a synthetic compositional world.
///
/// Items are attribute vectors (num_attributes slots, values_per_attribute
/// values each). Every query edits `edits_per_query` slots of a reference
/// item; the exact-edit target and `confusables_per_query` near-miss
/// distractors are materialized as extra gallery items. The last
/// `test_fraction` of the queries form the held-out split.
struct WorldSpec {
    std::size_t num_attributes = 6;
    std::size_t values_per_attribute = 5;
    std::size_t num_items = 2000;
    std::size_t num_queries = 1000;
    std::size_t edits_per_query = 1;
    std::size_t confusables_per_query = 3;
    double feature_noise_sigma = 0.05;
    double test_fraction = 0.2;
    std::uint64_t seed = 7;

    bool operator==(const WorldSpec&) const = default;
};

inline constexpr std::size_t kSubsetSize = 6;

inline void validate(const WorldSpec& spec)
{
    auto fail = [](const std::string& msg) { throw ArgumentError("inconsistent world spec: " + msg); };
    if (spec.num_attributes < 2) {
        fail("num_attributes must be >= 2");
    }
    if (spec.values_per_attribute < 3) {
        // two values leave no wrong-but-new value for a confusable
        fail("values_per_attribute must be >= 3");
    }
    if (spec.edits_per_query < 1 || spec.edits_per_query > spec.num_attributes) {
        fail("edits_per_query must be in [1, num_attributes]");
    }
    if (spec.confusables_per_query < 1) {
        fail("confusables_per_query must be >= 1");
    }
    if (spec.confusables_per_query > spec.edits_per_query * (spec.values_per_attribute - 2)) {
        fail("not enough distinct near-miss assignments for confusables_per_query");
    }
    if (1 + spec.confusables_per_query > kSubsetSize) {
        fail("target plus confusables exceed the candidate subset size");
    }
    if (spec.num_items < kSubsetSize + 1) {
        fail("num_items too small to fill candidate subsets");
    }
    if (spec.num_queries < 1) {
        fail("num_queries must be >= 1");
    }
    if (!(spec.feature_noise_sigma >= 0.0)) {
        fail("feature_noise_sigma must be >= 0");
    }
    if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0)) {
        fail("test_fraction must be in [0, 1)");
    }
}

using Attributes = std::vector<std::uint8_t>;

struct Item {
    ItemId id{};
    Attributes attributes;
    Vector image_feature;
};

/// One atomic intent: set `slot` to `value`.
struct Edit {
    std::size_t slot = 0;
    std::size_t value = 0;

    bool operator==(const Edit&) const = default;
    auto operator<=>(const Edit&) const = default;
};

enum class Split { train, test };

/// Text grammar of the world: "make <slot> v<value>" intents joined by "and".
class Grammar
{
public:
    Grammar() = default;
    Grammar(std::size_t num_attributes, std::size_t values_per_attribute)
        : num_attributes_(num_attributes), values_per_attribute_(values_per_attribute)
    {
    }

    std::size_t num_attributes() const { return num_attributes_; }
    std::size_t values_per_attribute() const { return values_per_attribute_; }

    std::string slot_name(std::size_t slot) const
    {
        static constexpr std::string_view names[] = {"color", "shape", "size", "texture", "pattern", "material"};
        if (slot < std::size(names)) {
            return std::string(names[slot]);
        }
        return "attr" + std::to_string(slot);
    }

    std::string value_name(std::size_t value) const { return "v" + std::to_string(value); }

    std::string render_intent(const Edit& e) const { return "make " + slot_name(e.slot) + " " + value_name(e.value); }

    std::string render(const std::vector<Edit>& edits) const
    {
        std::string out;
        for (std::size_t i = 0; i < edits.size(); ++i) {
            if (i > 0) {
                out += " and ";
            }
            out += render_intent(edits[i]);
        }
        return out;
    }

    /// Splits an instruction into its intent phrases.
    std::vector<std::string> split_intents(std::string_view text) const
    {
        std::vector<std::string> out;
        const std::string_view sep = " and ";
        while (!text.empty()) {
            const auto pos = text.find(sep);
            out.emplace_back(text.substr(0, pos));
            if (pos == std::string_view::npos) {
                break;
            }
            text.remove_prefix(pos + sep.size());
        }
        return out;
    }

    std::optional<Edit> parse_intent(std::string_view phrase) const
    {
        std::istringstream in{std::string(phrase)};
        std::string verb, slot, value, extra;
        if (!(in >> verb >> slot >> value) || (in >> extra) || verb != "make") {
            return std::nullopt;
        }
        auto s = parse_slot(slot);
        auto v = parse_value(value);
        if (!s || !v) {
            return std::nullopt;
        }
        return Edit{*s, *v};
    }

    /// Inverse of render. Throws DataError on empty text, text outside the
    /// grammar, or repeated slots.
    std::vector<Edit> parse(std::string_view text) const
    {
        if (text.empty()) {
            throw DataError("empty instruction");
        }
        std::vector<Edit> edits;
        for (const auto& phrase : split_intents(text)) {
            auto e = parse_intent(phrase);
            if (!e) {
                throw DataError("instruction outside world grammar: '" + std::string(text) + "'");
            }
            for (const auto& prev : edits) {
                if (prev.slot == e->slot) {
                    throw DataError("instruction edits a slot twice: '" + std::string(text) + "'");
                }
            }
            edits.push_back(*e);
        }
        return edits;
    }

    /// Yes/no question verifying one intent against a candidate image.
    std::string question_for(const Edit& e) const { return "is the " + slot_name(e.slot) + " " + value_name(e.value) + "?"; }

    std::optional<Edit> parse_question(std::string_view q) const
    {
        if (q.size() < 8 || q.substr(0, 7) != "is the " || q.back() != '?') {
            return std::nullopt;
        }
        q.remove_prefix(7);
        q.remove_suffix(1);
        return parse_intent("make " + std::string(q));
    }

private:
    std::optional<std::size_t> parse_slot(const std::string& name) const
    {
        for (std::size_t s = 0; s < num_attributes_; ++s) {
            if (slot_name(s) == name) {
                return s;
            }
        }
        return std::nullopt;
    }

    std::optional<std::size_t> parse_value(const std::string& name) const
    {
        if (name.size() < 2 || name.size() > 10 || name[0] != 'v') {
            return std::nullopt;
        }
        std::size_t v = 0;
        for (std::size_t i = 1; i < name.size(); ++i) {
            if (name[i] < '0' || name[i] > '9') {
                return std::nullopt;
            }
            v = v * 10 + static_cast<std::size_t>(name[i] - '0');
        }
        if (v >= values_per_attribute_) {
            return std::nullopt;
        }
        return v;
    }

    std::size_t num_attributes_ = 0;
    std::size_t values_per_attribute_ = 0;
};

struct World {
    WorldSpec spec;
    std::vector<Item> items; // items[i].id == ItemId{i}
    std::vector<Triplet> queries;
    std::vector<std::vector<ItemId>> subsets; // aligned with queries
    std::vector<Split> splits;                // aligned with queries

    Grammar grammar() const { return Grammar(spec.num_attributes, spec.values_per_attribute); }

    std::size_t image_dim() const { return spec.num_attributes * spec.values_per_attribute; }
    std::size_t text_dim() const { return spec.num_attributes * spec.values_per_attribute; }

    const Item& item(ItemId id) const
    {
        const auto idx = to_underlying(id);
        if (idx >= items.size()) {
            throw DataError("unknown " + to_string(id));
        }
        return items[idx];
    }

    const Vector& image_feature(ItemId id) const { return item(id).image_feature; }

    /// Multi-hot over (slot, value) pairs of the parsed instruction.
    Vector text_feature(std::string_view instruction) const
    {
        Vector out(text_dim(), 0.0);
        for (const auto& e : grammar().parse(instruction)) {
            out[e.slot * spec.values_per_attribute + e.value] = 1.0;
        }
        return out;
    }

    std::vector<Triplet> queries_in(Split split) const
    {
        std::vector<Triplet> out;
        for (std::size_t q = 0; q < queries.size(); ++q) {
            if (splits[q] == split) {
                out.push_back(queries[q]);
            }
        }
        return out;
    }
};

inline Vector render_image_feature(const Attributes& attrs, std::size_t values_per_attribute, double sigma,
                                   std::mt19937_64& rng)
{
    Vector f(attrs.size() * values_per_attribute, 0.0);
    for (std::size_t s = 0; s < attrs.size(); ++s) {
        f[s * values_per_attribute + attrs[s]] = 1.0;
    }
    if (sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, sigma);
        for (auto& x : f) {
            x += noise(rng);
        }
    }
    return f;
}

/// Exact edits turning `from` into `to`, in slot order.
inline std::vector<Edit> attribute_diff(const Attributes& from, const Attributes& to)
{
    if (from.size() != to.size()) {
        throw ShapeError("attribute vectors of different length");
    }
    std::vector<Edit> edits;
    for (std::size_t s = 0; s < from.size(); ++s) {
        if (from[s] != to[s]) {
            edits.push_back({s, to[s]});
        }
    }
    return edits;
}

inline std::vector<Edit> ground_truth_diff(const World& world, ItemId from, ItemId to)
{
    return attribute_diff(world.item(from).attributes, world.item(to).attributes);
}

inline Attributes apply_edits(Attributes attrs, const std::vector<Edit>& edits)
{
    for (const auto& e : edits) {
        if (e.slot >= attrs.size()) {
            throw DataError("edit slot out of range");
        }
        attrs[e.slot] = static_cast<std::uint8_t>(e.value);
    }
    return attrs;
}

inline bool satisfies(const Attributes& attrs, const Edit& e) { return e.slot < attrs.size() && attrs[e.slot] == e.value; }

/// Deterministic world generation from the spec.
inline World generate_world(const WorldSpec& spec)
{
    validate(spec);
    const std::size_t A = spec.num_attributes;
    const std::size_t V = spec.values_per_attribute;
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<std::size_t> value_dist(0, V - 1);

    World world;
    world.spec = spec;
    auto add_item = [&](Attributes attrs) {
        Item it;
        it.id = ItemId{static_cast<std::uint32_t>(world.items.size())};
        it.image_feature = render_image_feature(attrs, V, spec.feature_noise_sigma, rng);
        it.attributes = std::move(attrs);
        world.items.push_back(std::move(it));
        return world.items.back().id;
    };

    for (std::size_t i = 0; i < spec.num_items; ++i) {
        Attributes attrs(A);
        for (auto& a : attrs) {
            a = static_cast<std::uint8_t>(value_dist(rng));
        }
        add_item(std::move(attrs));
    }

    const Grammar grammar = world.grammar();
    std::uniform_int_distribution<std::size_t> base_dist(0, spec.num_items - 1);
    std::vector<std::size_t> slots(A);
    for (std::size_t q = 0; q < spec.num_queries; ++q) {
        const ItemId ref{static_cast<std::uint32_t>(base_dist(rng))};
        const Attributes ref_attrs = world.items[to_underlying(ref)].attributes;

        // partial Fisher-Yates for distinct edited slots
        std::iota(slots.begin(), slots.end(), std::size_t{0});
        for (std::size_t k = 0; k < spec.edits_per_query; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, A - 1);
            std::swap(slots[k], slots[pick(rng)]);
        }
        std::vector<Edit> edits;
        for (std::size_t k = 0; k < spec.edits_per_query; ++k) {
            const std::size_t s = slots[k];
            std::uniform_int_distribution<std::size_t> shift(1, V - 1);
            edits.push_back({s, (ref_attrs[s] + shift(rng)) % V});
        }
        std::sort(edits.begin(), edits.end());
        const Attributes target_attrs = apply_edits(ref_attrs, edits);
        const ItemId target = add_item(target_attrs);

        // near misses: one edited slot takes a value that is neither the
        // reference's nor the requested one
        std::vector<Edit> wrong;
        for (const auto& e : edits) {
            for (std::size_t v = 0; v < V; ++v) {
                if (v != e.value && v != ref_attrs[e.slot]) {
                    wrong.push_back({e.slot, v});
                }
            }
        }
        std::vector<ItemId> subset{target};
        for (std::size_t c = 0; c < spec.confusables_per_query; ++c) {
            std::uniform_int_distribution<std::size_t> pick(c, wrong.size() - 1);
            std::swap(wrong[c], wrong[pick(rng)]);
            subset.push_back(add_item(apply_edits(target_attrs, {wrong[c]})));
        }
        while (subset.size() < kSubsetSize) {
            const ItemId filler{static_cast<std::uint32_t>(base_dist(rng))};
            if (filler == ref || std::find(subset.begin(), subset.end(), filler) != subset.end()) {
                continue;
            }
            subset.push_back(filler);
        }
        std::shuffle(subset.begin(), subset.end(), rng);

        world.queries.push_back(
            Triplet{QueryId{static_cast<std::uint32_t>(q)}, ref, grammar.render(edits), target});
        world.subsets.push_back(std::move(subset));
    }

    const auto num_test = static_cast<std::size_t>(static_cast<double>(spec.num_queries) * spec.test_fraction);
    world.splits.assign(spec.num_queries, Split::train);
    for (std::size_t q = spec.num_queries - num_test; q < spec.num_queries; ++q) {
        world.splits[q] = Split::test;
    }
    return world;
}

} // namespace recall

#endif
