#ifndef RECALL_IDS_HPP
#define RECALL_IDS_HPP

#include <cstdint>
#include <string>

namespace recall
{

enum class ItemId : std::uint32_t {};
enum class QueryId : std::uint32_t {};

constexpr std::uint32_t to_underlying(ItemId id) { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t to_underlying(QueryId id) { return static_cast<std::uint32_t>(id); }

inline std::string to_string(ItemId id) { return "item:" + std::to_string(to_underlying(id)); }
inline std::string to_string(QueryId id) { return "query:" + std::to_string(to_underlying(id)); }

/// (reference, instruction, target): one composed-retrieval supervision unit.
struct Triplet {
    QueryId query_id{};
    ItemId reference_id{};
    std::string instruction;
    ItemId target_id{};

    bool operator==(const Triplet&) const = default;
};

} // namespace recall

#endif
