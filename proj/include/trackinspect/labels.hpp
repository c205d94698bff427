#pragma once
#include <compare>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace trackinspect {

enum class ComponentKind { Block, Screw, Washer, Connector };

// One of the 49 inventory items on the model track: 9 blocks, 18 screws,
// 18 washers and 4 connectors.  Blocks are addressed by tie alone ("5B");
// everything else by rail and tie ("1-7S", "2-9C").  Connectors exist only
// at ties 1 and 9.
struct ComponentId {
  ComponentKind kind = ComponentKind::Block;
  int rail = 0;  // 1 or 2; 0 for blocks
  int tie = 0;   // 1..9

  auto operator<=>(const ComponentId&) const = default;
};

using DefectSet = std::set<ComponentId>;

char kind_letter(ComponentKind kind);
ComponentKind kind_from_letter(char c);

// Parses a canonical label such as "8B" or "1-7S".  Throws
// std::invalid_argument on malformed text, bad rail/tie digits, or a
// connector tie other than 1 or 9.
ComponentId parse_component_label(std::string_view text);
std::string format_component_label(const ComponentId& id);

// The full 49-component inventory in canonical order.
const std::vector<ComponentId>& inventory();
const DefectSet& inventory_set();

}  // namespace trackinspect
